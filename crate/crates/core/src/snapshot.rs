//! Versioned text snapshot of a [`MemoryState`].
//!
//! ```text
//! engram-snapshot v1
//! config dim=2 n_wm=50 stm_capacity=400 n_stm_rem=50 n_ltm_rem=50 n_depth=10 initial_lifespan=9 alpha=8
//! state step=12 next_id=600 reset_pending=0
//! engram id=553 tier=stm created=11 fires=1 lifespan=7 vector=0.25,-1.5
//! count 553 554 1
//! ```
//!
//! Engram lines list working memory in order, then short-term memory oldest
//! first, then long-term memory by id. `count i j c` lines hold the directed
//! off-diagonal counts sorted by `(i, j)`; the diagonal is `fires`. Reals use
//! the shortest round-tripping representation, so save/load is lossless and
//! equal states produce identical bytes.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::config::Config;
use crate::engram::{EngramId, Tier};
use crate::error::FormatError;
use crate::store::{EngramRecord, MemoryState};

pub const SNAPSHOT_MAGIC: &str = "engram-snapshot v1";

pub fn to_text(state: &MemoryState) -> String {
    let mut out = String::new();
    writeln!(out, "{SNAPSHOT_MAGIC}").unwrap();
    writeln!(out, "config {}", state.config().to_kv()).unwrap();
    writeln!(
        out,
        "state step={} next_id={} reset_pending={}",
        state.step_index(),
        state.next_id(),
        u8::from(state.reset_pending())
    )
    .unwrap();
    let order = state
        .wm()
        .iter()
        .chain(state.stm())
        .chain(state.ltm())
        .copied();
    for id in order {
        let e = state.engram(id).expect("tier lists only live engrams");
        write!(
            out,
            "engram id={} tier={} created={} fires={} lifespan={} vector=",
            e.id, e.tier, e.creation_step, e.fire_count, e.lifespan
        )
        .unwrap();
        for (n, x) in e.vector.iter().enumerate() {
            if n > 0 {
                out.push(',');
            }
            write!(out, "{x}").unwrap();
        }
        out.push('\n');
    }
    for (i, j, c) in state.graph().entries() {
        writeln!(out, "count {i} {j} {c}").unwrap();
    }
    out
}

pub fn write<W: Write>(state: &MemoryState, out: &mut W) -> io::Result<()> {
    out.write_all(to_text(state).as_bytes())
}

pub fn parse(text: &str) -> Result<MemoryState, FormatError> {
    read(text.as_bytes())
}

fn fields(rest: &str, keys: &[&str]) -> Result<Vec<String>, String> {
    let tokens: Vec<&str> = rest.split_whitespace().collect();
    if tokens.len() != keys.len() {
        return Err(format!("expected {} fields, found {}", keys.len(), tokens.len()));
    }
    tokens
        .iter()
        .zip(keys)
        .map(|(t, k)| {
            t.strip_prefix(k)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_owned)
                .ok_or_else(|| format!("expected `{k}=`, found `{t}`"))
        })
        .collect()
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| format!("bad {what} `{s}`: {e}"))
}

pub fn read<R: BufRead>(input: R) -> Result<MemoryState, FormatError> {
    let mut config: Option<Config> = None;
    let mut header: Option<(u64, u64, bool)> = None;
    let mut engrams = Vec::new();
    let mut counts = Vec::new();
    let mut saw_magic = false;

    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let err = |msg: String| FormatError::parse(lineno, msg);
        if line.trim().is_empty() {
            continue;
        }
        if !saw_magic {
            if line.trim_end() != SNAPSHOT_MAGIC {
                return Err(err(format!("expected `{SNAPSHOT_MAGIC}`")));
            }
            saw_magic = true;
            continue;
        }
        let (kind, rest) = line.split_once(' ').unwrap_or((line.as_str(), ""));
        match kind {
            "config" => config = Some(Config::from_kv(rest).map_err(err)?),
            "state" => {
                let f = fields(rest, &["step", "next_id", "reset_pending"]).map_err(err)?;
                let reset = match f[2].as_str() {
                    "0" => false,
                    "1" => true,
                    other => return Err(err(format!("bad reset_pending `{other}`"))),
                };
                header = Some((
                    num(&f[0], "step").map_err(err)?,
                    num(&f[1], "next_id").map_err(err)?,
                    reset,
                ));
            }
            "engram" => {
                let f = fields(
                    rest,
                    &["id", "tier", "created", "fires", "lifespan", "vector"],
                )
                .map_err(err)?;
                let vector = f[5]
                    .split(',')
                    .filter(|t| !t.is_empty())
                    .map(|t| num::<f64>(t, "component"))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(err)?;
                engrams.push(EngramRecord {
                    id: EngramId(num(&f[0], "id").map_err(err)?),
                    tier: f[1].parse::<Tier>().map_err(err)?,
                    creation_step: num(&f[2], "created").map_err(err)?,
                    fire_count: num(&f[3], "fires").map_err(err)?,
                    lifespan: num(&f[4], "lifespan").map_err(err)?,
                    vector,
                });
            }
            "count" => {
                let t: Vec<&str> = rest.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(err("count lines need `i j count`".into()));
                }
                counts.push((
                    EngramId(num(t[0], "id").map_err(err)?),
                    EngramId(num(t[1], "id").map_err(err)?),
                    num(t[2], "count").map_err(err)?,
                ));
            }
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }
    let config = config.ok_or_else(|| FormatError::parse(0, "missing config line"))?;
    let (step, next_id, reset) =
        header.ok_or_else(|| FormatError::parse(0, "missing state line"))?;
    Ok(MemoryState::restore(
        config, step, next_id, reset, engrams, counts,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifecycle::ContributionWeights;
    use crate::retrieval::RetrievalResult;

    #[test]
    fn round_trip_after_a_few_steps() {
        let config = Config {
            dim: 2,
            n_wm: 2,
            stm_capacity: 2,
            n_stm_rem: 1,
            n_ltm_rem: 1,
            n_depth: 1,
            initial_lifespan: 4.0,
            alpha: 1.5,
        };
        let mut s = MemoryState::new(config).unwrap();
        let mut src = |r: &RetrievalResult, _: &MemoryState| ContributionWeights::uniform(&r.rem());
        for t in 0..6 {
            let x = t as f64 * 0.1;
            s.step(&[vec![x, 1.0 / 3.0], vec![-x, 0.7]], &mut src).unwrap();
        }
        let text = to_text(&s);
        let back = parse(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(to_text(&back), text);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("nope\n").is_err());
        let bad = format!("{SNAPSHOT_MAGIC}\nconfig dim=1\nstate step=0 next_id=1 reset_pending=0\nengram id=5 tier=wm created=0 fires=0 lifespan=1 vector=0\n");
        assert!(parse(&bad).is_err());
    }
}
