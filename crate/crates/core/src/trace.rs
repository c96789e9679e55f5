//! Line-oriented step trace.
//!
//! ```text
//! # engram-trace v1
//! # config dim=16 n_wm=50 stm_capacity=400 n_stm_rem=50 n_ltm_rem=50 n_depth=10 initial_lifespan=9 alpha=8
//! step=0<TAB>reset=0<TAB>created=0,1<TAB>stm_rem=<TAB>ltm_rem=<TAB>ltm_found=<TAB>inc=<TAB>pruned=<TAB>to_ltm=<TAB>stm=2<TAB>ltm=0<TAB>lifespan=16
//! ```
//!
//! One record per step, fields tab separated in the fixed order above.
//! Id lists are comma separated; `stm_rem`, `ltm_rem` and `inc` hold
//! `id:value` pairs. Reals use the shortest representation that parses back
//! to the same `f64`. Lines starting with `#` are comments except the
//! `config` header.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::config::Config;
use crate::engram::EngramId;
use crate::error::FormatError;
use crate::lifecycle::StepReport;
use crate::retrieval::RetrievalResult;

pub const TRACE_MAGIC: &str = "# engram-trace v1";

const FIELDS: [&str; 12] = [
    "step", "reset", "created", "stm_rem", "ltm_rem", "ltm_found", "inc", "pruned", "to_ltm",
    "stm", "ltm", "lifespan",
];

/// A parsed trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceLog {
    pub config: Option<Config>,
    pub records: Vec<StepReport>,
}

impl TraceLog {
    pub fn new(config: Config) -> Self {
        TraceLog {
            config: Some(config),
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Creation step of every engram the trace mentions as created.
    pub fn creation_steps(&self) -> BTreeMap<EngramId, u64> {
        self.records
            .iter()
            .flat_map(|r| r.created.iter().map(move |&id| (id, r.step)))
            .collect()
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut writer = TraceWriter::new(out, self.config.as_ref())?;
        for r in &self.records {
            writer.record(r)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        Self::read_from(text.as_bytes())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, FormatError> {
        let mut log = TraceLog::default();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(kv) = comment.trim_start().strip_prefix("config ") {
                    let config =
                        Config::from_kv(kv).map_err(|e| FormatError::parse(lineno, e))?;
                    log.config = Some(config);
                }
                continue;
            }
            let record = parse_record(&line).map_err(|e| FormatError::parse(lineno, e))?;
            if let Some(prev) = log.records.last() {
                if record.step <= prev.step {
                    return Err(FormatError::parse(
                        lineno,
                        format!("step {} does not follow step {}", record.step, prev.step),
                    ));
                }
            }
            log.records.push(record);
        }
        Ok(log)
    }
}

/// Streams records to a writer as steps complete.
pub struct TraceWriter<W: Write> {
    out: W,
    line: String,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, config: Option<&Config>) -> io::Result<Self> {
        writeln!(out, "{TRACE_MAGIC}")?;
        if let Some(c) = config {
            writeln!(out, "# config {}", c.to_kv())?;
        }
        Ok(TraceWriter {
            out,
            line: String::new(),
        })
    }

    pub fn record(&mut self, r: &StepReport) -> io::Result<()> {
        self.line.clear();
        format_record(&mut self.line, r);
        self.out.write_all(self.line.as_bytes())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

fn push_ids(buf: &mut String, ids: &[EngramId]) {
    for (n, id) in ids.iter().enumerate() {
        if n > 0 {
            buf.push(',');
        }
        write!(buf, "{id}").unwrap();
    }
}

fn push_pairs<'a>(buf: &mut String, pairs: impl Iterator<Item = (EngramId, &'a f64)>) {
    for (n, (id, v)) in pairs.enumerate() {
        if n > 0 {
            buf.push(',');
        }
        write!(buf, "{id}:{v}").unwrap();
    }
}

/// Appends one newline-terminated record.
pub fn format_record(buf: &mut String, r: &StepReport) {
    let scored = |ids: &[EngramId]| -> Vec<(EngramId, f64)> {
        ids.iter().map(|id| (*id, r.retrieved.scores[id])).collect()
    };
    write!(buf, "step={}\treset={}\tcreated=", r.step, u8::from(r.reset)).unwrap();
    push_ids(buf, &r.created);
    buf.push_str("\tstm_rem=");
    let stm = scored(&r.retrieved.stm_rem);
    push_pairs(buf, stm.iter().map(|(id, v)| (*id, v)));
    buf.push_str("\tltm_rem=");
    let ltm = scored(&r.retrieved.ltm_rem);
    push_pairs(buf, ltm.iter().map(|(id, v)| (*id, v)));
    buf.push_str("\tltm_found=");
    push_ids(buf, &r.retrieved.ltm_found);
    buf.push_str("\tinc=");
    push_pairs(buf, r.increments.iter().map(|(id, v)| (*id, v)));
    buf.push_str("\tpruned=");
    push_ids(buf, &r.pruned);
    buf.push_str("\tto_ltm=");
    push_ids(buf, &r.promoted_to_ltm);
    writeln!(
        buf,
        "\tstm={}\tltm={}\tlifespan={}",
        r.stm_len, r.ltm_len, r.total_lifespan
    )
    .unwrap();
}

fn parse_ids(s: &str) -> Result<Vec<EngramId>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.parse().map_err(|e| format!("bad id `{t}`: {e}")))
        .collect()
}

fn parse_pairs(s: &str) -> Result<Vec<(EngramId, f64)>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let (id, v) = t
                .split_once(':')
                .ok_or_else(|| format!("expected id:value, got `{t}`"))?;
            let id = id.parse().map_err(|e| format!("bad id `{id}`: {e}"))?;
            let v = v.parse().map_err(|e| format!("bad value `{v}`: {e}"))?;
            Ok((id, v))
        })
        .collect()
}

fn parse_record(line: &str) -> Result<StepReport, String> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != FIELDS.len() {
        return Err(format!(
            "expected {} fields, found {}",
            FIELDS.len(),
            parts.len()
        ));
    }
    let mut values = [""; 12];
    for (slot, (part, key)) in values.iter_mut().zip(parts.iter().zip(FIELDS)) {
        *slot = part
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| format!("expected field `{key}`, found `{part}`"))?;
    }
    let num = |s: &str, key: &str| -> Result<u64, String> {
        s.parse().map_err(|e| format!("bad {key} `{s}`: {e}"))
    };
    let reset = match values[1] {
        "0" => false,
        "1" => true,
        other => return Err(format!("bad reset flag `{other}`")),
    };
    let created = parse_ids(values[2])?;
    let stm = parse_pairs(values[3])?;
    let ltm = parse_pairs(values[4])?;
    let mut scores = BTreeMap::new();
    for &(id, s) in stm.iter().chain(&ltm) {
        if scores.insert(id, s).is_some() {
            return Err(format!("engram {id} retrieved twice"));
        }
    }
    let retrieved = RetrievalResult {
        wm: created.clone(),
        stm_rem: stm.iter().map(|p| p.0).collect(),
        ltm_rem: ltm.iter().map(|p| p.0).collect(),
        ltm_found: parse_ids(values[5])?,
        scores,
    };
    Ok(StepReport {
        step: num(values[0], "step")?,
        reset,
        created,
        retrieved,
        increments: parse_pairs(values[6])?.into_iter().collect(),
        pruned: parse_ids(values[7])?,
        promoted_to_ltm: parse_ids(values[8])?,
        stm_len: num(values[9], "stm")? as usize,
        ltm_len: num(values[10], "ltm")? as usize,
        total_lifespan: values[11]
            .parse()
            .map_err(|e| format!("bad lifespan `{}`: {e}", values[11]))?,
    })
}
