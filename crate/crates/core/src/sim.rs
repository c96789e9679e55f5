//! Run manifests and the simulation driver.
//!
//! A manifest is a flat list of keys, written either as `key = value` lines
//! (`#` starts a comment) or as one JSON object with the same keys:
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `dim`, `n_wm`, `stm_capacity`, `n_stm_rem`, `n_ltm_rem`, `n_depth`, `initial_lifespan`, `alpha` | see [`Config`] | engine config |
//! | `workload` | `iid-gaussian` | `iid-gaussian`, `clustered-topics`, `drifting`, `motif-replay` |
//! | `steps` | 1000 | number of steps |
//! | `vectors_per_step` | 50 | inputs per step, at most `n_wm` |
//! | `scale`, `spread`, `clusters`, `drift`, `motif_period` | see [`WorkloadSpec`] | workload shape |
//! | `contribution` | `uniform` | `uniform`, `correlation-softmax`, `oracle-task` |
//! | `temperature`, `threshold` | 0.1, 0.9 | contribution model knobs |
//! | `reset_period` | 0 | reset the engine before every multiple of this step (0 = never) |
//! | `wiring` | `hebbian` | `hebbian` or `random` (ablation) |
//! | `seed` | 0 | seeds the workload and random wiring |
//! | `out` | none | output directory |

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::analysis::{generate_workload, ContributionKind, ContributionModel, Stream, WorkloadKind, WorkloadSpec};
use crate::config::Config;
use crate::error::{FormatError, Result};
use crate::lifecycle::{ContributionSource, StepReport, Wiring};
use crate::store::MemoryState;
use crate::trace::TraceLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WiringMode {
    #[default]
    Hebbian,
    Random,
}

/// Everything needed to reproduce a run byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: Config,
    pub workload: WorkloadSpec,
    pub contribution: ContributionModel,
    pub reset_period: u64,
    pub wiring: WiringMode,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunManifest {
    fn default() -> Self {
        ManifestFile::default().into_manifest()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ManifestFile {
    dim: usize,
    n_wm: usize,
    stm_capacity: usize,
    n_stm_rem: usize,
    n_ltm_rem: usize,
    n_depth: usize,
    initial_lifespan: f64,
    alpha: f64,
    workload: WorkloadKind,
    steps: usize,
    vectors_per_step: usize,
    scale: f64,
    spread: f64,
    clusters: usize,
    drift: f64,
    motif_period: usize,
    contribution: ContributionKind,
    temperature: f64,
    threshold: f64,
    reset_period: u64,
    wiring: WiringMode,
    seed: u64,
    out: Option<PathBuf>,
}

impl Default for ManifestFile {
    fn default() -> Self {
        let c = Config::default();
        let w = WorkloadSpec::default();
        let m = ContributionModel::default();
        ManifestFile {
            dim: c.dim,
            n_wm: c.n_wm,
            stm_capacity: c.stm_capacity,
            n_stm_rem: c.n_stm_rem,
            n_ltm_rem: c.n_ltm_rem,
            n_depth: c.n_depth,
            initial_lifespan: c.initial_lifespan,
            alpha: c.alpha,
            workload: w.kind,
            steps: w.steps,
            vectors_per_step: w.vectors_per_step,
            scale: w.scale,
            spread: w.spread,
            clusters: w.clusters,
            drift: w.drift,
            motif_period: w.motif_period,
            contribution: m.kind,
            temperature: m.temperature,
            threshold: m.threshold,
            reset_period: 0,
            wiring: WiringMode::Hebbian,
            seed: 0,
            out: None,
        }
    }
}

impl ManifestFile {
    fn into_manifest(self) -> RunManifest {
        RunManifest {
            config: Config {
                dim: self.dim,
                n_wm: self.n_wm,
                stm_capacity: self.stm_capacity,
                n_stm_rem: self.n_stm_rem,
                n_ltm_rem: self.n_ltm_rem,
                n_depth: self.n_depth,
                initial_lifespan: self.initial_lifespan,
                alpha: self.alpha,
            },
            workload: WorkloadSpec {
                kind: self.workload,
                dim: self.dim,
                steps: self.steps,
                vectors_per_step: self.vectors_per_step,
                seed: self.seed,
                scale: self.scale,
                spread: self.spread,
                clusters: self.clusters,
                drift: self.drift,
                motif_period: self.motif_period,
            },
            contribution: ContributionModel {
                kind: self.contribution,
                temperature: self.temperature,
                threshold: self.threshold,
            },
            reset_period: self.reset_period,
            wiring: self.wiring,
            seed: self.seed,
            out: self.out,
        }
    }
}

fn kv_value(raw: &str) -> Value {
    let raw = raw.trim();
    if let Ok(n) = raw.parse::<u64>() {
        return Value::from(n);
    }
    if let Ok(n) = raw.parse::<i64>() {
        return Value::from(n);
    }
    if let Ok(x) = raw.parse::<f64>() {
        if x.is_finite() {
            return Value::from(x);
        }
    }
    let unquoted = raw
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .unwrap_or(raw);
    Value::from(unquoted)
}

impl RunManifest {
    /// Parses either encoding; JSON is recognised by a leading `{`.
    pub fn parse(text: &str) -> std::result::Result<Self, FormatError> {
        let value = if text.trim_start().starts_with('{') {
            serde_json::from_str::<Value>(text).map_err(|e| FormatError::parse(e.line(), e.to_string()))?
        } else {
            let mut map = Map::new();
            for (n, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| FormatError::parse(n + 1, format!("expected key = value, got `{line}`")))?;
                let key = key.trim();
                if map.insert(key.to_owned(), kv_value(value)).is_some() {
                    return Err(FormatError::parse(n + 1, format!("duplicate key `{key}`")));
                }
            }
            Value::Object(map)
        };
        let file: ManifestFile =
            serde_json::from_value(value).map_err(|e| FormatError::parse(0, e.to_string()))?;
        let manifest = file.into_manifest();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.workload.validate_for(&self.config)
    }

    /// Flat `key = value` rendering accepted by [`RunManifest::parse`].
    pub fn to_kv(&self) -> String {
        let c = &self.config;
        let w = &self.workload;
        let m = &self.contribution;
        let mut s = format!(
            "dim = {}\nn_wm = {}\nstm_capacity = {}\nn_stm_rem = {}\nn_ltm_rem = {}\nn_depth = {}\ninitial_lifespan = {}\nalpha = {}\n\
             workload = {}\nsteps = {}\nvectors_per_step = {}\nscale = {}\nspread = {}\nclusters = {}\ndrift = {}\nmotif_period = {}\n\
             contribution = {}\ntemperature = {}\nthreshold = {}\nreset_period = {}\nwiring = {}\nseed = {}\n",
            c.dim, c.n_wm, c.stm_capacity, c.n_stm_rem, c.n_ltm_rem, c.n_depth, c.initial_lifespan, c.alpha,
            kebab(&w.kind), w.steps, w.vectors_per_step, w.scale, w.spread, w.clusters, w.drift, w.motif_period,
            kebab(&m.kind), m.temperature, m.threshold, self.reset_period, kebab(&self.wiring), self.seed,
        );
        if let Some(out) = &self.out {
            s.push_str(&format!("out = {}\n", out.display()));
        }
        s
    }
}

fn kebab<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimOptions {
    pub reset_period: u64,
    pub wiring: WiringMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub state: MemoryState,
    pub log: TraceLog,
}

/// Relative error of `sum(Inc) = |rem| * alpha` for one step; zero when
/// nothing was retrieved.
pub fn conservation_error(report: &StepReport, alpha: f64) -> f64 {
    let expected = report.increments.len() as f64 * alpha;
    if expected == 0.0 {
        return report.increments.values().sum::<f64>().abs();
    }
    let got: f64 = report.increments.values().sum();
    (got - expected).abs() / expected
}

/// Feeds `stream` through a fresh engine, recording every step.
pub fn simulate(
    config: &Config,
    stream: &Stream,
    source: &mut dyn ContributionSource,
    opts: &SimOptions,
) -> Result<SimOutput> {
    simulate_with(config, stream, source, opts, |_, _| {})
}

/// Like [`simulate`], calling `observe` after every step.
pub fn simulate_with(
    config: &Config,
    stream: &Stream,
    source: &mut dyn ContributionSource,
    opts: &SimOptions,
    mut observe: impl FnMut(&StepReport, &MemoryState),
) -> Result<SimOutput> {
    let mut state = MemoryState::new(config.clone())?;
    let mut log = TraceLog::new(config.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_0f_c0f1e);
    for (t, inputs) in stream.iter().enumerate() {
        if opts.reset_period > 0 && t > 0 && (t as u64).is_multiple_of(opts.reset_period) {
            state.reset();
        }
        let wiring = match opts.wiring {
            WiringMode::Hebbian => Wiring::Hebbian,
            WiringMode::Random => Wiring::Random(&mut rng),
        };
        let report = state.step_with(inputs, source, wiring)?;
        observe(&report, &state);
        log.records.push(report);
    }
    Ok(SimOutput { state, log })
}

/// Generates the manifest's workload and simulates it.
pub fn run_manifest(manifest: &RunManifest) -> Result<SimOutput> {
    manifest.validate()?;
    let stream = generate_workload(&manifest.workload)?;
    let mut model = manifest.contribution.clone();
    simulate(
        &manifest.config,
        &stream,
        &mut model,
        &SimOptions {
            reset_period: manifest.reset_period,
            wiring: manifest.wiring,
            seed: manifest.seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const KV: &str = "
        # small run
        dim = 4
        n_wm = 3
        stm_capacity = 6
        n_stm_rem = 2
        n_ltm_rem = 2
        alpha = 2
        workload = clustered-topics
        steps = 40
        vectors_per_step = 3
        contribution = correlation-softmax
        reset_period = 10
        seed = 9
    ";

    #[test]
    fn kv_and_json_agree() {
        let kv = RunManifest::parse(KV).unwrap();
        assert_eq!(kv.config.dim, 4);
        assert_eq!(kv.workload.kind, WorkloadKind::ClusteredTopics);
        assert_eq!(kv.workload.dim, 4);
        assert_eq!(kv.contribution.kind, ContributionKind::CorrelationSoftmax);
        let json = r#"{"dim": 4, "n_wm": 3, "stm_capacity": 6, "n_stm_rem": 2, "n_ltm_rem": 2,
            "alpha": 2, "workload": "clustered-topics", "steps": 40, "vectors_per_step": 3,
            "contribution": "correlation-softmax", "reset_period": 10, "seed": 9}"#;
        assert_eq!(RunManifest::parse(json).unwrap(), kv);
        assert_eq!(RunManifest::parse(&kv.to_kv()).unwrap(), kv);
    }

    #[test]
    fn rejects_bad_manifests() {
        assert!(RunManifest::parse("bogus = 1").is_err());
        assert!(RunManifest::parse("n_stm_rem = 500").is_err());
        assert!(RunManifest::parse("dim = 2\nvectors_per_step = 60").is_err());
        assert!(RunManifest::parse("just words").is_err());
        assert!(RunManifest::parse("workload = spiral").is_err());
    }

    #[test]
    fn manifest_runs_deterministically_with_resets() {
        let m = RunManifest::parse(KV).unwrap();
        let a = run_manifest(&m).unwrap();
        let b = run_manifest(&m).unwrap();
        assert_eq!(a.log.to_text(), b.log.to_text());
        for r in &a.log.records {
            assert_eq!(r.reset, r.step > 0 && r.step % 10 == 0);
            if r.reset {
                assert!(r.retrieved.rem().is_empty());
            }
            assert!(conservation_error(r, m.config.alpha) < 1e-9);
        }
    }
}
