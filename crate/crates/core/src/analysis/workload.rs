use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{EngineError, Result};

/// Vectors presented at each step: `stream[t][k]` is the `k`-th input of step `t`.
pub type Stream = Vec<Vec<Vec<f64>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WorkloadKind {
    /// Independent Gaussian vectors.
    #[default]
    IidGaussian,
    /// Each step draws a topic; inputs scatter around that topic's centre.
    /// With `motif_period > 0`, topic 0 opens the run and recurs every
    /// `motif_period` steps.
    ClusteredTopics,
    /// Inputs scatter around a centre that random-walks by `drift` per step.
    Drifting,
    /// An i.i.d. stream of `steps / 2` steps presented twice.
    MotifReplay,
}

impl std::str::FromStr for WorkloadKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "iid-gaussian" => Ok(WorkloadKind::IidGaussian),
            "clustered-topics" => Ok(WorkloadKind::ClusteredTopics),
            "drifting" => Ok(WorkloadKind::Drifting),
            "motif-replay" => Ok(WorkloadKind::MotifReplay),
            other => Err(format!("unknown workload `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub dim: usize,
    pub steps: usize,
    pub vectors_per_step: usize,
    pub seed: u64,
    /// Standard deviation of base vectors (and topic centres) per component.
    pub scale: f64,
    /// Per-component noise around a topic centre or drifting centre.
    pub spread: f64,
    pub clusters: usize,
    pub drift: f64,
    pub motif_period: usize,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            kind: WorkloadKind::IidGaussian,
            dim: 16,
            steps: 1000,
            vectors_per_step: 50,
            seed: 0,
            scale: 0.5,
            spread: 0.1,
            clusters: 8,
            drift: 0.05,
            motif_period: 0,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(EngineError::Config(format!("workload: {m}")));
        if self.dim == 0 {
            return fail("dim must be positive");
        }
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return fail("scale must be non-negative");
        }
        if !(self.spread.is_finite() && self.spread >= 0.0) {
            return fail("spread must be non-negative");
        }
        if !(self.drift.is_finite() && self.drift >= 0.0) {
            return fail("drift must be non-negative");
        }
        match self.kind {
            WorkloadKind::ClusteredTopics if self.clusters == 0 => {
                fail("clustered-topics needs at least one cluster")
            }
            WorkloadKind::MotifReplay if !self.steps.is_multiple_of(2) => {
                fail("motif-replay needs an even number of steps")
            }
            _ => Ok(()),
        }
    }

    /// Checks the workload fits the engine it will drive.
    pub fn validate_for(&self, config: &Config) -> Result<()> {
        self.validate()?;
        if self.dim != config.dim {
            return Err(EngineError::Shape {
                expected: config.dim,
                got: self.dim,
            });
        }
        if self.vectors_per_step > config.n_wm {
            return Err(EngineError::Config(format!(
                "workload: {} vectors per step exceed n_wm = {}",
                self.vectors_per_step, config.n_wm
            )));
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, sd: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn around(rng: &mut ChaCha8Rng, centre: &[f64], sd: f64) -> Vec<f64> {
    centre
        .iter()
        .map(|c| c + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Generates the full input stream. The same spec always yields the same
/// stream.
pub fn generate_workload(spec: &WorkloadSpec) -> Result<Stream> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let per = spec.vectors_per_step;
    let stream = match spec.kind {
        WorkloadKind::IidGaussian => (0..spec.steps)
            .map(|_| (0..per).map(|_| gaussian(&mut rng, spec.dim, spec.scale)).collect())
            .collect(),
        WorkloadKind::ClusteredTopics => {
            let centres: Vec<Vec<f64>> = (0..spec.clusters)
                .map(|_| gaussian(&mut rng, spec.dim, spec.scale))
                .collect();
            (0..spec.steps)
                .map(|t| {
                    let topic = if spec.motif_period > 0 && t % spec.motif_period == 0 {
                        0
                    } else if spec.motif_period > 0 && spec.clusters > 1 {
                        rng.random_range(1..spec.clusters)
                    } else {
                        rng.random_range(0..spec.clusters)
                    };
                    (0..per)
                        .map(|_| around(&mut rng, &centres[topic], spec.spread))
                        .collect()
                })
                .collect()
        }
        WorkloadKind::Drifting => {
            let mut centre = gaussian(&mut rng, spec.dim, spec.scale);
            (0..spec.steps)
                .map(|_| {
                    for c in centre.iter_mut() {
                        *c += spec.drift * rng.sample::<f64, _>(StandardNormal);
                    }
                    (0..per)
                        .map(|_| around(&mut rng, &centre, spec.spread))
                        .collect()
                })
                .collect()
        }
        WorkloadKind::MotifReplay => {
            let half: Stream = (0..spec.steps / 2)
                .map(|_| (0..per).map(|_| gaussian(&mut rng, spec.dim, spec.scale)).collect())
                .collect();
            half.iter().chain(&half).cloned().collect()
        }
    };
    Ok(stream)
}
