//! Stand-ins for the exploit stage. A real host derives contributions from
//! attention over the retrieved engrams; these models let simulations run
//! without one.

use serde::{Deserialize, Serialize};

use crate::lifecycle::{ContributionSource, ContributionWeights};
use crate::retrieval::{correlation, RetrievalResult};
use crate::store::MemoryState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ContributionKind {
    #[default]
    Uniform,
    /// Softmax of the retrieval score at `temperature`.
    CorrelationSoftmax,
    /// Weight 1 for engrams that nearly reproduce some current input
    /// (best correlation with a working-memory engram at least `threshold`),
    /// 0 otherwise.
    OracleTask,
}

impl std::str::FromStr for ContributionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(ContributionKind::Uniform),
            "correlation-softmax" => Ok(ContributionKind::CorrelationSoftmax),
            "oracle-task" => Ok(ContributionKind::OracleTask),
            other => Err(format!("unknown contribution model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionModel {
    pub kind: ContributionKind,
    pub temperature: f64,
    pub threshold: f64,
}

impl Default for ContributionModel {
    fn default() -> Self {
        ContributionModel {
            kind: ContributionKind::Uniform,
            temperature: 0.1,
            threshold: 0.9,
        }
    }
}

impl ContributionModel {
    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn weights(&self, retrieved: &RetrievalResult, state: &MemoryState) -> ContributionWeights {
        let rem = retrieved.rem();
        match self.kind {
            ContributionKind::Uniform => ContributionWeights::uniform(&rem),
            ContributionKind::CorrelationSoftmax => {
                let t = self.temperature.max(f64::MIN_POSITIVE);
                let top = rem
                    .iter()
                    .map(|id| retrieved.scores[id])
                    .fold(f64::NEG_INFINITY, f64::max);
                rem.iter()
                    .map(|&id| (id, ((retrieved.scores[&id] - top) / t).exp()))
                    .collect()
            }
            ContributionKind::OracleTask => rem
                .iter()
                .map(|&id| {
                    let v = &state.engram(id).expect("retrieved engrams are live").vector;
                    let best = retrieved
                        .wm
                        .iter()
                        .filter_map(|&w| state.engram(w))
                        .map(|w| correlation(v, &w.vector).unwrap_or(0.0))
                        .fold(0.0, f64::max);
                    (id, if best >= self.threshold { 1.0 } else { 0.0 })
                })
                .collect(),
        }
    }
}

impl ContributionSource for ContributionModel {
    fn contributions(
        &mut self,
        retrieved: &RetrievalResult,
        state: &MemoryState,
    ) -> ContributionWeights {
        self.weights(retrieved, state)
    }
}
