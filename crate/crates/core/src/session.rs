//! Two-phase stepping for hosts that compute contributions themselves
//! (e.g. from attention) between retrieval and memorize & forget.

use crate::engram::EngramId;
use crate::error::{EngineError, Result};
use crate::lifecycle::{ContributionWeights, StepReport, Wiring};
use crate::retrieval::{retrieve, RetrievalResult};
use crate::store::MemoryState;

/// Owns a [`MemoryState`] and enforces retrieve, then feedback.
#[derive(Debug, Clone)]
pub struct Session {
    state: MemoryState,
    pending: Option<(Vec<EngramId>, RetrievalResult)>,
}

impl Session {
    pub fn new(state: MemoryState) -> Self {
        Session {
            state,
            pending: None,
        }
    }

    pub fn state(&self) -> &MemoryState {
        &self.state
    }

    pub fn pending(&self) -> Option<&RetrievalResult> {
        self.pending.as_ref().map(|(_, r)| r)
    }

    /// Adds `vectors` to working memory and retrieves. The returned order of
    /// `stm_rem` then `ltm_rem` is the order feedback weights must follow.
    pub fn retrieve(&mut self, vectors: &[Vec<f64>]) -> Result<&RetrievalResult> {
        if self.pending.is_some() {
            return Err(EngineError::Sequencing(
                "retrieve called twice without feedback".into(),
            ));
        }
        let created = self.state.add_working_memory(vectors)?;
        let retrieved = match retrieve(&self.state) {
            Ok(r) => r,
            Err(EngineError::Sequencing(_)) if created.is_empty() => RetrievalResult::default(),
            Err(e) => {
                self.state.rollback_working_memory(&created);
                return Err(e);
            }
        };
        Ok(&self.pending.insert((created, retrieved)).1)
    }

    /// Completes the pending step. `weights[n]` belongs to the n-th engram of
    /// `stm_rem ++ ltm_rem`. On error nothing changes and the retrieval stays
    /// pending.
    pub fn feedback_and_step(&mut self, weights: &[f64]) -> Result<StepReport> {
        let Some((_, retrieved)) = &self.pending else {
            return Err(EngineError::Sequencing("feedback without a pending retrieval".into()));
        };
        let rem = retrieved.rem();
        if weights.len() != rem.len() {
            return Err(EngineError::Contract(format!(
                "{} weights for {} retrieved engrams",
                weights.len(),
                rem.len()
            )));
        }
        let weights: ContributionWeights = rem.iter().copied().zip(weights.iter().copied()).collect();
        weights.validate(&rem)?;
        let (created, retrieved) = self.pending.take().expect("checked above");
        self.state.finish_step(created, retrieved, &weights, Wiring::Hebbian)
    }

    /// Drops any pending step, then clears the memory.
    pub fn reset(&mut self) {
        if let Some((created, _)) = self.pending.take() {
            self.state.rollback_working_memory(&created);
        }
        self.state.reset();
    }

    pub fn into_state(self) -> MemoryState {
        self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn config() -> Config {
        Config {
            dim: 2,
            n_wm: 2,
            stm_capacity: 4,
            n_stm_rem: 2,
            n_ltm_rem: 2,
            n_depth: 2,
            initial_lifespan: 5.0,
            alpha: 2.0,
        }
    }

    fn inputs(step: usize) -> Vec<Vec<f64>> {
        vec![vec![step as f64 * 0.1, 1.0], vec![1.0, -(step as f64) * 0.1]]
    }

    #[test]
    fn uniform_feedback_matches_native_steps() {
        let mut native = MemoryState::new(config()).unwrap();
        let mut session = Session::new(MemoryState::new(config()).unwrap());
        let mut uniform =
            |r: &RetrievalResult, _: &MemoryState| ContributionWeights::uniform(&r.rem());
        for step in 0..30 {
            let a = native.step(&inputs(step), &mut uniform).unwrap();
            let n = session.retrieve(&inputs(step)).unwrap().rem().len();
            let b = session.feedback_and_step(&vec![1.0; n]).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(
            crate::snapshot::to_text(&native),
            crate::snapshot::to_text(session.state())
        );
    }

    #[test]
    fn protocol_errors_leave_state_alone() {
        let mut s = Session::new(MemoryState::new(config()).unwrap());
        assert!(matches!(s.feedback_and_step(&[]), Err(EngineError::Sequencing(_))));
        s.retrieve(&inputs(0)).unwrap();
        s.feedback_and_step(&[]).unwrap();
        s.retrieve(&inputs(1)).unwrap();
        let before = crate::snapshot::to_text(s.state());
        assert!(matches!(s.retrieve(&inputs(2)), Err(EngineError::Sequencing(_))));
        assert!(matches!(s.feedback_and_step(&[1.0]), Err(EngineError::Contract(_))));
        assert!(s.feedback_and_step(&[1.0, f64::NAN]).is_err());
        assert_eq!(before, crate::snapshot::to_text(s.state()));
        assert!(s.pending().is_some());
        s.feedback_and_step(&[1.0, 0.0]).unwrap();
    }

    #[test]
    fn empty_step_and_reset() {
        let mut s = Session::new(MemoryState::new(config()).unwrap());
        assert!(s.retrieve(&[]).unwrap().rem().is_empty());
        s.feedback_and_step(&[]).unwrap();
        s.retrieve(&inputs(0)).unwrap();
        s.reset();
        assert!(s.pending().is_none() && s.state().is_empty());
    }
}
