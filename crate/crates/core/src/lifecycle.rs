//! Memorize & forget: co-firing counts, contribution-weighted lifespan
//! increments, decay, pruning and tier promotion, plus the per-step driver
//! that strings retrieve, exploit and memorize together.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::RngCore;

use crate::engram::{EngramId, Tier};
use crate::error::{EngineError, Result};
use crate::retrieval::{retrieve, RetrievalResult};
use crate::store::MemoryState;

/// Usefulness of each retrieved engram, as judged by whoever consumed the
/// retrieval.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContributionWeights(pub BTreeMap<EngramId, f64>);

impl ContributionWeights {
    pub fn uniform(rem: &[EngramId]) -> Self {
        ContributionWeights(rem.iter().map(|&id| (id, 1.0)).collect())
    }

    pub fn get(&self, id: EngramId) -> Option<f64> {
        self.0.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks the weights are keyed exactly by `rem` and are finite and
    /// non-negative.
    pub fn validate(&self, rem: &[EngramId]) -> Result<()> {
        let keys: BTreeSet<EngramId> = rem.iter().copied().collect();
        if keys.len() != rem.len() {
            return Err(EngineError::Contract("retrieved set has duplicates".into()));
        }
        if self.0.len() != keys.len() || !self.0.keys().all(|k| keys.contains(k)) {
            return Err(EngineError::Contract(format!(
                "contribution weights cover {} engrams, retrieved set has {}",
                self.0.len(),
                keys.len()
            )));
        }
        if let Some((id, w)) = self.0.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(EngineError::Contract(format!(
                "contribution weight for {id} is {w}"
            )));
        }
        Ok(())
    }
}

impl FromIterator<(EngramId, f64)> for ContributionWeights {
    fn from_iter<I: IntoIterator<Item = (EngramId, f64)>>(iter: I) -> Self {
        ContributionWeights(iter.into_iter().collect())
    }
}

/// The exploit stage: judges a retrieval. Must not touch the engine.
pub trait ContributionSource {
    fn contributions(&mut self, retrieved: &RetrievalResult, state: &MemoryState)
        -> ContributionWeights;
}

impl<F> ContributionSource for F
where
    F: FnMut(&RetrievalResult, &MemoryState) -> ContributionWeights,
{
    fn contributions(
        &mut self,
        retrieved: &RetrievalResult,
        state: &MemoryState,
    ) -> ContributionWeights {
        self(retrieved, state)
    }
}

/// Everything that happened in one step. This is also the trace record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub step: u64,
    /// The engine was reset before this step ran.
    pub reset: bool,
    pub created: Vec<EngramId>,
    pub retrieved: RetrievalResult,
    pub increments: BTreeMap<EngramId, f64>,
    pub pruned: Vec<EngramId>,
    pub promoted_to_ltm: Vec<EngramId>,
    pub stm_len: usize,
    pub ltm_len: usize,
    pub total_lifespan: f64,
}

/// How co-firing counts are recorded.
pub enum Wiring<'a> {
    /// Every pair of activated engrams.
    Hebbian,
    /// Each activated engram spends its `|act| - 1` pair increments on
    /// distinct long-term engrams drawn uniformly at random. While long-term
    /// memory is too small to take them all, the remainder goes to co-firing
    /// partners as usual, so the number of increments never changes.
    Random(&'a mut dyn RngCore),
}

impl MemoryState {
    /// Increments `Count(i, j)` for every ordered pair of `act`, diagonal
    /// included.
    pub fn record_cofiring(&mut self, act: &[EngramId]) -> Result<()> {
        self.check_activation(act)?;
        for &id in act {
            self.engrams.get_mut(&id).expect("checked").fire_count += 1;
        }
        for (n, &a) in act.iter().enumerate() {
            for &b in &act[n + 1..] {
                self.graph.increment_pair(a, b);
            }
        }
        Ok(())
    }

    fn check_activation(&self, act: &[EngramId]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &id in act {
            if !self.engrams.contains_key(&id) {
                return Err(EngineError::Lookup(id));
            }
            if !seen.insert(id) {
                return Err(EngineError::Contract(format!("{id} activated twice")));
            }
        }
        Ok(())
    }

    fn record_random_wiring(&mut self, act: &[EngramId], rng: &mut dyn RngCore) -> Result<()> {
        self.check_activation(act)?;
        let ltm: Vec<EngramId> = self.ltm.iter().copied().collect();
        for &id in act {
            self.engrams.get_mut(&id).expect("checked").fire_count += 1;
        }
        for &from in act {
            let pool: Vec<EngramId> = ltm.iter().copied().filter(|&x| x != from).collect();
            let wanted = act.len() - 1;
            let drawn = wanted.min(pool.len());
            // distinct targets keep Count(from, to) <= Count(from, from)
            let targets: BTreeSet<EngramId> = index::sample(rng, pool.len(), drawn)
                .into_iter()
                .map(|pick| pool[pick])
                .collect();
            // increments the pool cannot absorb stay on their co-firing partners
            let partners = act
                .iter()
                .copied()
                .filter(|&to| to != from && !targets.contains(&to))
                .take(wanted - drawn);
            for to in targets.iter().copied().chain(partners) {
                self.graph.add(from, to, 1);
            }
        }
        Ok(())
    }

    /// Extends the lifespan of each retrieved engram by
    /// `w_i / sum(w) * |rem| * alpha`. All-zero weights count as uniform.
    pub fn apply_contributions(
        &mut self,
        rem: &[EngramId],
        weights: &ContributionWeights,
    ) -> Result<BTreeMap<EngramId, f64>> {
        weights.validate(rem)?;
        if let Some(&missing) = rem.iter().find(|id| !self.engrams.contains_key(id)) {
            return Err(EngineError::Lookup(missing));
        }
        if rem.is_empty() {
            return Ok(BTreeMap::new());
        }
        let total: f64 = rem.iter().map(|&id| weights.0[&id]).sum();
        let budget = rem.len() as f64 * self.config.alpha;
        let mut increments = BTreeMap::new();
        for &id in rem {
            let inc = if total > 0.0 {
                weights.0[&id] / total * budget
            } else {
                self.config.alpha
            };
            self.engrams.get_mut(&id).expect("checked").lifespan += inc;
            increments.insert(id, inc);
        }
        Ok(increments)
    }

    /// Takes one unit of lifespan from every engram and removes those left
    /// at zero or below. Returns the removed ids, ascending.
    pub fn decay_and_prune(&mut self) -> Vec<EngramId> {
        let mut dead = Vec::new();
        for e in self.engrams.values_mut() {
            e.lifespan -= 1.0;
            if e.lifespan <= 0.0 {
                dead.push(e.id);
            }
        }
        for &id in &dead {
            self.remove(id);
        }
        dead
    }

    /// Moves working memory into short-term memory and spills the oldest
    /// short-term engrams over capacity into long-term memory.
    pub fn advance_tiers(&mut self) -> (Vec<EngramId>, Vec<EngramId>) {
        let to_stm: Vec<EngramId> = std::mem::take(&mut self.wm);
        for &id in &to_stm {
            self.engrams.get_mut(&id).expect("live").tier = Tier::ShortTermMemory;
            self.stm.push_back(id);
        }
        let mut to_ltm = Vec::new();
        while self.stm.len() > self.config.stm_capacity {
            let id = self.stm.pop_front().expect("non-empty");
            self.engrams.get_mut(&id).expect("live").tier = Tier::LongTermMemory;
            self.ltm.insert(id);
            to_ltm.push(id);
        }
        (to_stm, to_ltm)
    }

    /// Runs one full step: add working memory, retrieve, ask `source` for
    /// contributions, then memorize and forget.
    pub fn step(
        &mut self,
        vectors: &[Vec<f64>],
        source: &mut dyn ContributionSource,
    ) -> Result<StepReport> {
        self.step_with(vectors, source, Wiring::Hebbian)
    }

    pub fn step_with(
        &mut self,
        vectors: &[Vec<f64>],
        source: &mut dyn ContributionSource,
        wiring: Wiring<'_>,
    ) -> Result<StepReport> {
        let created = self.add_working_memory(vectors)?;
        let retrieved = match retrieve(self) {
            Ok(r) => r,
            // an empty step still has to age the memory
            Err(EngineError::Sequencing(_)) if created.is_empty() => RetrievalResult::default(),
            Err(e) => {
                self.rollback_working_memory(&created);
                return Err(e);
            }
        };
        let rem = retrieved.rem();
        let weights = source.contributions(&retrieved, self);
        if let Err(e) = weights.validate(&rem) {
            self.rollback_working_memory(&created);
            return Err(e);
        }
        self.finish_step(created, retrieved, &weights, wiring)
    }

    /// Memorize & forget for an already retrieved step. Used by hosts that
    /// run the exploit stage between retrieval and feedback.
    pub(crate) fn finish_step(
        &mut self,
        created: Vec<EngramId>,
        retrieved: RetrievalResult,
        weights: &ContributionWeights,
        wiring: Wiring<'_>,
    ) -> Result<StepReport> {
        let act = retrieved.act();
        let rem = retrieved.rem();
        match wiring {
            Wiring::Hebbian => self.record_cofiring(&act)?,
            Wiring::Random(rng) => self.record_random_wiring(&act, rng)?,
        }
        let increments = self.apply_contributions(&rem, weights)?;
        let pruned = self.decay_and_prune();
        let (_, promoted_to_ltm) = self.advance_tiers();
        let report = StepReport {
            step: self.step,
            reset: std::mem::take(&mut self.reset_pending),
            created,
            retrieved,
            increments,
            pruned,
            promoted_to_ltm,
            stm_len: self.stm.len(),
            ltm_len: self.ltm.len(),
            total_lifespan: self.total_lifespan(),
        };
        self.step += 1;
        Ok(report)
    }

    pub(crate) fn rollback_working_memory(&mut self, created: &[EngramId]) {
        for &id in created {
            self.engrams.remove(&id);
        }
        self.wm.clear();
        self.next_id -= created.len() as u64;
    }
}
