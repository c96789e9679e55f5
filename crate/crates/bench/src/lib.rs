//! Fixtures for the criterion benchmarks in `benches/`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use engram_core::{Config, EngramId, EngramRecord, MemoryState, Tier};

/// A memory with `ltm` long-term engrams, a full short-term memory and one
/// working-memory cue. Every fired engram has `degree` random out-edges into
/// long-term memory, so searches rarely run dry.
pub fn synthetic_state(config: Config, ltm: u64, degree: usize, seed: u64) -> MemoryState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = config.dim;
    let stm = config.stm_capacity as u64;
    let wm = ltm + stm;
    let record = |rng: &mut ChaCha8Rng, n: u64, tier| EngramRecord {
        id: EngramId(n),
        tier,
        creation_step: n,
        fire_count: if tier == Tier::WorkingMemory { 0 } else { 100 },
        lifespan: config.initial_lifespan,
        vector: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    let mut records = vec![record(&mut rng, wm, Tier::WorkingMemory)];
    records.extend((ltm..wm).map(|n| record(&mut rng, n, Tier::ShortTermMemory)));
    records.extend((0..ltm).map(|n| record(&mut rng, n, Tier::LongTermMemory)));

    let mut counts = Vec::new();
    for from in 0..wm {
        for to in index::sample(&mut rng, ltm as usize, degree.min(ltm as usize)) {
            if to as u64 != from {
                counts.push((EngramId(from), EngramId(to as u64), rng.random_range(1..=100)));
            }
        }
    }
    MemoryState::restore(config, wm, wm + 1, false, records, counts).expect("valid synthetic state")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_state_is_valid() {
        let config = Config { dim: 4, n_wm: 1, stm_capacity: 20, n_stm_rem: 10, ..Config::default() };
        let s = synthetic_state(config, 500, 8, 1);
        s.check_invariants().unwrap();
        assert_eq!((s.wm().len(), s.stm().len(), s.ltm().len()), (1, 20, 500));
    }
}
