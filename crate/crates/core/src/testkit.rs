//! Random small engine states for fuzzing and property checks.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::config::Config;
use crate::engram::{EngramId, Tier};
use crate::store::{EngramRecord, MemoryState};

/// Draws a structurally valid state with between `min_engrams` and
/// `max_engrams` engrams.
///
/// Ids run oldest to newest through long-term, short-term and working
/// memory. Vectors are often drawn from a small palette and counts from a
/// small range so that score and edge ties are common.
pub fn random_state(rng: &mut impl Rng, min_engrams: usize, max_engrams: usize) -> MemoryState {
    let min_engrams = min_engrams.max(1);
    let max_engrams = max_engrams.max(min_engrams);
    let dim = rng.random_range(1..=3);
    let n_wm = rng.random_range(1..=4);
    let stm_capacity = rng.random_range(1..=8);
    let config = Config {
        dim,
        n_wm,
        stm_capacity,
        n_stm_rem: rng.random_range(1..=stm_capacity),
        n_ltm_rem: rng.random_range(1..=6),
        n_depth: rng.random_range(0..=4),
        initial_lifespan: rng.random_range(1..=9) as f64,
        alpha: rng.random_range(1..=8) as f64,
    };

    let total = rng.random_range(min_engrams..=max_engrams);
    let wm_n = rng.random_range(1..=n_wm.min(total));
    let stm_n = rng.random_range(0..=stm_capacity.min(total - wm_n));
    let ltm_n = total - wm_n - stm_n;

    let palette: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..dim).map(|_| rng.random_range(-2..=2) as f64 * 0.5).collect())
        .collect();
    let vector = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
        if rng.random_bool(0.5) {
            palette.choose(rng).expect("non-empty").clone()
        } else {
            (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    };

    let mut records = Vec::with_capacity(total);
    let mut next = 0u64;
    // working memory is listed first but holds the newest ids
    let ltm_ids: Vec<u64> = (0..ltm_n as u64).collect();
    let stm_ids: Vec<u64> = (ltm_n as u64..(ltm_n + stm_n) as u64).collect();
    let wm_ids: Vec<u64> = ((ltm_n + stm_n) as u64..total as u64).collect();
    next += total as u64;
    let step = total as u64 + 1;
    for (ids, tier) in [
        (&wm_ids, Tier::WorkingMemory),
        (&stm_ids, Tier::ShortTermMemory),
        (&ltm_ids, Tier::LongTermMemory),
    ] {
        for &n in ids {
            let fires = if tier == Tier::WorkingMemory {
                0
            } else {
                rng.random_range(1..=6)
            };
            records.push(EngramRecord {
                id: EngramId(n),
                tier,
                creation_step: if tier == Tier::WorkingMemory { step } else { n },
                fire_count: fires,
                lifespan: rng.random_range(1..=12) as f64 * 0.5,
                vector: vector(rng),
            });
        }
    }

    let density: f64 = rng.random_range(0.1..0.8);
    let fired: Vec<(EngramId, u64)> = records
        .iter()
        .filter(|r| r.fire_count > 0)
        .map(|r| (r.id, r.fire_count))
        .collect();
    let mut counts = Vec::new();
    for (a, &(i, fi)) in fired.iter().enumerate() {
        for &(j, fj) in &fired[a + 1..] {
            if rng.random_bool(density) {
                let c = rng.random_range(1..=fi.min(fj));
                counts.push((i, j, c));
                counts.push((j, i, c));
            }
        }
    }
    MemoryState::restore(config, step, next, false, records, counts)
        .expect("generated states are valid")
}

/// A random duplicate-free subset of the live engrams.
pub fn random_subset(rng: &mut impl Rng, state: &MemoryState) -> Vec<EngramId> {
    let mut ids: Vec<EngramId> = state.engrams().map(|e| e.id).collect();
    ids.shuffle(rng);
    let k = rng.random_range(0..=ids.len());
    ids.truncate(k);
    ids
}
