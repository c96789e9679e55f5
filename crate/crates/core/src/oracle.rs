//! Brute-force references for differential testing.
//!
//! Nothing here calls into `retrieval`: the reference retrieval is written
//! out again with plain loops over whole tiers, so a bug has to be made twice
//! to go unnoticed.

use std::collections::BTreeMap;

use rand::RngCore;

use crate::engram::EngramId;
use crate::error::{EngineError, Result};
use crate::lifecycle::{ContributionSource, StepReport, Wiring};
use crate::retrieval::RetrievalResult;
use crate::store::MemoryState;
use crate::trace::TraceLog;

fn mean_cue_score(state: &MemoryState, id: EngramId) -> f64 {
    let v = &state.engram(id).expect("live").vector;
    let mut acc = 0.0;
    for &w in state.wm() {
        let u = &state.engram(w).expect("live").vector;
        let mut d2 = 0.0;
        for k in 0..v.len() {
            let diff = v[k] - u[k];
            d2 += diff * diff;
        }
        acc += (-d2).exp();
    }
    acc / state.wm().len() as f64
}

fn rank(mut scored: Vec<(EngramId, f64)>, k: usize) -> Vec<(EngramId, f64)> {
    // plain insertion sort: higher score first, lower id on ties
    for n in 1..scored.len() {
        let mut m = n;
        while m > 0 {
            let (a, b) = (scored[m - 1], scored[m]);
            let out_of_order = b.1 > a.1 || (b.1 == a.1 && b.0 < a.0);
            if !out_of_order {
                break;
            }
            scored.swap(m - 1, m);
            m -= 1;
        }
    }
    scored.truncate(k);
    scored
}

fn weight(state: &MemoryState, from: EngramId, to: EngramId) -> f64 {
    let fires = state.count(from, from);
    if fires == 0 {
        0.0
    } else {
        state.count(from, to) as f64 / fires as f64
    }
}

/// Best positive-weight long-term target of `from`, scanning the whole tier
/// in id order so the first maximum is the oldest.
fn argmax_ltm(state: &MemoryState, from: EngramId, skip: &[EngramId]) -> Option<EngramId> {
    let mut best: Option<(EngramId, f64)> = None;
    for &to in state.ltm() {
        if skip.contains(&to) {
            continue;
        }
        let w = weight(state, from, to);
        if w > 0.0 && best.is_none_or(|(_, bw)| w > bw) {
            best = Some((to, w));
        }
    }
    best.map(|b| b.0)
}

/// Independent reimplementation of the retrieve stage.
pub fn reference_retrieve(state: &MemoryState) -> Result<RetrievalResult> {
    if state.wm().is_empty() {
        return Err(EngineError::Sequencing("empty working memory".into()));
    }
    let config = state.config();

    let mut stm_scored = Vec::new();
    for &id in state.stm() {
        stm_scored.push((id, mean_cue_score(state, id)));
    }
    let stm_top = rank(stm_scored, config.n_stm_rem);

    let mut found: Vec<EngramId> = Vec::new();
    for &(s, _) in &stm_top {
        if let Some(t) = argmax_ltm(state, s, &[]) {
            if !found.contains(&t) {
                found.push(t);
            }
        }
    }
    let mut frontier = found.clone();
    for _ in 0..config.n_depth {
        let before = found.clone();
        let mut next = Vec::new();
        for &f in &frontier {
            if let Some(t) = argmax_ltm(state, f, &before) {
                if !next.contains(&t) {
                    next.push(t);
                }
            }
        }
        for &t in &next {
            if !found.contains(&t) {
                found.push(t);
            }
        }
        frontier = next;
    }
    found.sort();

    let ltm_scored: Vec<_> = found.iter().map(|&id| (id, mean_cue_score(state, id))).collect();
    let ltm_top = rank(ltm_scored, config.n_ltm_rem);

    let mut scores = BTreeMap::new();
    for &(id, s) in stm_top.iter().chain(&ltm_top) {
        scores.insert(id, s);
    }
    Ok(RetrievalResult {
        wm: state.wm().to_vec(),
        stm_rem: stm_top.iter().map(|p| p.0).collect(),
        ltm_rem: ltm_top.iter().map(|p| p.0).collect(),
        ltm_found: found,
        scores,
    })
}

/// Top-`k` of the entire long-term memory by cue correlation, ignoring the
/// graph.
pub fn full_ltm_search(state: &MemoryState, k: usize) -> Result<Vec<EngramId>> {
    if state.wm().is_empty() {
        return Err(EngineError::Sequencing("empty working memory".into()));
    }
    let scored = state
        .ltm()
        .iter()
        .map(|&id| (id, mean_cue_score(state, id)))
        .collect();
    Ok(rank(scored, k).into_iter().map(|p| p.0).collect())
}

/// A full step whose long-term co-firing targets are drawn at random.
pub fn random_wire_step(
    state: &mut MemoryState,
    vectors: &[Vec<f64>],
    source: &mut dyn ContributionSource,
    rng: &mut dyn RngCore,
) -> Result<StepReport> {
    state.step_with(vectors, source, Wiring::Random(rng))
}

/// Replays the activated sets of a trace into a count table, diagonal
/// included. Counts of pruned engrams are dropped and resets clear the table,
/// so the result matches the live engine at the end of the run.
pub fn recount_from_trace(log: &TraceLog) -> BTreeMap<(EngramId, EngramId), u64> {
    let mut counts: BTreeMap<(EngramId, EngramId), u64> = BTreeMap::new();
    for r in &log.records {
        if r.reset {
            counts.clear();
        }
        let act: Vec<EngramId> = r
            .created
            .iter()
            .chain(&r.retrieved.stm_rem)
            .chain(&r.retrieved.ltm_rem)
            .copied()
            .collect();
        for &i in &act {
            for &j in &act {
                *counts.entry((i, j)).or_insert(0) += 1;
            }
        }
        if !r.pruned.is_empty() {
            counts.retain(|(i, j), _| !r.pruned.contains(i) && !r.pruned.contains(j));
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::engram::Tier;
    use crate::lifecycle::ContributionWeights;
    use crate::retrieval::retrieve;
    use crate::store::EngramRecord;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform(r: &RetrievalResult, _: &MemoryState) -> ContributionWeights {
        ContributionWeights::uniform(&r.rem())
    }

    fn small() -> Config {
        Config {
            dim: 2,
            n_wm: 3,
            stm_capacity: 3,
            n_stm_rem: 2,
            n_ltm_rem: 2,
            n_depth: 2,
            initial_lifespan: 4.0,
            alpha: 3.0,
        }
    }

    #[test]
    fn empty_tiers() {
        let mut s = MemoryState::new(small()).unwrap();
        s.add_working_memory(&[vec![0.0, 0.0]]).unwrap();
        let r = reference_retrieve(&s).unwrap();
        assert!(r.rem().is_empty() && r.ltm_found.is_empty());
        assert!(full_ltm_search(&s, 3).unwrap().is_empty());
    }

    #[test]
    fn chain_matches_engine() {
        let rec = |n: u64, tier: Tier| EngramRecord {
            id: EngramId(n),
            tier,
            creation_step: 0,
            fire_count: 4,
            lifespan: 2.0,
            vector: vec![n as f64 * 0.1, 0.0],
        };
        let engrams = vec![
            rec(9, Tier::WorkingMemory),
            rec(5, Tier::ShortTermMemory),
            rec(1, Tier::LongTermMemory),
            rec(2, Tier::LongTermMemory),
            rec(3, Tier::LongTermMemory),
        ];
        let counts = vec![
            (EngramId(5), EngramId(1), 4),
            (EngramId(1), EngramId(2), 4),
            (EngramId(2), EngramId(3), 4),
        ];
        let s = MemoryState::restore(small(), 1, 10, false, engrams, counts).unwrap();
        let ours = retrieve(&s).unwrap();
        let theirs = reference_retrieve(&s).unwrap();
        assert_eq!(ours, theirs);
        assert_eq!(theirs.ltm_found, vec![EngramId(1), EngramId(2), EngramId(3)]);
        let all = full_ltm_search(&s, 10).unwrap();
        assert_eq!(all, vec![EngramId(3), EngramId(2), EngramId(1)]);
    }

    #[test]
    fn recount_small_logs() {
        assert!(recount_from_trace(&TraceLog::default()).is_empty());
        let mut s = MemoryState::new(small()).unwrap();
        let r = s
            .step(&[vec![0.0, 0.0], vec![1.0, 1.0]], &mut uniform)
            .unwrap();
        let log = TraceLog {
            config: None,
            records: vec![r],
        };
        let counts = recount_from_trace(&log);
        assert_eq!(counts.len(), 4);
        assert!(counts.values().all(|&c| c == 1));
        assert_eq!(counts, s.count_table());
    }

    #[test]
    fn random_wire_is_seeded_and_degenerates_without_ltm() {
        let run = |seed: u64, random: bool| {
            let mut s = MemoryState::new(small()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut reports = Vec::new();
            for t in 0..12 {
                let x = (t % 4) as f64 * 0.3;
                let v = [vec![x, 0.0], vec![0.0, x], vec![x, x]];
                let r = if random {
                    random_wire_step(&mut s, &v, &mut uniform, &mut rng).unwrap()
                } else {
                    s.step(&v, &mut uniform).unwrap()
                };
                reports.push(r);
            }
            (s, reports)
        };
        let (a, ra) = run(7, true);
        let (b, rb) = run(7, true);
        assert_eq!(ra, rb);
        assert_eq!(a, b);

        // identical while long-term memory is still empty
        let (_, hebbian) = run(7, false);
        let first_ltm = hebbian.iter().position(|r| r.ltm_len > 0).unwrap();
        assert_eq!(ra[..=first_ltm], hebbian[..=first_ltm]);
        assert_ne!(ra, hebbian);
    }
}
