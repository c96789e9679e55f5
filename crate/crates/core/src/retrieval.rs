//! Cue-based retrieval: score short-term memory against working memory,
//! seed long-term memory from the strongest co-firing edges, walk the graph
//! for a bounded number of levels and keep the best-correlated finds.
//!
//! Retrieval never mutates the state.

use std::collections::{BTreeMap, BTreeSet};

use crate::engram::{EngramId, Tier};
use crate::error::{EngineError, Result};
use crate::store::MemoryState;

/// Tie-break rule for top-k selection and edge argmax.
///
/// The engine always uses [`TieBreak::OlderFirst`]; the inverted rule exists
/// so verification campaigns can prove they detect a wrong tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    OlderFirst,
    NewerFirst,
}

impl TieBreak {
    /// True if `candidate` wins a tie against `incumbent`.
    fn prefers(self, candidate: EngramId, incumbent: EngramId) -> bool {
        match self {
            TieBreak::OlderFirst => candidate < incumbent,
            TieBreak::NewerFirst => candidate > incumbent,
        }
    }
}

/// The activated set of one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RetrievalResult {
    pub wm: Vec<EngramId>,
    pub stm_rem: Vec<EngramId>,
    pub ltm_rem: Vec<EngramId>,
    /// Every long-term engram reached by the graph walk, ascending.
    pub ltm_found: Vec<EngramId>,
    /// Correlation score of every retrieved engram.
    pub scores: BTreeMap<EngramId, f64>,
}

impl RetrievalResult {
    /// Retrieved engrams: short-term picks followed by long-term picks.
    pub fn rem(&self) -> Vec<EngramId> {
        self.stm_rem.iter().chain(&self.ltm_rem).copied().collect()
    }

    /// Activated engrams: working memory followed by [`Self::rem`].
    pub fn act(&self) -> Vec<EngramId> {
        self.wm
            .iter()
            .chain(&self.stm_rem)
            .chain(&self.ltm_rem)
            .copied()
            .collect()
    }
}

/// `exp(-|a - b|^2)`.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(EngineError::Shape {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(correlation_unchecked(a, b))
}

#[inline]
fn correlation_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let dist2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-dist2).exp()
}

/// Mean correlation of each candidate with every working-memory engram.
pub fn tier_correlations(
    state: &MemoryState,
    candidates: &[EngramId],
) -> Result<BTreeMap<EngramId, f64>> {
    if state.wm().is_empty() {
        return Err(EngineError::Sequencing(
            "correlation scoring needs a populated working memory".into(),
        ));
    }
    let cue: Vec<&[f64]> = state.wm().iter().map(|&id| state.vector(id)).collect();
    let n = cue.len() as f64;
    candidates
        .iter()
        .map(|&id| {
            let e = state.engram(id).ok_or(EngineError::Lookup(id))?;
            let sum: f64 = cue
                .iter()
                .map(|w| correlation_unchecked(&e.vector, w))
                .sum();
            Ok((id, sum / n))
        })
        .collect()
}

/// The `k` highest scores, ordered by descending score then ascending id.
pub fn select_top_k(scores: &BTreeMap<EngramId, f64>, k: usize) -> Vec<EngramId> {
    select_top_k_with(scores, k, TieBreak::OlderFirst)
}

pub fn select_top_k_with(
    scores: &BTreeMap<EngramId, f64>,
    k: usize,
    tie: TieBreak,
) -> Vec<EngramId> {
    let mut ranked: Vec<(EngramId, f64)> = scores.iter().map(|(&id, &s)| (id, s)).collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1).then_with(|| match tie {
            TieBreak::OlderFirst => a.0.cmp(&b.0),
            TieBreak::NewerFirst => b.0.cmp(&a.0),
        })
    });
    ranked.truncate(k);
    ranked.into_iter().map(|(id, _)| id).collect()
}

/// Strongest positive edge from `from` into long-term memory, skipping
/// `excluded`. Within one source every weight shares the denominator, so the
/// raw counts decide.
fn strongest_ltm_edge(
    state: &MemoryState,
    from: EngramId,
    excluded: &BTreeSet<EngramId>,
    tie: TieBreak,
) -> Option<EngramId> {
    let fired = state.engram(from).is_some_and(|e| e.fire_count > 0);
    if !fired {
        return None;
    }
    let mut best: Option<(EngramId, u64)> = None;
    for (to, count) in state.graph().out_edges(from) {
        if count == 0 || excluded.contains(&to) || state.tier_of(to) != Some(Tier::LongTermMemory) {
            continue;
        }
        best = match best {
            None => Some((to, count)),
            Some((b, bc)) if count > bc || (count == bc && tie.prefers(to, b)) => Some((to, count)),
            keep => keep,
        };
    }
    best.map(|(id, _)| id)
}

/// For each retrieved short-term engram, its strongest edge into long-term
/// memory. Returns the distinct targets, ascending.
pub fn seed_ltm(state: &MemoryState, stm_rem: &[EngramId]) -> Vec<EngramId> {
    seed_ltm_with(state, stm_rem, TieBreak::OlderFirst)
}

fn seed_ltm_with(state: &MemoryState, stm_rem: &[EngramId], tie: TieBreak) -> Vec<EngramId> {
    let none = BTreeSet::new();
    stm_rem
        .iter()
        .filter_map(|&i| strongest_ltm_edge(state, i, &none, tie))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Level-synchronous walk: every engram discovered at the previous level
/// follows its strongest edge to a long-term engram not found before that
/// level. Returns everything found including `init`, ascending.
pub fn explore_ltm(state: &MemoryState, init: &[EngramId], depth: usize) -> Vec<EngramId> {
    explore_ltm_with(state, init, depth, TieBreak::OlderFirst)
}

fn explore_ltm_with(
    state: &MemoryState,
    init: &[EngramId],
    depth: usize,
    tie: TieBreak,
) -> Vec<EngramId> {
    let mut found: BTreeSet<EngramId> = init.iter().copied().collect();
    let mut frontier: Vec<EngramId> = found.iter().copied().collect();
    for _ in 0..depth {
        let level: BTreeSet<EngramId> = frontier
            .iter()
            .filter_map(|&i| strongest_ltm_edge(state, i, &found, tie))
            .collect();
        if level.is_empty() {
            break;
        }
        found.extend(&level);
        frontier = level.into_iter().collect();
    }
    found.into_iter().collect()
}

/// Runs the full retrieve stage against the current working memory.
pub fn retrieve(state: &MemoryState) -> Result<RetrievalResult> {
    retrieve_with(state, TieBreak::OlderFirst)
}

pub fn retrieve_with(state: &MemoryState, tie: TieBreak) -> Result<RetrievalResult> {
    let config = state.config();
    let stm: Vec<EngramId> = state.stm().iter().copied().collect();
    let stm_scores = tier_correlations(state, &stm)?;
    let stm_rem = select_top_k_with(&stm_scores, config.n_stm_rem, tie);

    let init = seed_ltm_with(state, &stm_rem, tie);
    let ltm_found = explore_ltm_with(state, &init, config.n_depth, tie);
    let ltm_scores = tier_correlations(state, &ltm_found)?;
    let ltm_rem = select_top_k_with(&ltm_scores, config.n_ltm_rem, tie);

    let mut scores = BTreeMap::new();
    for id in &stm_rem {
        scores.insert(*id, stm_scores[id]);
    }
    for id in &ltm_rem {
        scores.insert(*id, ltm_scores[id]);
    }
    Ok(RetrievalResult {
        wm: state.wm().to_vec(),
        stm_rem,
        ltm_rem,
        ltm_found,
        scores,
    })
}
