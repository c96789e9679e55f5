//! Verification campaigns: differential retrieval against the oracle,
//! count reconstruction from traces, and the Hebbian property checks.
//!
//! Case `n` of a campaign seeded with `s` draws its state from its own RNG,
//! so a failure can be replayed from `(s, n)` alone.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{generate_workload, ContributionModel, WorkloadKind, WorkloadSpec};
use crate::config::Config;
use crate::engram::EngramId;
use crate::lifecycle::{ContributionWeights, Wiring};
use crate::oracle::{recount_from_trace, reference_retrieve};
use crate::retrieval::{retrieve, retrieve_with, RetrievalResult, TieBreak};
use crate::sim::{simulate, SimOptions};
use crate::snapshot;
use crate::store::MemoryState;
use crate::testkit::{random_state, random_subset};

/// Largest random state used by the campaigns.
pub const MAX_ENGRAMS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Description of the first failing case.
    pub first_failure: Option<String>,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        CheckOutcome {
            name,
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, result: Result<(), String>) {
        self.cases += 1;
        if let Err(msg) = result {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(format!("case {}: {msg}", self.cases - 1));
            }
        }
    }
}

fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case as u64);
    rng
}

fn run_cases(
    name: &'static str,
    seed: u64,
    iterations: usize,
    mut case: impl FnMut(&mut ChaCha8Rng) -> Result<(), String>,
) -> CheckOutcome {
    let mut out = CheckOutcome::new(name);
    for n in 0..iterations {
        let mut rng = case_rng(seed, n);
        out.record(case(&mut rng));
    }
    out
}

fn same_retrieval(a: &RetrievalResult, b: &RetrievalResult) -> bool {
    a.wm == b.wm
        && a.stm_rem == b.stm_rem
        && a.ltm_rem == b.ltm_rem
        && a.ltm_found == b.ltm_found
}

/// Compares `retrieve_with(state, tie)` with the oracle on random states.
/// The first divergent state is embedded in the failure as a snapshot.
pub fn differential_retrieval(seed: u64, iterations: usize, tie: TieBreak) -> CheckOutcome {
    run_cases("differential-retrieval", seed, iterations, |rng| {
        let state = random_state(rng, 1, MAX_ENGRAMS);
        let got = retrieve_with(&state, tie).map_err(|e| e.to_string())?;
        let want = reference_retrieve(&state).map_err(|e| e.to_string())?;
        if same_retrieval(&got, &want) {
            Ok(())
        } else {
            Err(format!(
                "engine {got:?}\noracle {want:?}\nstate:\n{}",
                snapshot::to_text(&state)
            ))
        }
    })
}

/// Simulates `steps` steps at a small config and compares the live counts
/// with those rebuilt from the trace alone.
pub fn recount_check(seed: u64, steps: usize) -> CheckOutcome {
    let mut out = CheckOutcome::new("trace-recount");
    out.record(recount_case(seed, steps));
    out
}

/// The small configuration used for count reconstruction.
pub fn small_config() -> Config {
    Config {
        dim: 4,
        n_wm: 4,
        stm_capacity: 16,
        n_stm_rem: 5,
        n_ltm_rem: 5,
        n_depth: 3,
        initial_lifespan: 9.0,
        alpha: 2.0,
    }
}

fn recount_case(seed: u64, steps: usize) -> Result<(), String> {
    let config = small_config();
    let stream = generate_workload(&WorkloadSpec {
        kind: WorkloadKind::ClusteredTopics,
        dim: config.dim,
        steps,
        vectors_per_step: config.n_wm,
        seed,
        clusters: 6,
        spread: 0.2,
        ..WorkloadSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let mut model = ContributionModel::uniform();
    let opts = SimOptions {
        reset_period: (steps as u64 / 3).max(1),
        seed,
        ..SimOptions::default()
    };
    let run = simulate(&config, &stream, &mut model, &opts).map_err(|e| e.to_string())?;
    let rebuilt = recount_from_trace(&run.log);
    let live = run.state.count_table();
    if rebuilt == live {
        return Ok(());
    }
    let diff = rebuilt
        .iter()
        .find(|(k, v)| live.get(k) != Some(v))
        .map(|(k, v)| format!("{k:?}: trace {v}, live {:?}", live.get(k)))
        .or_else(|| {
            live.iter()
                .find(|(k, _)| !rebuilt.contains_key(k))
                .map(|(k, v)| format!("{k:?}: live {v}, missing from trace"))
        });
    Err(diff.unwrap_or_default())
}

fn ids(state: &MemoryState) -> Vec<EngramId> {
    state.engrams().map(|e| e.id).collect()
}

fn weights(state: &MemoryState) -> BTreeMap<(EngramId, EngramId), f64> {
    let ids = ids(state);
    let mut out = BTreeMap::new();
    for &i in &ids {
        for &j in &ids {
            if i != j {
                out.insert((i, j), state.edge_weight(i, j).expect("live"));
            }
        }
    }
    out
}

fn fire(state: &MemoryState, act: &[EngramId]) -> Result<MemoryState, String> {
    let mut post = state.clone();
    post.record_cofiring(act).map_err(|e| e.to_string())?;
    Ok(post)
}

fn random_inputs(rng: &mut ChaCha8Rng, state: &MemoryState) -> Vec<Vec<f64>> {
    let c = state.config();
    // reuse stored vectors often so retrieval has perfect cues
    let stored: Vec<Vec<f64>> = state.engrams().map(|e| e.vector.clone()).collect();
    let n = rng.random_range(0..=c.n_wm);
    (0..n)
        .map(|_| match stored.choose(rng) {
            Some(v) if rng.random_bool(0.5) => v.clone(),
            _ => (0..c.dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
        })
        .collect()
}

/// Finishes the pending step of a copy of `state` with random weights, then
/// runs one more step on random inputs.
fn full_step(rng: &mut ChaCha8Rng, state: &MemoryState) -> Result<MemoryState, String> {
    let mut post = state.clone();
    if !post.wm().is_empty() {
        let pending = retrieve(&post).map_err(|e| e.to_string())?;
        let weights: ContributionWeights = pending
            .rem()
            .into_iter()
            .map(|id| (id, rng.random_range(0..=3) as f64))
            .collect();
        post.finish_step(post.wm().to_vec(), pending, &weights, Wiring::Hebbian)
            .map_err(|e| e.to_string())?;
    }
    let inputs = random_inputs(rng, &post);
    let mut src = |r: &RetrievalResult, _: &MemoryState| ContributionWeights::uniform(&r.rem());
    post.step(&inputs, &mut src).map_err(|e| e.to_string())?;
    Ok(post)
}

/// `E(i, j)` depends only on `Count(i, j)` and `Count(i, i)`: co-firing
/// leaves the weights out of non-firing engrams alone, and piling counts
/// onto a third engram changes no weight between two others.
pub fn check_locality(seed: u64, iterations: usize) -> CheckOutcome {
    run_cases("locality", seed, iterations, |rng| {
        let pre = random_state(rng, 2, MAX_ENGRAMS);
        let act = random_subset(rng, &pre);
        let post = fire(&pre, &act)?;
        let (wp, wq) = (weights(&pre), weights(&post));
        for (&(i, j), &e) in &wp {
            if !act.contains(&i) && wq[&(i, j)] != e {
                return Err(format!("E({i},{j}) moved from {e} to {} with {i} silent", wq[&(i, j)]));
            }
        }
        let all = ids(&pre);
        let &k = all.choose(rng).expect("non-empty");
        let mut bumped = pre.clone();
        bumped.engrams.get_mut(&k).expect("live").fire_count += 5;
        for &x in &all {
            if x != k {
                bumped.graph.add(k, x, 2);
                bumped.graph.add(x, k, 3);
            }
        }
        let wb = weights(&bumped);
        for (&(i, j), &e) in &wp {
            if i != k && j != k && wb[&(i, j)] != e {
                return Err(format!("E({i},{j}) moved after editing counts of {k}"));
            }
        }
        Ok(())
    })
}

/// `E(i, j)` rises in a step exactly when both `i` and `j` fire. A weight
/// already at 1 stays at 1 when both fire.
pub fn check_cooperativity(seed: u64, iterations: usize) -> CheckOutcome {
    run_cases("cooperativity", seed, iterations, |rng| {
        let pre = random_state(rng, 2, MAX_ENGRAMS);
        let act = random_subset(rng, &pre);
        let post = fire(&pre, &act)?;
        let wq = weights(&post);
        for (&(i, j), &e) in &weights(&pre) {
            let after = wq[&(i, j)];
            let both = act.contains(&i) && act.contains(&j);
            let ok = if both {
                after > e || (e == 1.0 && after == 1.0)
            } else {
                after <= e
            };
            if !ok {
                return Err(format!("E({i},{j}) {e} -> {after}, both fired: {both}"));
            }
        }
        Ok(())
    })
}

/// When `i` fires without `j` and they have co-fired before, `E(i, j)` falls
/// to exactly `Count(i, j) / (Count(i, i) + 1)`.
pub fn check_depression(seed: u64, iterations: usize) -> CheckOutcome {
    run_cases("synaptic-depression", seed, iterations, |rng| {
        let pre = random_state(rng, 2, MAX_ENGRAMS);
        let act = random_subset(rng, &pre);
        let post = fire(&pre, &act)?;
        for &i in &act {
            for j in ids(&pre) {
                let c = pre.count(i, j);
                if act.contains(&j) || c == 0 {
                    continue;
                }
                let want = c as f64 / (pre.count(i, i) + 1) as f64;
                let got = post.edge_weight(i, j).expect("live");
                let before = pre.edge_weight(i, j).expect("live");
                if got != want || got >= before {
                    return Err(format!("E({i},{j}) {before} -> {got}, expected {want}"));
                }
            }
        }
        Ok(())
    })
}

/// Every edge weight stays in `[0, 1]` before and after a full step.
pub fn check_boundedness(seed: u64, iterations: usize) -> CheckOutcome {
    run_cases("boundedness", seed, iterations, |rng| {
        let pre = random_state(rng, 1, MAX_ENGRAMS);
        let post = full_step(rng, &pre)?;
        for s in [&pre, &post] {
            for ((i, j), e) in weights(s) {
                if !(0.0..=1.0).contains(&e) {
                    return Err(format!("E({i},{j}) = {e}"));
                }
            }
        }
        Ok(())
    })
}

/// When `i` fires with `j` alone, every other positive weight out of `i`
/// falls.
pub fn check_competition(seed: u64, iterations: usize) -> CheckOutcome {
    run_cases("competition", seed, iterations, |rng| {
        let pre = random_state(rng, 2, MAX_ENGRAMS);
        let all = ids(&pre);
        let pair: Vec<EngramId> = all.choose_multiple(rng, 2).copied().collect();
        let (i, j) = (pair[0], pair[1]);
        let post = fire(&pre, &[i, j])?;
        for &k in &all {
            if k == i || k == j || pre.count(i, k) == 0 {
                continue;
            }
            let (before, after) = (
                pre.edge_weight(i, k).expect("live"),
                post.edge_weight(i, k).expect("live"),
            );
            if after >= before {
                return Err(format!("E({i},{k}) {before} -> {after} while {i} fired with {j}"));
            }
        }
        Ok(())
    })
}

/// Counts between engrams that survive a step never decrease.
pub fn check_stability(seed: u64, iterations: usize) -> CheckOutcome {
    run_cases("long-term-stability", seed, iterations, |rng| {
        let mut state = random_state(rng, 1, MAX_ENGRAMS);
        for _ in 0..3 {
            let next = full_step(rng, &state)?;
            for i in ids(&next) {
                for j in ids(&next) {
                    if state.engram(i).is_some()
                        && state.engram(j).is_some()
                        && next.count(i, j) < state.count(i, j)
                    {
                        return Err(format!(
                            "Count({i},{j}) fell from {} to {}",
                            state.count(i, j),
                            next.count(i, j)
                        ));
                    }
                }
            }
            next.check_invariants()?;
            state = next;
        }
        Ok(())
    })
}

/// The six Hebbian property checks.
pub fn hebbian_suite(seed: u64, iterations: usize) -> Vec<CheckOutcome> {
    vec![
        check_locality(seed, iterations),
        check_cooperativity(seed, iterations),
        check_depression(seed, iterations),
        check_boundedness(seed, iterations),
        check_competition(seed, iterations),
        check_stability(seed, iterations),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub iterations: usize,
    pub checks: Vec<CheckOutcome>,
    pub warnings: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }
}

/// Steps simulated by the count reconstruction check.
pub const RECOUNT_STEPS: usize = 500;

/// Runs every campaign. Zero iterations passes vacuously with a warning.
pub fn run_all(seed: u64, iterations: usize, tie: TieBreak) -> VerifyReport {
    let mut warnings = Vec::new();
    if iterations == 0 {
        warnings.push("zero iterations: every check passes vacuously".to_string());
        return VerifyReport {
            seed,
            iterations,
            checks: Vec::new(),
            warnings,
        };
    }
    let mut checks = vec![differential_retrieval(seed, iterations, tie)];
    checks.push(recount_check(seed, RECOUNT_STEPS));
    checks.extend(hebbian_suite(seed, iterations));
    VerifyReport {
        seed,
        iterations,
        checks,
        warnings,
    }
}
