//! Memory-effect analyses over a finished run: creation-time density of the
//! surviving long-term engrams, mean edge weight by age difference, retrieval
//! autocorrelation per tier, age of retrieved long-term engrams, and the
//! long-term size bound.
//!
//! Everything here is a pure function of a trace (and, for contiguity, the
//! final state).

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::config::Config;
use crate::engram::EngramId;
use crate::store::MemoryState;
use crate::trace::TraceLog;

/// Where one engram lived, reconstructed from the trace. Steps are the
/// retrieval steps at which the engram sat in the tier, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lifetime {
    pub created: u64,
    pub stm: Option<(u64, u64)>,
    pub ltm: Option<(u64, u64)>,
    /// Still stored after the last step of the trace.
    pub alive_at_end: bool,
}

/// Rebuilds every engram's tier residency from the trace.
pub fn lifetimes(log: &TraceLog) -> BTreeMap<EngramId, Lifetime> {
    struct Open {
        created: u64,
        promoted: Option<u64>,
    }
    let mut open: BTreeMap<EngramId, Open> = BTreeMap::new();
    let mut done = BTreeMap::new();
    let close = |id: EngramId, o: &Open, last: u64, alive: bool| -> (EngramId, Lifetime) {
        let stm_end = o.promoted.unwrap_or(last).min(last);
        let stm = (stm_end > o.created).then_some((o.created + 1, stm_end));
        let ltm = o.promoted.and_then(|p| (last > p).then_some((p + 1, last)));
        (
            id,
            Lifetime {
                created: o.created,
                stm,
                ltm,
                alive_at_end: alive,
            },
        )
    };
    let mut prev_step: Option<u64> = None;
    for r in &log.records {
        if r.reset {
            let last = prev_step.unwrap_or(r.step);
            for (id, o) in std::mem::take(&mut open) {
                let (id, l) = close(id, &o, last, false);
                done.insert(id, l);
            }
        }
        for &id in &r.created {
            open.insert(
                id,
                Open {
                    created: r.step,
                    promoted: None,
                },
            );
        }
        for &id in &r.pruned {
            if let Some(o) = open.remove(&id) {
                let (id, l) = close(id, &o, r.step, false);
                done.insert(id, l);
            }
        }
        for &id in &r.promoted_to_ltm {
            if let Some(o) = open.get_mut(&id) {
                o.promoted = Some(r.step);
            }
        }
        prev_step = Some(r.step);
    }
    if let Some(last) = prev_step {
        for (id, o) in open {
            let (id, l) = close(id, &o, last, true);
            done.insert(id, l);
        }
    }
    done
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityBin {
    /// Bin bounds as percent of the run.
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Kernel density estimate at the bin centre, per percent of run.
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreationDensity {
    pub bins: Vec<DensityBin>,
    pub bandwidth: f64,
    pub survivors: usize,
}

impl CreationDensity {
    fn mean_count(&self, from: f64, to: f64) -> f64 {
        let picked: Vec<usize> = self
            .bins
            .iter()
            .filter(|b| b.lo >= from - 1e-9 && b.hi <= to + 1e-9)
            .map(|b| b.count)
            .collect();
        if picked.is_empty() {
            return 0.0;
        }
        picked.iter().sum::<usize>() as f64 / picked.len() as f64
    }

    /// Mean bin count over the first 10%, the middle 40–60% and the last 10%
    /// of the run.
    pub fn head_middle_tail(&self) -> (f64, f64, f64) {
        (
            self.mean_count(0.0, 10.0),
            self.mean_count(40.0, 60.0),
            self.mean_count(90.0, 100.0),
        )
    }
}

/// Histogram (and Gaussian KDE) of the creation time of engrams still in
/// long-term memory at the end of the run. `bandwidth = None` uses Scott's
/// rule `sd * n^(-1/5)`.
pub fn creation_time_density(log: &TraceLog, bins: usize, bandwidth: Option<f64>) -> CreationDensity {
    let bins = bins.max(1);
    let total = log.records.last().map_or(0, |r| r.step + 1).max(1) as f64;
    let xs: Vec<f64> = lifetimes(log)
        .values()
        .filter(|l| l.alive_at_end && l.ltm.is_some())
        .map(|l| l.created as f64 / total * 100.0)
        .collect();
    let n = xs.len();
    let width = 100.0 / bins as f64;
    let h = bandwidth.unwrap_or_else(|| {
        if n < 2 {
            return width;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if sd > 0.0 {
            sd * (n as f64).powf(-0.2)
        } else {
            width
        }
    });
    let mut counts = vec![0usize; bins];
    for &x in &xs {
        let b = ((x / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let norm = 1.0 / ((n.max(1) as f64) * h * (2.0 * std::f64::consts::PI).sqrt());
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| {
            let lo = b as f64 * width;
            let centre = lo + width / 2.0;
            let density = xs
                .iter()
                .map(|x| (-0.5 * ((centre - x) / h).powi(2)).exp())
                .sum::<f64>()
                * norm;
            DensityBin {
                lo,
                hi: lo + width,
                count,
                density,
            }
        })
        .collect();
    CreationDensity {
        bins,
        bandwidth: h,
        survivors: n,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContiguityBin {
    /// Smallest age difference in the bin; the overflow bin covers
    /// everything from here up.
    pub age_diff: u64,
    pub overflow: bool,
    pub pairs: usize,
    pub weight_sum: f64,
}

impl ContiguityBin {
    pub fn mean_weight(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.weight_sum / self.pairs as f64)
    }
}

/// Mean edge weight over ordered pairs of live engrams that co-fired,
/// grouped by creation-step difference. Bins have width one up to `cap`,
/// then one overflow bin.
pub fn contiguity_profile(state: &MemoryState, cap: u64) -> Vec<ContiguityBin> {
    let mut bins: Vec<ContiguityBin> = (0..=cap + 1)
        .map(|d| ContiguityBin {
            age_diff: d,
            overflow: d > cap,
            pairs: 0,
            weight_sum: 0.0,
        })
        .collect();
    for (i, j, count) in state.graph().entries() {
        let (Some(a), Some(b)) = (state.engram(i), state.engram(j)) else {
            continue;
        };
        if count == 0 || a.fire_count == 0 {
            continue;
        }
        let diff = a.creation_step.abs_diff(b.creation_step);
        let bin = &mut bins[diff.min(cap + 1) as usize];
        bin.pairs += 1;
        bin.weight_sum += count as f64 / a.fire_count as f64;
    }
    bins
}

/// Mean edge weight over co-fired pairs whose age difference lies in
/// `lo..=hi`.
pub fn mean_weight_by_age_diff(state: &MemoryState, lo: u64, hi: u64) -> Option<f64> {
    let (mut n, mut sum) = (0usize, 0.0);
    for (i, j, count) in state.graph().entries() {
        let (Some(a), Some(b)) = (state.engram(i), state.engram(j)) else {
            continue;
        };
        let diff = a.creation_step.abs_diff(b.creation_step);
        if a.fire_count > 0 && (lo..=hi).contains(&diff) {
            n += 1;
            sum += count as f64 / a.fire_count as f64;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcfRow {
    pub lag: usize,
    pub stm: Option<f64>,
    pub stm_engrams: usize,
    pub ltm: Option<f64>,
    pub ltm_engrams: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcfTable {
    pub rows: Vec<AcfRow>,
    /// Largest lag reported for short-term memory.
    pub stm_max_lag: usize,
    pub warnings: Vec<String>,
}

/// Autocorrelation of a 0/1 series at `lag`: Pearson correlation of the
/// series against itself shifted by `lag`. A constant series counts as 1.
/// `None` when fewer than one pair exists or a shifted segment is constant
/// while the whole series is not.
pub fn series_autocorrelation(series: &[u8], lag: usize) -> Option<f64> {
    let n = series.len();
    if lag >= n {
        return None;
    }
    if series.iter().all(|&x| x == series[0]) {
        return Some(1.0);
    }
    let a: Vec<f64> = series[..n - lag].iter().map(|&x| f64::from(x)).collect();
    let b: Vec<f64> = series[lag..].iter().map(|&x| f64::from(x)).collect();
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(&b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

/// Per-engram retrieval series while resident in each tier: 1 when retrieved
/// from that tier at the step, 0 otherwise.
pub fn retrieval_series(log: &TraceLog) -> (BTreeMap<EngramId, Vec<u8>>, BTreeMap<EngramId, Vec<u8>>) {
    let by_step: HashMap<u64, usize> = log
        .records
        .iter()
        .enumerate()
        .map(|(n, r)| (r.step, n))
        .collect();
    let sets: Vec<(HashSet<EngramId>, HashSet<EngramId>)> = log
        .records
        .iter()
        .map(|r| {
            (
                r.retrieved.stm_rem.iter().copied().collect(),
                r.retrieved.ltm_rem.iter().copied().collect(),
            )
        })
        .collect();
    let series = |id: EngramId, span: (u64, u64), ltm: bool| -> Vec<u8> {
        (span.0..=span.1)
            .map(|s| {
                by_step.get(&s).map_or(0, |&n| {
                    let set = if ltm { &sets[n].1 } else { &sets[n].0 };
                    u8::from(set.contains(&id))
                })
            })
            .collect()
    };
    let (mut stm, mut ltm) = (BTreeMap::new(), BTreeMap::new());
    for (id, l) in lifetimes(log) {
        if let Some(span) = l.stm {
            stm.insert(id, series(id, span, false));
        }
        if let Some(span) = l.ltm {
            ltm.insert(id, series(id, span, true));
        }
    }
    (stm, ltm)
}

/// Retrieval autocorrelation per lag. Short-term memory averages engrams
/// equally and is capped at the residency minus one; long-term memory weights
/// each engram by the number of steps it spent there.
pub fn retrieval_autocorrelation(log: &TraceLog, max_lag: usize) -> AcfTable {
    let (stm, ltm) = retrieval_series(log);
    let residency = log
        .config
        .as_ref()
        .map(Config::stm_residency)
        .unwrap_or_else(|| stm.values().map(Vec::len).max().unwrap_or(1));
    let stm_max_lag = max_lag.min(residency.saturating_sub(1));
    let mut warnings = Vec::new();
    if stm_max_lag < max_lag {
        let msg = format!(
            "short-term lags capped at {stm_max_lag}: engrams stay only {residency} steps"
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let aggregate = |series: &BTreeMap<EngramId, Vec<u8>>, lag: usize, weighted: bool| {
        let (mut num, mut den, mut n) = (0.0, 0.0, 0usize);
        for s in series.values() {
            if let Some(r) = series_autocorrelation(s, lag) {
                let w = if weighted { s.len() as f64 } else { 1.0 };
                num += w * r;
                den += w;
                n += 1;
            }
        }
        ((den > 0.0).then(|| num / den), n)
    };
    let rows = (1..=max_lag)
        .map(|lag| {
            let (stm_r, stm_n) = if lag <= stm_max_lag {
                aggregate(&stm, lag, false)
            } else {
                (None, 0)
            };
            let (ltm_r, ltm_n) = aggregate(&ltm, lag, true);
            AcfRow {
                lag,
                stm: stm_r,
                stm_engrams: stm_n,
                ltm: ltm_r,
                ltm_engrams: ltm_n,
            }
        })
        .collect();
    AcfTable {
        rows,
        stm_max_lag,
        warnings,
    }
}

/// Mean age of the long-term engrams retrieved at each step; `None` where
/// nothing came from long-term memory.
pub fn retrieved_ltm_age_curve(log: &TraceLog) -> Vec<(u64, Option<f64>)> {
    let born = log.creation_steps();
    log.records
        .iter()
        .map(|r| {
            let ages: Vec<f64> = r
                .retrieved
                .ltm_rem
                .iter()
                .filter_map(|id| born.get(id))
                .map(|&c| (r.step - c) as f64)
                .collect();
            let mean = (!ages.is_empty()).then(|| ages.iter().sum::<f64>() / ages.len() as f64);
            (r.step, mean)
        })
        .collect()
}

/// Ordinary least-squares slope of `y` on `x`; `None` with fewer than two
/// distinct `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub step: u64,
    pub stm: usize,
    pub ltm: usize,
    pub total_lifespan: f64,
    /// Engrams per unit of lifespan after the previous step.
    pub c: Option<f64>,
    /// `(1 - c) * l_prev + K_step`, with `K_step` the lifespan handed out this
    /// step net of the new engrams' own decay.
    pub predicted_lifespan: Option<f64>,
    pub exceeds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `alpha * (n_stm_rem + n_ltm_rem)`.
    pub asymptote: f64,
    pub slack: f64,
    pub burn_in: u64,
    pub rows: Vec<BoundRow>,
    pub max_ltm_after_burn_in: usize,
    /// Steps after burn-in where `|LTM| > asymptote * (1 + slack)`.
    pub violations: Vec<u64>,
    pub max_relative_error: f64,
}

/// Tracks long-term memory size and total lifespan against the predicted
/// limit and the one-step lifespan recurrence.
pub fn ltm_bound_tracker(log: &TraceLog, config: &Config, slack: f64, burn_in: u64) -> BoundReport {
    let asymptote = config.ltm_asymptote();
    let limit = asymptote * (1.0 + slack);
    let first = log.records.first().map_or(0, |r| r.step);
    let mut rows = Vec::with_capacity(log.records.len());
    let mut prev: Option<(usize, f64)> = None;
    let (mut max_ltm, mut max_err) = (0usize, 0.0f64);
    let mut violations = Vec::new();
    for r in &log.records {
        let (c, predicted) = match prev {
            Some((live, l)) if !r.reset && l > 0.0 => {
                let c = live as f64 / l;
                let handed_out: f64 = r.increments.values().sum::<f64>()
                    + r.created.len() as f64 * (config.initial_lifespan - 1.0);
                (Some(c), Some((1.0 - c) * l + handed_out))
            }
            _ => (None, None),
        };
        if let Some(p) = predicted {
            if r.total_lifespan > 0.0 {
                max_err = max_err.max((p - r.total_lifespan).abs() / r.total_lifespan);
            }
        }
        let past_burn_in = r.step >= first + burn_in;
        let exceeds = past_burn_in && r.ltm_len as f64 > limit;
        if past_burn_in {
            max_ltm = max_ltm.max(r.ltm_len);
        }
        if exceeds {
            violations.push(r.step);
        }
        rows.push(BoundRow {
            step: r.step,
            stm: r.stm_len,
            ltm: r.ltm_len,
            total_lifespan: r.total_lifespan,
            c,
            predicted_lifespan: predicted,
            exceeds,
        });
        prev = Some((r.stm_len + r.ltm_len, r.total_lifespan));
    }
    BoundReport {
        asymptote,
        slack,
        burn_in,
        rows,
        max_ltm_after_burn_in: max_ltm,
        violations,
        max_relative_error: max_err,
    }
}

/// Share of long-term retrieval slots filled with an engram that matches the
/// current input: the mean over steps from `burn_in` on of
/// `|{e in ltm_rem : score(e) >= threshold}| / n_ltm_rem`. Empty slots count
/// as misses. `n_ltm_rem` comes from the log's config, or the largest
/// long-term retrieval seen when the log has none.
pub fn cue_hit_rate(log: &TraceLog, threshold: f64, burn_in: u64) -> f64 {
    let slots = log.config.as_ref().map_or_else(
        || log.records.iter().map(|r| r.retrieved.ltm_rem.len()).max().unwrap_or(0),
        |c| c.n_ltm_rem,
    );
    let first = log.records.first().map_or(0, |r| r.step);
    let steps: Vec<_> = log
        .records
        .iter()
        .filter(|r| r.step >= first + burn_in)
        .collect();
    if slots == 0 || steps.is_empty() {
        return 0.0;
    }
    let hits: usize = steps
        .iter()
        .map(|r| {
            r.retrieved
                .ltm_rem
                .iter()
                .filter(|id| r.retrieved.scores.get(id).is_some_and(|&s| s >= threshold))
                .count()
        })
        .sum();
    hits as f64 / (steps.len() * slots) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifecycle::StepReport;
    use crate::retrieval::RetrievalResult;

    fn ids(v: &[u64]) -> Vec<EngramId> {
        v.iter().map(|&n| EngramId(n)).collect()
    }

    #[test]
    fn acf_conventions() {
        assert_eq!(series_autocorrelation(&[1, 1, 1, 1], 2), Some(1.0));
        assert_eq!(series_autocorrelation(&[0, 0, 0], 1), Some(1.0));
        assert_eq!(series_autocorrelation(&[1, 0, 1, 0, 1, 0], 1), Some(-1.0));
        assert_eq!(series_autocorrelation(&[1, 0, 1, 0], 2), Some(1.0));
        assert_eq!(series_autocorrelation(&[1, 0], 2), None);
        assert_eq!(series_autocorrelation(&[0, 0, 0, 1], 1), None);
    }

    #[test]
    fn slope() {
        let pts = [(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)];
        assert!((least_squares_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(least_squares_slope(&[(1.0, 1.0)]), None);
    }

    fn record(step: u64, created: &[u64], pruned: &[u64], to_ltm: &[u64]) -> StepReport {
        StepReport {
            step,
            created: ids(created),
            retrieved: RetrievalResult {
                wm: ids(created),
                ..RetrievalResult::default()
            },
            pruned: ids(pruned),
            promoted_to_ltm: ids(to_ltm),
            ..StepReport::default()
        }
    }

    #[test]
    fn lifetimes_follow_promotion_and_pruning() {
        let log = TraceLog {
            config: None,
            records: vec![
                record(0, &[0, 1], &[], &[]),
                record(1, &[2], &[], &[0]),
                record(2, &[], &[1], &[]),
                record(3, &[], &[], &[]),
            ],
        };
        let l = lifetimes(&log);
        assert_eq!(l[&EngramId(0)].stm, Some((1, 1)));
        assert_eq!(l[&EngramId(0)].ltm, Some((2, 3)));
        assert!(l[&EngramId(0)].alive_at_end);
        assert_eq!(l[&EngramId(1)].stm, Some((1, 2)));
        assert!(!l[&EngramId(1)].alive_at_end);
        assert_eq!(l[&EngramId(2)].stm, Some((2, 3)));
    }

    #[test]
    fn reset_closes_everything() {
        let mut r2 = record(2, &[5], &[], &[]);
        r2.reset = true;
        let log = TraceLog {
            config: None,
            records: vec![record(0, &[0], &[], &[]), record(1, &[], &[], &[0]), r2],
        };
        let l = lifetimes(&log);
        assert!(!l[&EngramId(0)].alive_at_end);
        assert_eq!(l[&EngramId(0)].ltm, None);
        assert!(l[&EngramId(5)].alive_at_end);
    }

    #[test]
    fn empty_inputs() {
        let log = TraceLog::default();
        let d = creation_time_density(&log, 50, None);
        assert_eq!(d.survivors, 0);
        assert!(d.bins.iter().all(|b| b.count == 0));
        assert!(retrieved_ltm_age_curve(&log).is_empty());
        assert_eq!(cue_hit_rate(&log, 0.5, 0), 0.0);
    }
}
