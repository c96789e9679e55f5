use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use thiserror::Error;

use engram_core::analysis::{
    contiguity_profile, creation_time_density, least_squares_slope, ltm_bound_tracker,
    retrieval_autocorrelation, retrieved_ltm_age_curve,
};
use engram_core::{
    run_manifest, snapshot, verify, EngineError, FormatError, MemoryState, RunManifest, TieBreak,
    TraceLog,
};

use crate::plot::{chart, Series, Style};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed")]
    Verify,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Verify => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Usage(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, e: FormatError) -> CliError {
    match e {
        FormatError::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Usage(format!("{}: {other}", path.display())),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn read_trace(path: &Path) -> Result<TraceLog> {
    let f = File::open(path).map_err(io_err(path))?;
    TraceLog::read_from(BufReader::new(f)).map_err(|e| format_err(path, e))
}

fn read_snapshot(path: &Path) -> Result<MemoryState> {
    let f = File::open(path).map_err(io_err(path))?;
    snapshot::read(BufReader::new(f)).map_err(|e| format_err(path, e))
}

pub struct SimulateArgs {
    pub manifest: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub reset_period: Option<u64>,
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.manifest).map_err(io_err(&args.manifest))?;
    let mut manifest = RunManifest::parse(&text).map_err(|e| format_err(&args.manifest, e))?;
    if let Some(seed) = args.seed {
        manifest.seed = seed;
        manifest.workload.seed = seed;
    }
    if let Some(p) = args.reset_period {
        manifest.reset_period = p;
    }
    let out = args
        .out
        .or_else(|| manifest.out.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set `out` in the manifest".into()))?;
    fs::create_dir_all(&out).map_err(io_err(&out))?;

    let run = run_manifest(&manifest)?;

    let trace_path = out.join("trace.txt");
    let mut w = BufWriter::new(File::create(&trace_path).map_err(io_err(&trace_path))?);
    run.log.write_to(&mut w).and_then(|_| w.flush()).map_err(io_err(&trace_path))?;
    let snap_path = out.join("snapshot.txt");
    let mut w = BufWriter::new(File::create(&snap_path).map_err(io_err(&snap_path))?);
    snapshot::write(&run.state, &mut w).and_then(|_| w.flush()).map_err(io_err(&snap_path))?;
    write_file(&out.join("manifest.txt"), &manifest.to_kv())?;

    let last = run.log.records.last();
    println!(
        "{} steps, stm {} ltm {}, traces in {}",
        run.log.len(),
        last.map_or(0, |r| r.stm_len),
        last.map_or(0, |r| r.ltm_len),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Analysis {
    Creation,
    Contiguity,
    Acf,
    Age,
    Bound,
    All,
}

pub struct AnalyzeArgs {
    pub trace: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub analysis: Analysis,
    pub out: PathBuf,
    pub bins: usize,
    pub max_lag: usize,
    pub max_age_diff: u64,
    pub slack: f64,
    pub burn_in: u64,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub fn analyze(args: AnalyzeArgs) -> Result<()> {
    use Analysis::*;
    let wants = |a: Analysis| args.analysis == a || args.analysis == All;
    let need_trace = [Creation, Acf, Age, Bound].into_iter().any(wants);
    let trace = match (&args.trace, need_trace) {
        (Some(p), true) => Some(read_trace(p)?),
        (None, true) => return Err(CliError::Usage("this analysis needs --trace".into())),
        _ => None,
    };
    let state = match (&args.snapshot, wants(Contiguity)) {
        (Some(p), true) => Some(read_snapshot(p)?),
        (None, true) => return Err(CliError::Usage("contiguity needs --snapshot".into())),
        _ => None,
    };
    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let out = |name: &str| args.out.join(name);

    if let (true, Some(log)) = (wants(Creation), &trace) {
        let d = creation_time_density(log, args.bins, None);
        let mut csv = String::from("lo_percent,hi_percent,count,density\n");
        for b in &d.bins {
            writeln!(csv, "{},{},{},{}", b.lo, b.hi, b.count, b.density).unwrap();
        }
        write_file(&out("creation.csv"), &csv)?;
        let mid = |lo: f64, hi: f64| (lo + hi) / 2.0;
        let svg = chart(
            "creation time of surviving long-term engrams",
            "creation time (% of run)",
            "engrams",
            &[
                Series { name: "count", points: d.bins.iter().map(|b| (mid(b.lo, b.hi), b.count as f64)).collect() },
            ],
            Style::Line,
        );
        write_file(&out("creation.svg"), &svg)?;
        let (h, m, t) = d.head_middle_tail();
        println!("creation: {} survivors, head/middle/tail {h:.2}/{m:.2}/{t:.2}", d.survivors);
    }

    if let (true, Some(state)) = (wants(Contiguity), &state) {
        let bins = contiguity_profile(state, args.max_age_diff);
        let mut csv = String::from("age_diff,overflow,pairs,mean_weight\n");
        for b in &bins {
            writeln!(csv, "{},{},{},{}", b.age_diff, b.overflow, b.pairs, fmt_opt(b.mean_weight())).unwrap();
        }
        write_file(&out("contiguity.csv"), &csv)?;
        let points = bins
            .iter()
            .filter_map(|b| b.mean_weight().map(|w| (b.age_diff as f64, w)))
            .collect();
        let svg = chart("edge weight by age difference", "age difference (steps)", "mean weight", &[Series { name: "E", points }], Style::Line);
        write_file(&out("contiguity.svg"), &svg)?;
        println!("contiguity: {} bins, {} pairs", bins.len(), bins.iter().map(|b| b.pairs).sum::<usize>());
    }

    if let (true, Some(log)) = (wants(Acf), &trace) {
        // the capped-lag warning is logged by the analysis itself
        let table = retrieval_autocorrelation(log, args.max_lag);
        let mut csv = String::from("lag,stm_acf,stm_engrams,ltm_acf,ltm_engrams\n");
        for r in &table.rows {
            writeln!(csv, "{},{},{},{},{}", r.lag, fmt_opt(r.stm), r.stm_engrams, fmt_opt(r.ltm), r.ltm_engrams).unwrap();
        }
        write_file(&out("acf.csv"), &csv)?;
        let series = |f: fn(&engram_core::analysis::AcfRow) -> Option<f64>| {
            table.rows.iter().filter_map(|r| f(r).map(|v| (r.lag as f64, v))).collect()
        };
        let svg = chart(
            "retrieval autocorrelation",
            "lag (steps)",
            "acf",
            &[Series { name: "stm", points: series(|r| r.stm) }, Series { name: "ltm", points: series(|r| r.ltm) }],
            Style::Line,
        );
        write_file(&out("acf.svg"), &svg)?;
        println!("acf: {} lags, stm reported up to lag {}", table.rows.len(), table.stm_max_lag);
    }

    if let (true, Some(log)) = (wants(Age), &trace) {
        let curve = retrieved_ltm_age_curve(log);
        let mut csv = String::from("step,mean_age\n");
        for (s, a) in &curve {
            writeln!(csv, "{s},{}", fmt_opt(*a)).unwrap();
        }
        write_file(&out("age.csv"), &csv)?;
        let points: Vec<(f64, f64)> = curve.iter().filter_map(|(s, a)| a.map(|a| (*s as f64, a))).collect();
        let slope = least_squares_slope(&points);
        let svg = chart("age of retrieved long-term engrams", "step", "mean age", &[Series { name: "age", points }], Style::Dots);
        write_file(&out("age.svg"), &svg)?;
        println!("age: slope {}", slope.map_or("n/a".into(), |s| format!("{s:.4}")));
    }

    if let (true, Some(log)) = (wants(Bound), &trace) {
        let config = log
            .config
            .clone()
            .ok_or_else(|| CliError::Usage("trace has no config header, needed for the bound".into()))?;
        let report = ltm_bound_tracker(log, &config, args.slack, args.burn_in);
        let mut csv = String::from("step,stm,ltm,total_lifespan,c,predicted_lifespan,exceeds\n");
        for r in &report.rows {
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                r.step, r.stm, r.ltm, r.total_lifespan, fmt_opt(r.c), fmt_opt(r.predicted_lifespan), r.exceeds
            )
            .unwrap();
        }
        write_file(&out("bound.csv"), &csv)?;
        let ltm = report.rows.iter().map(|r| (r.step as f64, r.ltm as f64)).collect();
        let limit = report
            .rows
            .iter()
            .map(|r| (r.step as f64, report.asymptote))
            .collect();
        let svg = chart(
            "long-term memory size",
            "step",
            "engrams",
            &[Series { name: "ltm", points: ltm }, Series { name: "asymptote", points: limit }],
            Style::Line,
        );
        write_file(&out("bound.svg"), &svg)?;
        println!(
            "bound: asymptote {:.1}, max after burn-in {}, {} steps over {:.0}% slack",
            report.asymptote,
            report.max_ltm_after_burn_in,
            report.violations.len(),
            report.slack * 100.0
        );
    }
    Ok(())
}

pub fn verify(seed: u64, iterations: usize, invert_tie_break: bool) -> Result<()> {
    let tie = if invert_tie_break {
        TieBreak::NewerFirst
    } else {
        TieBreak::OlderFirst
    };
    let report = verify::run_all(seed, iterations, tie);
    // a closed pipe (e.g. `| head`) must not turn a result into a panic
    let mut out = std::io::stdout().lock();
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for c in &report.checks {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{verdict} {}: {} cases, {} failures", c.name, c.cases, c.failures);
        if let Some(f) = &c.first_failure {
            let _ = writeln!(out, "  first failure:");
            for l in f.lines() {
                let _ = writeln!(out, "    {l}");
            }
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Verify)
    }
}

/// Graphviz DOT with one node per engram and one edge per directed weight
/// at or above `min_weight`.
pub fn graph_dot(state: &MemoryState, min_weight: f64) -> String {
    let mut s = String::from("digraph engrams {\n");
    for e in state.engrams() {
        writeln!(
            s,
            "  {} [tier=\"{}\", creation_step={}, lifespan={}];",
            e.id.0,
            e.tier.as_str(),
            e.creation_step,
            e.lifespan
        )
        .unwrap();
    }
    for (i, j, count) in state.graph().entries() {
        if count == 0 {
            continue;
        }
        let Ok(w) = state.edge_weight(i, j) else { continue };
        if w >= min_weight {
            writeln!(s, "  {} -> {} [weight={w}, label=\"{w:.3}\"];", i.0, j.0).unwrap();
        }
    }
    s.push_str("}\n");
    s
}

pub fn export_graph(snapshot: &Path, min_weight: f64, out: &Path) -> Result<()> {
    if !(min_weight.is_finite() && min_weight >= 0.0) {
        return Err(CliError::Usage(format!("--min-weight must be a non-negative number, got {min_weight}")));
    }
    let state = read_snapshot(snapshot)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    write_file(out, &graph_dot(&state, min_weight))
}
