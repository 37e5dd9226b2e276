use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use urbannav::harness::output::{
    curve_rows, curves_csv, decision_trace_csv, estimator_trace_csv, parse_results_csv, result_rows, results_csv,
    summarize, summary_csv, ResultRow,
};
use urbannav::harness::stats::average_lost_distance;
use urbannav::harness::{run_sweep, run_trial, run_trial_traced, TrialResult};

use crate::config::{RunConfig, SweepSection, CONFIG_VERSION};
use crate::CliError;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes through a temporary file in the same directory, then renames, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

pub struct TrialArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub trace: bool,
    pub out: PathBuf,
}

pub fn summary_line(r: &TrialResult) -> String {
    format!(
        "outcome={} manhattan_m={:.1} final_axis_m={:.2}",
        r.outcome, r.manhattan_m, r.final_axis_m
    )
}

/// Runs one trial and returns its summary line.
pub fn cmd_trial(args: &TrialArgs) -> Result<String, CliError> {
    let run = RunConfig::load(&args.config)?;
    let mut cfg = run.single_trial();
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if !args.trace {
        return Ok(summary_line(&run_trial(&cfg)?));
    }
    let (result, trace) = run_trial_traced(&cfg)?;
    ensure_dir(&args.out)?;
    write_atomic(&args.out.join("estimator.csv"), &estimator_trace_csv(&trace)?)?;
    write_atomic(&args.out.join("decisions.csv"), &decision_trace_csv(&trace)?)?;
    Ok(summary_line(&result))
}

pub struct SweepArgs {
    pub config: PathBuf,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    config_version: u32,
    tool_version: &'static str,
    created_unix_s: u64,
    output_dir: String,
    trials_per_cell: usize,
    base_seed: u64,
    config: &'a RunConfig,
}

/// Runs a sweep and writes `results.csv`, `summary.csv`, `curves.csv` and
/// `manifest.toml` into the output directory. Returns a short report.
pub fn cmd_sweep(args: &SweepArgs) -> Result<String, CliError> {
    let mut run = RunConfig::load(&args.config)?;
    let mut sweep = run.sweep.clone().unwrap_or_default();
    if let Some(n) = args.trials {
        if n == 0 {
            return Err(CliError::Config("--trials must be at least 1".into()));
        }
        sweep.trials_per_cell = n;
    }
    if let Some(seed) = args.seed {
        sweep.base_seed = seed;
    }
    run.sweep = Some(sweep.clone());
    let SweepSection {
        trials_per_cell,
        base_seed,
        bin_width_m,
        target_rate,
        ref grid,
    } = sweep;

    let result = run_sweep(&run.trial, grid, trials_per_cell, base_seed, args.workers)?;
    let rows = result_rows(&result);
    let summary = summarize(&rows, target_rate, bin_width_m)?;
    let curves = curve_rows(&result, bin_width_m)?;

    ensure_dir(&args.out)?;
    write_atomic(&args.out.join("results.csv"), &results_csv(&rows)?)?;
    write_atomic(&args.out.join("summary.csv"), &summary_csv(&summary)?)?;
    write_atomic(&args.out.join("curves.csv"), &curves_csv(&curves)?)?;
    let manifest = RunManifest {
        config_version: CONFIG_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        created_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        output_dir: args.out.display().to_string(),
        trials_per_cell,
        base_seed,
        config: &run,
    };
    let manifest = toml::to_string(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    write_atomic(&args.out.join("manifest.toml"), &manifest)?;

    Ok(format!(
        "{} cells x {} trials -> {}",
        summary.len(),
        trials_per_cell,
        args.out.display()
    ))
}

pub struct ReportArgs {
    pub results: PathBuf,
    pub target_rate: f64,
    pub bin_width_m: f64,
}

fn km(m: Option<f64>) -> String {
    m.map_or_else(|| "-".to_string(), |m| format!("{:.2}", m / 1000.0))
}

/// Per-cell range at the target success rate and mean lost distance per
/// compass condition.
pub fn cmd_report(args: &ReportArgs) -> Result<String, CliError> {
    if !(args.target_rate > 0.0 && args.target_rate <= 1.0) {
        return Err(CliError::Config("--target-rate must be in (0, 1]".into()));
    }
    let text = fs::read_to_string(&args.results).map_err(|e| io_err(&args.results, e))?;
    let rows = parse_results_csv(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.results.display())))?;
    let summary = summarize(&rows, args.target_rate, args.bin_width_m)?;

    let mut out = String::new();
    let pct = (args.target_rate * 100.0).round();
    let _ = writeln!(
        out,
        "{:>4}  {:<20} {:>7} {:>6} {:>8} {:>6} {:>8} {:>12}",
        "cell", "strategy", "density", "rate", "compass", "n", "success", format!("range@{pct}%km")
    );
    for s in &summary {
        let _ = writeln!(
            out,
            "{:>4}  {:<20} {:>7} {:>6} {:>8} {:>6} {:>8.3} {:>12}",
            s.cell_id,
            s.strategy.name(),
            s.density,
            s.det_rate,
            s.compass_2sigma_deg,
            s.n_trials,
            s.success_rate,
            km(Some(s.range_at_80_m)),
        );
    }

    let mut by_compass: BTreeMap<u64, Vec<&ResultRow>> = BTreeMap::new();
    for r in &rows {
        by_compass.entry(r.compass_2sigma_deg.to_bits()).or_default().push(r);
    }
    let _ = writeln!(out, "\n{:>8} {:>6} {:>6} {:>14}", "compass", "n", "lost", "mean_lost_km");
    for group in by_compass.values() {
        let trials: Vec<TrialResult> = group.iter().map(|r| r.to_trial()).collect();
        let lost = trials
            .iter()
            .filter(|t| t.outcome == urbannav::harness::Outcome::Lost)
            .count();
        let compass = group[0].compass_2sigma_deg;
        let label = if compass == 0.0 { "none".to_string() } else { compass.to_string() };
        let _ = writeln!(
            out,
            "{:>8} {:>6} {:>6} {:>14}",
            label,
            trials.len(),
            lost,
            km(average_lost_distance(&trials).ok())
        );
    }
    Ok(out)
}
