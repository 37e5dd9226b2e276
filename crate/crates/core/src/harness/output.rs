//! CSV artifacts. Every file starts with a `#schema <name> <version>` line
//! that readers check before parsing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::{average_lost_distance, range_at_success, success_rate_by_distance};
use super::{Outcome, SweepResult, TrialResult, TrialTrace, AXIS_SAMPLE_M};
use crate::navigation::Strategy;
use crate::{Error, Result};

pub const RESULTS_SCHEMA: &str = "#schema urbannav-results 1";
pub const SUMMARY_SCHEMA: &str = "#schema urbannav-summary 1";
pub const CURVES_SCHEMA: &str = "#schema urbannav-curves 1";
pub const ESTIMATOR_SCHEMA: &str = "#schema urbannav-estimator-trace 1";
pub const DECISIONS_SCHEMA: &str = "#schema urbannav-decisions 1";

/// One trial in a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub cell_id: usize,
    pub strategy: Strategy,
    pub density: f64,
    pub det_rate: f64,
    pub compass_2sigma_deg: f64,
    pub seed: u64,
    pub outcome: Outcome,
    pub manhattan_m: f64,
    pub euclid_m: f64,
    pub final_axis_m: f64,
    pub n_fixes: u32,
    pub n_intersections: u32,
}

impl ResultRow {
    /// The fields needed by the statistics functions.
    pub fn to_trial(&self) -> TrialResult {
        TrialResult {
            seed: self.seed,
            outcome: self.outcome,
            manhattan_m: self.manhattan_m,
            euclid_m: self.euclid_m,
            final_axis_m: self.final_axis_m,
            n_fixes: self.n_fixes,
            n_intersections: self.n_intersections,
            n_goals: u32::from(self.outcome == Outcome::Reached),
            sim_time_s: 0.0,
            axis_profile: Vec::new(),
        }
    }
}

/// Rows in canonical order, sorted by `(cell_id, seed)`.
pub fn result_rows(sweep: &SweepResult) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = sweep
        .cells
        .iter()
        .flat_map(|c| {
            c.trials.iter().map(move |t| ResultRow {
                cell_id: c.cell.id,
                strategy: c.cell.strategy,
                density: c.cell.density,
                det_rate: c.cell.detection_rate,
                compass_2sigma_deg: c.cell.compass_two_sigma_deg,
                seed: t.seed,
                outcome: t.outcome,
                manhattan_m: t.manhattan_m,
                euclid_m: t.euclid_m,
                final_axis_m: t.final_axis_m,
                n_fixes: t.n_fixes,
                n_intersections: t.n_intersections,
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.cell_id, r.seed));
    rows
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        Error::Io(e.to_string())
    } else {
        Error::Schema(e.to_string())
    }
}

fn write_rows<T: Serialize>(schema: &str, rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut buf = Vec::new();
    buf.extend_from_slice(schema.as_bytes());
    buf.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
    }
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    write_rows(RESULTS_SCHEMA, rows)
}

/// Parses a results file, refusing other schemas and empty files.
pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    if first.trim_end() != RESULTS_SCHEMA {
        return Err(Error::Schema(format!("expected `{RESULTS_SCHEMA}`, found `{}`", first.trim_end())));
    }
    let rows = csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(csv_err)?;
    if rows.is_empty() {
        return Err(Error::Schema("results file has no rows".into()));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell_id: usize,
    pub strategy: Strategy,
    pub density: f64,
    pub det_rate: f64,
    pub compass_2sigma_deg: f64,
    pub n_trials: usize,
    pub success_rate: f64,
    pub range_at_80_m: f64,
    pub mean_lost_manhattan_m: Option<f64>,
}

pub const DEFAULT_TARGET_RATE: f64 = 0.8;
pub const DEFAULT_BIN_WIDTH_M: f64 = 1000.0;

/// Per-cell statistics from canonical rows. `range_at_80_m` is evaluated
/// at `target_rate`.
pub fn summarize(rows: &[ResultRow], target_rate: f64, bin_width_m: f64) -> Result<Vec<SummaryRow>> {
    let mut cells: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        cells.entry(r.cell_id).or_default().push(r);
    }
    cells
        .into_values()
        .map(|rs| {
            let trials: Vec<TrialResult> = rs.iter().map(|r| r.to_trial()).collect();
            let curve = success_rate_by_distance(&trials, bin_width_m)?;
            let reached = trials.iter().filter(|t| t.outcome == Outcome::Reached).count();
            let head = rs[0];
            Ok(SummaryRow {
                cell_id: head.cell_id,
                strategy: head.strategy,
                density: head.density,
                det_rate: head.det_rate,
                compass_2sigma_deg: head.compass_2sigma_deg,
                n_trials: trials.len(),
                success_rate: reached as f64 / trials.len() as f64,
                range_at_80_m: range_at_success(&curve, target_rate)?,
                mean_lost_manhattan_m: average_lost_distance(&trials).ok(),
            })
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    write_rows(SUMMARY_SCHEMA, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub series: String,
    pub x_m: f64,
    pub y: f64,
}

/// Success-rate curves per cell, and the mean 2σ major axis against
/// distance driven over the trials still running at that distance.
pub fn curve_rows(sweep: &SweepResult, bin_width_m: f64) -> Result<Vec<CurveRow>> {
    let mut out = Vec::new();
    for c in &sweep.cells {
        for p in success_rate_by_distance(&c.trials, bin_width_m)? {
            out.push(CurveRow {
                series: format!("success/cell{}", c.cell.id),
                x_m: p.center_m,
                y: p.rate,
            });
        }
        let longest = c.trials.iter().map(|t| t.axis_profile.len()).max().unwrap_or(0);
        for k in 0..longest {
            let (sum, n) = c
                .trials
                .iter()
                .filter_map(|t| t.axis_profile.get(k))
                .fold((0.0, 0usize), |(s, n), &(_, a)| (s + a, n + 1));
            out.push(CurveRow {
                series: format!("axis/cell{}", c.cell.id),
                x_m: k as f64 * AXIS_SAMPLE_M,
                y: sum / n as f64,
            });
        }
    }
    Ok(out)
}

pub fn curves_csv(rows: &[CurveRow]) -> Result<String> {
    write_rows(CURVES_SCHEMA, rows)
}

#[derive(Serialize)]
struct EstimatorCsvRow {
    t: f64,
    x: f64,
    y: f64,
    theta: f64,
    v: f64,
    x_est: f64,
    y_est: f64,
    theta_est: f64,
    axis_m: f64,
}

#[derive(Serialize)]
struct DecisionCsvRow {
    t: f64,
    intersection_x_est: f64,
    intersection_y_est: f64,
    n_options: usize,
    chosen_index: usize,
    cost_chosen: f64,
    penalty_applied: f64,
}

pub fn estimator_trace_csv(trace: &TrialTrace) -> Result<String> {
    write_rows(
        ESTIMATOR_SCHEMA,
        trace.estimator.iter().map(|r| EstimatorCsvRow {
            t: r.t,
            x: r.truth.x,
            y: r.truth.y,
            theta: r.truth.theta,
            v: r.truth.v,
            x_est: r.mean.x,
            y_est: r.mean.y,
            theta_est: r.mean.z,
            axis_m: r.axis_m,
        }),
    )
}

pub fn decision_trace_csv(trace: &TrialTrace) -> Result<String> {
    write_rows(
        DECISIONS_SCHEMA,
        trace.decisions.iter().map(|d| DecisionCsvRow {
            t: d.t,
            intersection_x_est: d.intersection_est.x,
            intersection_y_est: d.intersection_est.y,
            n_options: d.n_options,
            chosen_index: d.chosen_index,
            cost_chosen: d.cost,
            penalty_applied: d.penalty,
        }),
    )
}
