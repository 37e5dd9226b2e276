//! Closed-loop trials, Monte Carlo sweeps and their statistics.

pub mod output;
pub mod stats;
mod sweep;
mod trial;

pub use sweep::{run_cell, run_sweep, trial_seed, Cell, CellResult, SweepGrid, SweepResult};
pub use trial::{
    run_trial, run_trial_traced, DecisionRow, EstimatorRow, GoalPlan, Outcome, TrialConfig, TrialResult, TrialTrace,
    AXIS_SAMPLE_M,
};
