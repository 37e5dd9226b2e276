use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trial, TrialConfig, TrialResult};
use crate::navigation::Strategy;
use crate::rng::derive_seed;
use crate::sensors::compass_sigma_from_two_sigma_deg;
use crate::{Error, Result};

/// Axes of a Monte Carlo sweep. Every combination is one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub strategies: Vec<Strategy>,
    /// Landmarks per km².
    pub densities: Vec<f64>,
    pub detection_rates: Vec<f64>,
    /// 2σ compass noise in degrees; zero disables the compass.
    pub compass_two_sigma_deg: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            strategies: vec![Strategy::StraightToGoal],
            densities: vec![0.0],
            detection_rates: vec![1.0],
            compass_two_sigma_deg: vec![30.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub strategy: Strategy,
    pub density: f64,
    pub detection_rate: f64,
    pub compass_two_sigma_deg: f64,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty()
            || self.densities.is_empty()
            || self.detection_rates.is_empty()
            || self.compass_two_sigma_deg.is_empty()
        {
            return Err(Error::param("grid", "every axis needs at least one value"));
        }
        if self.densities.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::param("grid.densities", "must be non-negative"));
        }
        if self.detection_rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::param("grid.detection_rates", "must be in [0, 1]"));
        }
        if self.compass_two_sigma_deg.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::param("grid.compass_two_sigma_deg", "must be non-negative"));
        }
        Ok(())
    }

    /// Cells in row-major order: strategy, density, detection rate, compass.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &strategy in &self.strategies {
            for &density in &self.densities {
                for &detection_rate in &self.detection_rates {
                    for &compass_two_sigma_deg in &self.compass_two_sigma_deg {
                        cells.push(Cell {
                            id: cells.len(),
                            strategy,
                            density,
                            detection_rate,
                            compass_two_sigma_deg,
                        });
                    }
                }
            }
        }
        cells
    }
}

impl Cell {
    pub fn apply(&self, base: &TrialConfig) -> TrialConfig {
        let mut cfg = base.clone();
        cfg.nav.strategy = self.strategy;
        cfg.city.landmark_density = self.density;
        cfg.detection.detection_rate = self.detection_rate;
        cfg.compass_sigma_rad = compass_sigma_from_two_sigma_deg(self.compass_two_sigma_deg);
        cfg
    }
}

/// Seed of trial `index`. It does not depend on the cell, so every cell
/// sees the same maps and start/goal pairs.
pub fn trial_seed(base_seed: u64, index: usize) -> u64 {
    derive_seed(base_seed, index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub trials: Vec<TrialResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
}

pub fn run_cell(base: &TrialConfig, cell: &Cell, trials: usize, base_seed: u64) -> Result<CellResult> {
    let cfg = cell.apply(base);
    let results = (0..trials)
        .into_par_iter()
        .map(|i| {
            run_trial(&TrialConfig {
                seed: trial_seed(base_seed, i),
                ..cfg.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellResult {
        cell: *cell,
        trials: results,
    })
}

/// Runs `trials_per_cell` trials in every cell of `grid`. With `workers`
/// set, a dedicated pool of that size is used; results do not depend on it.
pub fn run_sweep(
    base: &TrialConfig,
    grid: &SweepGrid,
    trials_per_cell: usize,
    base_seed: u64,
    workers: Option<usize>,
) -> Result<SweepResult> {
    if trials_per_cell == 0 {
        return Err(Error::param("trials_per_cell", "must be at least 1"));
    }
    grid.validate()?;
    base.validate()?;
    let cells = grid.cells();
    for cell in &cells {
        cell.apply(base).validate()?;
    }
    let run = || {
        let jobs: Vec<(usize, usize)> = (0..cells.len())
            .flat_map(|c| (0..trials_per_cell).map(move |i| (c, i)))
            .collect();
        let configs: Vec<TrialConfig> = cells.iter().map(|c| c.apply(base)).collect();
        let flat = jobs
            .par_iter()
            .map(|&(c, i)| {
                run_trial(&TrialConfig {
                    seed: trial_seed(base_seed, i),
                    ..configs[c].clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut flat = flat.into_iter();
        Ok(SweepResult {
            cells: cells
                .iter()
                .map(|cell| CellResult {
                    cell: *cell,
                    trials: flat.by_ref().take(trials_per_cell).collect(),
                })
                .collect(),
        })
    };
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Pool(e.to_string()))?
            .install(run),
        None => run(),
    }
}
