use std::path::Path;

use serde::{Deserialize, Serialize};
use urbannav::harness::output::{DEFAULT_BIN_WIDTH_M, DEFAULT_TARGET_RATE};
use urbannav::harness::{SweepGrid, TrialConfig};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// A run configuration file.
///
/// ```toml
/// version = 1
///
/// [trial]
/// seed = 7
/// [trial.goals]
/// mode = "single"
/// min_euclid_m = 500.0
/// max_euclid_m = 12000.0
///
/// [sweep]
/// trials_per_cell = 100
/// [sweep.grid]
/// strategies = ["straight_to_goal", "hybrid"]
/// densities = [1.0, 10.0]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub trial: TrialConfig,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub trials_per_cell: usize,
    pub base_seed: u64,
    pub bin_width_m: f64,
    pub target_rate: f64,
    pub grid: SweepGrid,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            trials_per_cell: 100,
            base_seed: 1,
            bin_width_m: DEFAULT_BIN_WIDTH_M,
            target_rate: DEFAULT_TARGET_RATE,
            grid: SweepGrid::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        cfg.trial.validate()?;
        if let Some(sweep) = &cfg.sweep {
            sweep.grid.validate()?;
            if sweep.trials_per_cell == 0 {
                return Err(CliError::Config("sweep.trials_per_cell must be at least 1".into()));
            }
            if sweep.bin_width_m.is_nan() || sweep.bin_width_m <= 0.0 {
                return Err(CliError::Config("sweep.bin_width_m must be positive".into()));
            }
            if !(sweep.target_rate > 0.0 && sweep.target_rate <= 1.0) {
                return Err(CliError::Config("sweep.target_rate must be in (0, 1]".into()));
            }
        }
        Ok(cfg)
    }

    /// Missing or unreadable config files are config errors.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Trial settings with the first sweep cell applied, if there is a grid.
    pub fn single_trial(&self) -> TrialConfig {
        match &self.sweep {
            Some(s) => s.grid.cells()[0].apply(&self.trial),
            None => self.trial.clone(),
        }
    }
}
