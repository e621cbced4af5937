use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sfgap::{Error, Result, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutFormat {
    Json,
    Csv,
    Pretty,
}

/// Everything that influences a run. Embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub settings: Settings,
    pub seed: u64,
    /// Tone grid step for spectrum demos.
    pub grid_step: f64,
    /// Weight lattice resolution for sampled-function estimates.
    pub weight_steps: usize,
    pub out: OutFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { settings: Settings::default(), seed: 7, grid_step: 1.0 / 16.0, weight_steps: 8, out: OutFormat::Json }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        if !(self.grid_step > 0.0 && self.grid_step <= 1.0) {
            return Err(Error::InvalidInput(format!("grid step must lie in (0, 1], got {}", self.grid_step)));
        }
        if self.weight_steps == 0 {
            return Err(Error::InvalidInput("weight steps must be at least 1".into()));
        }
        Ok(())
    }
}
