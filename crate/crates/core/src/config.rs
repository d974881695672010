//! JSON run configuration shared by the command-line front end.
//!
//! Every field is optional: an absent field means "use the built-in
//! default", and explicit command-line flags override anything loaded
//! here. The file is located either by an explicit path or, failing
//! that, by the `APPROXAI_CONFIG` environment variable; unknown keys are
//! rejected so typos fail loudly instead of being silently ignored.

use crate::apxnum::{EnergyTable, LEVEL_COUNT};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable consulted when no config path is given.
pub const CONFIG_ENV_VAR: &str = "APPROXAI_CONFIG";

/// Optional defaults for a run; flags take precedence over every field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Per-level energy cost override (must validate as an
    /// [`EnergyTable`]: positive, strictly increasing, last entry 1.0).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_table: Option<[f64; LEVEL_COUNT]>,
    /// Default approximation level for single-level operations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
    /// Default per-stage schedule for transform operations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<u8>>,
    /// Default worker count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Default random seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Default output directory for reports and artifacts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Default PSNR floor (dB) for schedule search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psnr_db: Option<f64>,
    /// Default energy budget (exact-multiply units) for schedule search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_budget: Option<f64>,
    /// Default probability threshold for schedule search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
    /// Default sample count for schedule search and benchmarks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl RunConfig {
    /// Parses a config from JSON text and validates every present field.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Resolves the effective config: an explicit path wins, otherwise
    /// the `APPROXAI_CONFIG` environment variable, otherwise built-in
    /// defaults (an empty config).
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        if let Some(path) = explicit {
            return Self::load(path);
        }
        match std::env::var_os(CONFIG_ENV_VAR) {
            Some(path) => Self::load(PathBuf::from(path)),
            None => Ok(Self::default()),
        }
    }

    /// The energy table to price multiplies with: the override if
    /// present, the built-in default otherwise.
    pub fn energy_table(&self) -> Result<EnergyTable> {
        match self.energy_table {
            Some(costs) => EnergyTable::new(costs),
            None => Ok(EnergyTable::default()),
        }
    }

    fn validate(&self) -> Result<()> {
        // Surface bad values at load time, not at first use.
        self.energy_table()?;
        if let Some(level) = self.level {
            crate::apxnum::ApproxLevel::new(level)?;
        }
        if let Some(schedule) = &self.schedule {
            for &l in schedule {
                crate::apxnum::ApproxLevel::new(l)?;
            }
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidArgument(
                "config workers must be at least 1".into(),
            ));
        }
        if let Some(p) = self.prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "config prob must be in [0, 1], got {p}"
                )));
            }
        }
        if self.samples == Some(0) {
            return Err(Error::InvalidArgument(
                "config samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
