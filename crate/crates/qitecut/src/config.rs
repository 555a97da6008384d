//! Declarative run configuration: a small TOML file whose keys mirror the
//! run parameters, each overridable by CLI flags.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::qite::{ItdSchedule, QiteConfig, TauMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("cannot parse {0}: {1}")]
    Parse(String, toml::de::Error),
}

/// Keys accepted in a config file. All optional; absent keys fall back to
/// the built-in defaults and any value can be overridden on the command
/// line.
///
/// ```toml
/// max_steps = 10
/// tau_max = 2.0
/// tau_points = 201
/// variance_tol = 1e-8
/// # fixed_tau = 0.2        # disables the per-step search
/// ramp = [1.0, 0.5]        # excision ramp f(1), f(2), ...
/// shots = 128
/// seed = 1
/// jobs = 4
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub max_steps: Option<usize>,
    pub tau_max: Option<f64>,
    pub tau_points: Option<usize>,
    pub variance_tol: Option<f64>,
    pub fixed_tau: Option<f64>,
    pub ramp: Option<Vec<f64>>,
    pub shots: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse(path.display().to_string(), e))
    }

    /// Applies the file's values on top of `base` (the built-in defaults).
    pub fn apply(&self, base: &mut QiteConfig) {
        if let Some(v) = self.max_steps {
            base.max_steps = v;
        }
        if let Some(v) = self.tau_max {
            base.tau_max = v;
        }
        if let Some(v) = self.tau_points {
            base.tau_points = v;
        }
        if let Some(v) = self.variance_tol {
            base.variance_tol = v;
        }
        if let Some(t) = self.fixed_tau {
            base.tau_mode = TauMode::Fixed(t);
        }
        if let Some(ramp) = &self.ramp {
            let excised = base.itd.as_ref().map(|s| s.excised_edges.clone()).unwrap_or_default();
            base.itd = Some(ItdSchedule::new(excised, ramp.clone()));
        }
    }
}
