//! Run configuration files: a `[scenario]` table plus optional `[output]`
//! and `[observability]` tables, TOML syntax.

use std::fmt;
use std::path::{Path, PathBuf};

use iekf::sim::Scenario;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Scenario,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub observability: ObservabilityConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// File stem for the CSV and summary; defaults to the config file stem.
    pub name: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservabilityConfig {
    /// Update epochs per window.
    pub window: usize,
    /// Common floor for every condition.
    pub floor: f64,
}

impl Default for ObservabilityConfig {
    fn default() -> Self {
        Self { window: 3, floor: 1e-8 }
    }
}

#[derive(Debug)]
pub struct ConfigError {
    pub path: PathBuf,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.message)
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let err = |message: String| ConfigError { path: path.to_path_buf(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let config: Config = toml::from_str(&text).map_err(|e| err(e.to_string().trim_end().to_string()))?;
        config.scenario.validate().map_err(|e| err(e.to_string()))?;
        if config.observability.window == 0 || !(config.observability.floor >= 0.0) {
            return Err(err("observability.window must be at least 1 and floor non-negative".into()));
        }
        Ok(config)
    }

    pub fn name(&self, path: &Path) -> String {
        self.output
            .name
            .clone()
            .unwrap_or_else(|| path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned()))
    }
}
