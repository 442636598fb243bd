use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

/// Parameters that may also be given on the command line. A flag on the
/// command line wins over the same key here.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub p: Option<f64>,
    pub basis: Option<String>,
    pub bases: Option<Vec<String>>,
    pub mode: Option<String>,
    pub events: Option<u64>,
    pub duration_hours: Option<f64>,
    pub rate_per_hour: Option<f64>,
    pub counts: Option<Vec<PathBuf>>,
    pub order: Option<u32>,
    pub network: Option<String>,
    pub alpha: Option<f64>,
    pub phase: Option<f64>,
    pub qubit: Option<String>,
    pub outcome: Option<String>,
    pub input: Option<String>,
    pub receivers: Option<Vec<usize>>,
    pub k: Option<f64>,
    pub witness: Option<String>,
    pub bound: Option<f64>,
    pub identity_constant: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if let Some(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("config p = {p} outside [0, 1]"));
            }
        }
        for (name, v) in [("duration_hours", self.duration_hours), ("rate_per_hour", self.rate_per_hour), ("k", self.k)] {
            if v.is_some_and(|v| !(v >= 0.0)) {
                return bad(format!("config {name} must be non-negative"));
            }
        }
        if let Some(a) = self.alpha {
            if !(a.abs() < 1.0) {
                return bad(format!("config alpha = {a} must satisfy |alpha| < 1"));
            }
        }
        if let Some(b) = self.bound {
            if !(b > 0.0 && b < 1.0) {
                return bad(format!("config bound = {b} outside (0, 1)"));
            }
        }
        Ok(())
    }
}

/// Command-line value if present, else the config value.
pub fn pick<T>(flag: Option<T>, config: Option<T>) -> Option<T> {
    flag.or(config)
}
