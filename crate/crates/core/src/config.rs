//! Experiment configuration: a plain `key = value` file with an
//! `[experiment]` section. Command-line flags take precedence over the file.

use crate::analytics::ModelParams;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub beta: f64,
    pub theta: f64,
    pub alpha: f64,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    /// Monte Carlo sample count for `simulate`.
    pub samples: u64,
    /// Scale factor for `verify` sample sizes.
    pub scale: f64,
    pub z_max: f64,
    /// Horizon for simulations.
    pub t: f64,
    /// Observation level for limits and decorated simulations.
    pub s: f64,
    pub lambda: f64,
    /// Largest conditioning time of a limit sweep; chosen from theta when absent.
    pub t_max: Option<f64>,
    pub x0: f64,
    pub epsilon: f64,
    /// Grid resolution of the exact small-tree distance.
    pub delta: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            beta: 1.0,
            theta: 0.0,
            alpha: 1.0,
            seed: 20_240_601,
            jobs: None,
            out: None,
            samples: 10_000,
            scale: 1.0,
            z_max: 3.0,
            t: 1.0,
            s: 1.0,
            lambda: 0.5,
            t_max: None,
            x0: 1.0,
            epsilon: 0.05,
            delta: 1e-3,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    experiment: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let f: File = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        f.experiment.validate()?;
        Ok(f.experiment)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.beta, self.theta, self.alpha)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
            .unwrap_or(if self.theta == 0.0 { 200.0 } else { 20.0 })
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        let positive = [
            ("t", self.t),
            ("s", self.s),
            ("scale", self.scale),
            ("z_max", self.z_max),
            ("epsilon", self.epsilon),
            ("delta", self.delta),
        ];
        if let Some((k, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("{k} must be positive, got {v}")));
        }
        if !(self.lambda >= 0.0) || !(self.x0 >= 0.0) || self.samples == 0 || self.jobs == Some(0) {
            return Err(Error::Config(
                "lambda and x0 must be non-negative, samples and jobs positive".into(),
            ));
        }
        if self.t_max.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Config("t_max must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_experiment_section() {
        let c =
            ExperimentConfig::parse("[experiment]\nname = \"x\"\ntheta = 0.5\nseed = 7\n").unwrap();
        assert_eq!(
            (c.name.as_str(), c.theta, c.seed, c.beta),
            ("x", 0.5, 7, 1.0)
        );
        assert_eq!(c.t_max(), 20.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("[experiment]\nbeta = -1.0\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\nunknown = 1\n").is_err());
        assert!(ExperimentConfig::parse("beta = 1.0\n").is_err());
    }
}
