use serde::{Deserialize, Serialize};

use crate::error::{HdError, Result};
use crate::regen::{NFormula, Weights};

/// Training mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Adaptive learning plus dimension regeneration.
    #[default]
    Dynamic,
    /// Static encoder: adaptive learning only.
    Static,
}

impl std::str::FromStr for Mode {
    type Err = HdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dynamic" => Ok(Mode::Dynamic),
            "static" => Ok(Mode::Static),
            other => Err(HdError::invalid(format!("unknown mode `{other}` (dynamic|static)"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Dynamic => "dynamic",
            Mode::Static => "static",
        })
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Physical dimensionality D.
    pub dim: usize,
    /// Learning rate η.
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    /// Regeneration rate R, percent of D per side.
    pub regen_rate: f64,
    pub max_iters: usize,
    /// Iterations without a `min_delta` validation gain before stopping.
    pub patience: usize,
    /// Minimum validation-accuracy gain (fraction, 0.001 = 0.1%).
    pub min_delta: f64,
    pub mode: Mode,
    pub n_formula: NFormula,
    /// Visit samples in a seeded random order each epoch.
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 500,
            eta: 0.05,
            alpha: 1.0,
            beta: 1.0,
            theta: 0.5,
            regen_rate: 20.0,
            max_iters: 50,
            patience: 5,
            min_delta: 0.001,
            mode: Mode::Dynamic,
            n_formula: NFormula::Prose,
            shuffle: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn weights(&self) -> Weights {
        Weights {
            alpha: self.alpha,
            beta: self.beta,
            theta: self.theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(HdError::invalid("dim must be at least 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(HdError::invalid(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.regen_rate > 0.0 && self.regen_rate <= 100.0) {
            return Err(HdError::invalid(format!(
                "regen_rate must lie in (0, 100], got {}",
                self.regen_rate
            )));
        }
        if self.max_iters == 0 {
            return Err(HdError::invalid("max_iters must be at least 1"));
        }
        if self.patience == 0 {
            return Err(HdError::invalid("patience must be at least 1"));
        }
        if !(self.min_delta >= 0.0 && self.min_delta.is_finite()) {
            return Err(HdError::invalid("min_delta must be a non-negative real"));
        }
        self.weights().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn theta_must_stay_below_beta() {
        let c = TrainConfig {
            theta: 1.0,
            beta: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn rate_and_eta_bounds() {
        for c in [
            TrainConfig { regen_rate: 0.0, ..Default::default() },
            TrainConfig { regen_rate: 101.0, ..Default::default() },
            TrainConfig { eta: 0.0, ..Default::default() },
            TrainConfig { dim: 0, ..Default::default() },
        ] {
            assert!(c.validate().is_err());
        }
    }
}
