use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Weight function `mu(t) = mu0 * t + mu1` setting the observer bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightFunction {
    Constant { mu1: f64 },
    Affine { mu0: f64, mu1: f64 },
}

impl WeightFunction {
    pub fn constant(mu1: f64) -> Result<Self> {
        Self::Constant { mu1 }.validated()
    }

    pub fn affine(mu0: f64, mu1: f64) -> Result<Self> {
        Self::Affine { mu0, mu1 }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let (mu0, mu1) = self.coefficients();
        if !(mu1 > 0.0) || !mu1.is_finite() {
            return Err(invalid("mu1", "mu1 must be positive"));
        }
        if !(mu0 >= 0.0) || !mu0.is_finite() {
            return Err(invalid("mu0", "mu0 must be non-negative"));
        }
        Ok(self)
    }

    pub fn coefficients(&self) -> (f64, f64) {
        match *self {
            Self::Constant { mu1 } => (0.0, mu1),
            Self::Affine { mu0, mu1 } => (mu0, mu1),
        }
    }

    /// `(mu(t), mu'(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (mu0, mu1) = self.coefficients();
        (mu0 * t + mu1, mu0)
    }
}
