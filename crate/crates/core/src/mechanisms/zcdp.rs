use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero-concentrated DP parameter ρ together with the δ at which it is
/// converted to an (ε, δ) guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZcdpParams {
    rho: f64,
    delta: f64,
}

impl ZcdpParams {
    pub fn new(rho: f64, delta: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Parameter(format!("rho must be positive, got {rho}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self { rho, delta })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The ρ whose equivalent ε at `delta` equals `epsilon` (closed-form
    /// inverse of [`zcdp_to_epsilon`]).
    pub fn for_epsilon(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let log_term = (1.0 / delta).ln();
        let root = (log_term + epsilon).sqrt() - log_term.sqrt();
        Self::new(root * root, delta)
    }
}

/// `ε = ρ + 2·sqrt(ρ·ln(1/δ))`.
pub fn zcdp_to_epsilon(params: &ZcdpParams) -> f64 {
    params.rho + 2.0 * (params.rho * (1.0 / params.delta).ln()).sqrt()
}

/// `e^(eps_a − eps_b)`: how many times larger the worst-case likelihood ratio
/// bound is at `eps_a` than at `eps_b`.
pub fn privacy_ratio(eps_a: f64, eps_b: f64) -> f64 {
    (eps_a - eps_b).exp()
}
