use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::accountant::PrivacyAccountant;
use crate::error::{Error, Result};
use crate::model::{true_count, BinaryDatabase, QueryAnswer, SubsetQuery};

/// Laplace noise with scale `sensitivity / epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceMechanism {
    epsilon: f64,
    sensitivity: f64,
}

impl LaplaceMechanism {
    pub fn new(epsilon: f64, sensitivity: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return Err(Error::Parameter(format!(
                "sensitivity must be positive, got {sensitivity}"
            )));
        }
        Ok(Self {
            epsilon,
            sensitivity,
        })
    }

    /// Unit sensitivity, as for counting queries.
    pub fn counting(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 1.0)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn scale(&self) -> f64 {
        self.sensitivity / self.epsilon
    }

    pub fn std_dev(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.scale()
    }

    /// Inverse-CDF sample from a single uniform draw on (0, 1).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
        -self.scale() * u.signum() * (-2.0 * u.abs()).ln_1p()
    }
}

/// Charges `mech.epsilon` to the accountant, then answers with Laplace noise.
/// If the budget cannot cover the query the answer is refused.
pub fn answer_laplace<R: Rng + ?Sized>(
    db: &BinaryDatabase,
    query: &SubsetQuery,
    query_id: usize,
    mech: &LaplaceMechanism,
    accountant: &mut PrivacyAccountant,
    rng: &mut R,
) -> Result<QueryAnswer> {
    let count = true_count(db, query)? as f64;
    accountant.spend(query_id, mech.epsilon)?;
    Ok(QueryAnswer {
        query_id,
        value: count + mech.sample(rng),
    })
}

/// `P(|X| ≤ bound)` for `X ~ Laplace(0, 1/epsilon)`, i.e. `1 − e^{−ε·bound}`.
pub fn laplace_tail(epsilon: f64, bound: f64) -> f64 {
    if bound <= 0.0 {
        return 0.0;
    }
    -(-epsilon * bound).exp_m1()
}
