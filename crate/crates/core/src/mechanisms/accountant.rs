use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack for floating-point rounding when comparing spend to budget;
/// splitting ε into k equal chunks must fit exactly.
const BUDGET_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub query_id: usize,
    pub epsilon: f64,
}

/// Sequential-composition budget: the ε values of answered queries add up
/// and may never exceed the total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyAccountant {
    total_budget: f64,
    ledger: Vec<LedgerEntry>,
}

impl PrivacyAccountant {
    pub fn new(total_budget: f64) -> Result<Self> {
        if !(total_budget > 0.0 && total_budget.is_finite()) {
            return Err(Error::Parameter(format!(
                "total budget must be positive and finite, got {total_budget}"
            )));
        }
        Ok(Self {
            total_budget,
            ledger: Vec::new(),
        })
    }

    pub fn total_budget(&self) -> f64 {
        self.total_budget
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn spent(&self) -> f64 {
        neumaier_sum(self.ledger.iter().map(|e| e.epsilon))
    }

    pub fn remaining(&self) -> f64 {
        (self.total_budget - self.spent()).max(0.0)
    }

    pub fn can_afford(&self, epsilon: f64) -> bool {
        self.spent() + epsilon <= self.total_budget * (1.0 + BUDGET_SLACK)
    }

    /// Records a spend, or refuses it without touching the ledger.
    pub fn spend(&mut self, query_id: usize, epsilon: f64) -> Result<()> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!(
                "per-query epsilon must be positive, got {epsilon}"
            )));
        }
        if !self.can_afford(epsilon) {
            return Err(Error::Budget {
                requested: epsilon,
                remaining: self.remaining(),
            });
        }
        self.ledger.push(LedgerEntry { query_id, epsilon });
        Ok(())
    }
}

/// Compensated summation, so a budget split into many equal chunks sums back
/// to the original value.
fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Total privacy loss of answering queries with the given ε values.
pub fn compose(epsilons: &[f64]) -> Result<f64> {
    if let Some(bad) = epsilons.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Parameter(format!(
            "composition needs positive epsilons, got {bad}"
        )));
    }
    Ok(neumaier_sum(epsilons.iter().copied()))
}
