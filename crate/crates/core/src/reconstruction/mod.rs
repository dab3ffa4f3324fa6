//! Reconstruction attacks on noisy subset-count answers, and microdata
//! regeneration from published frequency tables.

mod exhaustive;
mod lp;
mod regenerate;
pub mod simplex;

pub use exhaustive::{exhaustive_feasible_set, exhaustive_reconstruct};
pub use lp::{lp_reconstruct, lp_reconstruct_with};
pub use regenerate::{
    regenerate_from_tables, RegenerationResult, MAX_MULTIPLICITY_CELLS, MAX_MULTIPLICITY_POPULATION,
};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::BinaryDatabase;

/// Outcome of a reconstruction attack on an n-bit database.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub n: usize,
    pub bound: f64,
    pub candidate: BinaryDatabase,
    /// Number of feasible candidates (exhaustive attack only).
    pub feasible_count: Option<u64>,
    /// Hamming distance to the ground truth, once scored.
    pub distance: Option<usize>,
    pub queries_used: usize,
    /// Residual L1 constraint violation of the LP point (LP attack only).
    pub lp_violation: Option<f64>,
}

impl ReconstructionResult {
    /// Fills in `distance` against the true database.
    pub fn scored(mut self, truth: &BinaryDatabase) -> Result<Self> {
        self.distance = Some(self.candidate.hamming_distance(truth)?);
        Ok(self)
    }

    pub fn disagreement_fraction(&self) -> Option<f64> {
        self.distance.map(|d| d as f64 / self.n as f64)
    }
}

impl Serialize for ReconstructionResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            n: usize,
            #[serde(rename = "B")]
            bound: f64,
            queries_used: usize,
            distance: Option<usize>,
            disagreement_fraction: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            feasible_count: Option<u64>,
        }
        Wire {
            n: self.n,
            bound: self.bound,
            queries_used: self.queries_used,
            distance: self.distance,
            disagreement_fraction: self.disagreement_fraction(),
            feasible_count: self.feasible_count,
        }
        .serialize(serializer)
    }
}

/// Hamming distance divided by n.
pub fn disagreement_fraction(a: &BinaryDatabase, b: &BinaryDatabase) -> Result<f64> {
    Ok(a.hamming_distance(b)? as f64 / a.len() as f64)
}

fn check_answers(queries: usize, answers: usize) -> Result<()> {
    if queries != answers {
        return Err(Error::LengthMismatch {
            left: queries,
            right: answers,
        });
    }
    Ok(())
}
