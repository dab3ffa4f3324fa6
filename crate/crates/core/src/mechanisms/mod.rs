//! Output perturbation, randomized response and privacy-parameter arithmetic.
//!
//! A mechanism `M` is ε-differentially private when, for all databases `D`,
//! `D'` differing in one record and every output set `S`,
//! `P(M(D) ∈ S) ≤ e^ε · P(M(D') ∈ S)`; (ε, δ)-DP adds the slack `δ` to the
//! right-hand side. Those definitions are properties of a mechanism rather
//! than computations, so they appear here only as documentation.

mod accountant;
mod bounded;
mod laplace;
mod rr;
mod zcdp;

pub use accountant::{compose, LedgerEntry, PrivacyAccountant};
pub use bounded::{answer_bounded, BoundedNoiseMechanism, NoiseDistribution};
pub use laplace::{answer_laplace, laplace_tail, LaplaceMechanism};
pub use rr::{rr_estimate_proportion, rr_flip, rr_p_from_epsilon, RandomizedResponse};
pub use zcdp::{privacy_ratio, zcdp_to_epsilon, ZcdpParams};
