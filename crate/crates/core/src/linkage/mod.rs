//! Reidentification by record linkage.
//!
//! Reconstructed (unidentified) microdata are linked to an identified
//! external database on exact quasi-identifier agreement within each block,
//! then putative links are confirmed against ground truth. Reconstruction
//! accuracy and confirmed reidentification are reported separately because
//! they can diverge completely.

mod agreement;
mod external;
mod link;
mod scenario;

pub use agreement::{match_blocks, reconstruction_agreement};
pub use external::{ExternalDatabase, ExternalRecord, Identity, IdentityRegistry};
pub use link::{confirm, link, r_vs_r_prime, LinkResult, LinkStatus, LinkageReport};
pub use scenario::{evaluate_scenario, ScenarioOutcome};
