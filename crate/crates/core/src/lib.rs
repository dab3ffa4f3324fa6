//! `reconlab` is a desk-scale laboratory for database reconstruction and
//! reidentification experiments.
//!
//! The crate is organised around the objects an attack experiment needs:
//!
//! - [`model`]: binary databases, subset-count queries, person-level
//!   microdata with a four-level geography, and frequency tables.
//! - [`mechanisms`]: bounded output perturbation, the Laplace mechanism with
//!   a sequential-composition budget accountant, randomized response, and
//!   the arithmetic used to compare privacy parameters across frameworks.
//! - [`sdc`]: record swapping under geographic invariants and cell
//!   suppression with an exact recoverability audit.
//! - [`reconstruction`]: exhaustive and linear-programming reconstruction of
//!   noisy binary databases, and microdata regeneration from tables.
//! - [`linkage`]: record linkage of reconstructed microdata against an
//!   identified external database, with confirmation against ground truth.
//! - [`harness`]: configuration-driven, fully seeded experiment runner used
//!   by the `reconlab` binary.

pub mod error;
pub mod harness;
pub mod linkage;
pub mod mechanisms;
pub mod model;
pub mod reconstruction;
pub mod rng;
pub mod sdc;

pub use error::{Error, Result};
pub use rng::{LabRng, SeedTree};
