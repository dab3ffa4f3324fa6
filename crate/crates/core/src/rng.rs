//! Deterministic seeding.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose seed is
//! derived from a root seed and a textual call-site label. Adding a new label
//! never changes the stream handed out for an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type LabRng = ChaCha8Rng;

/// Stable child seed for `(root, label)`.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A root seed that hands out labelled, independent sub-streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn seed(&self, label: &str) -> u64 {
        derive_seed(self.root, label)
    }

    pub fn stream(&self, label: &str) -> LabRng {
        rng_from_seed(self.seed(label))
    }

    /// A subtree, so nested call sites can label relative to their parent.
    pub fn child(&self, label: &str) -> SeedTree {
        SeedTree::new(self.seed(label))
    }
}
