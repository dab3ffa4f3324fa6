use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` for which every subset query may be enumerated.
pub const MAX_ENUMERATION_N: usize = 20;

/// The n-bit target database of a reconstruction attack.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryDatabase {
    bits: Vec<u8>,
}

impl BinaryDatabase {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Parameter(
                "a database needs at least one record".into(),
            ));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Parameter(format!(
                "record {pos} has value {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self { bits })
    }

    /// Each record is 1 with probability 1/2.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..n).map(|_| u8::from(rng.gen::<bool>())).collect())
    }

    /// Low `n` bits of `mask`; bit `i` of the mask is record `i`.
    pub fn from_mask(mask: u64, n: usize) -> Result<Self> {
        if n > 64 {
            return Err(Error::Capacity {
                what: "mask-encoded database size",
                requested: n,
                limit: 64,
            });
        }
        Self::new((0..n).map(|i| ((mask >> i) & 1) as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> Option<u8> {
        self.bits.get(i).copied()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn to_mask(&self) -> Option<u64> {
        (self.len() <= 64).then(|| {
            self.bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
        })
    }

    pub fn hamming_distance(&self, other: &BinaryDatabase) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }
}

/// A subset-count query: "how many records in this subset are 1?".
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetQuery {
    indices: Vec<usize>,
}

impl SubsetQuery {
    /// Builds a query over a database of `n` records. Indices are sorted;
    /// duplicates and out-of-range indices are rejected.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(&index) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Range { index, n });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("query indices must be unique".into()));
        }
        Ok(Self { indices })
    }

    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self {
            indices: (0..n).filter(|i| (mask >> i) & 1 == 1).collect(),
        }
    }

    pub fn all(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn to_mask(&self) -> Option<u64> {
        if self.indices.last().is_some_and(|&i| i >= 64) {
            return None;
        }
        Some(self.indices.iter().fold(0u64, |acc, &i| acc | (1 << i)))
    }
}

/// A (possibly perturbed) answer to the query with id `query_id`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryAnswer {
    pub query_id: usize,
    pub value: f64,
}

/// Noiseless answer: the number of 1-records in the subset.
pub fn true_count(db: &BinaryDatabase, query: &SubsetQuery) -> Result<usize> {
    query.indices.iter().try_fold(0usize, |acc, &i| {
        db.get(i).map(|b| acc + usize::from(b)).ok_or(Error::Range {
            index: i,
            n: db.len(),
        })
    })
}

/// Every subset of `{0, .., n-1}`, in increasing bitmask order.
pub fn enumerate_all_queries(n: usize) -> Result<impl Iterator<Item = SubsetQuery>> {
    if n > MAX_ENUMERATION_N {
        return Err(Error::Capacity {
            what: "exhaustive query enumeration (n)",
            requested: n,
            limit: MAX_ENUMERATION_N,
        });
    }
    Ok((0..1u64 << n).map(move |mask| SubsetQuery::from_mask(mask, n)))
}

/// `m` random subsets, each index included independently with probability 1/2.
pub fn sample_random_queries<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<SubsetQuery>> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if m == 0 {
        return Err(Error::Parameter("m must be at least 1".into()));
    }
    Ok((0..m)
        .map(|_| SubsetQuery {
            indices: (0..n).filter(|_| rng.gen::<bool>()).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn db(bits: &[u8]) -> BinaryDatabase {
        BinaryDatabase::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn true_count_sums_selected_bits() {
        let q = SubsetQuery::new(vec![0, 2, 3], 4).unwrap();
        assert_eq!(true_count(&db(&[1, 0, 1, 1]), &q).unwrap(), 3);
        assert_eq!(
            true_count(&db(&[0, 0, 0, 0]), &SubsetQuery::all(4)).unwrap(),
            0
        );
        assert_eq!(
            true_count(&db(&[1, 1]), &SubsetQuery::new(vec![], 2).unwrap()).unwrap(),
            0
        );
    }

    #[test]
    fn true_count_full_query_is_popcount() {
        let d = BinaryDatabase::random(64, &mut rng_from_seed(7)).unwrap();
        let popcount = d.to_mask().unwrap().count_ones() as usize;
        assert_eq!(true_count(&d, &SubsetQuery::all(64)).unwrap(), popcount);
    }

    #[test]
    fn out_of_range_index_is_a_range_error() {
        let q = SubsetQuery::new(vec![0, 5], 8).unwrap();
        assert!(matches!(
            true_count(&db(&[1, 0, 1]), &q),
            Err(Error::Range { index: 5, n: 3 })
        ));
        assert!(matches!(
            SubsetQuery::new(vec![4], 4),
            Err(Error::Range { index: 4, n: 4 })
        ));
    }

    #[test]
    fn database_rejects_non_binary_values() {
        assert!(BinaryDatabase::new(vec![0, 2]).is_err());
        assert!(BinaryDatabase::new(vec![]).is_err());
    }

    #[test]
    fn power_set_of_two() {
        let qs: Vec<Vec<usize>> = enumerate_all_queries(2)
            .unwrap()
            .map(|q| q.indices().to_vec())
            .collect();
        assert_eq!(qs, vec![vec![], vec![0], vec![1], vec![0, 1]]);
        assert_eq!(enumerate_all_queries(4).unwrap().count(), 16);
    }

    #[test]
    fn enumeration_has_no_duplicates() {
        for n in 0..=12 {
            let set: HashSet<SubsetQuery> = enumerate_all_queries(n).unwrap().collect();
            assert_eq!(set.len(), 1 << n);
        }
    }

    #[test]
    fn enumeration_is_capped() {
        assert!(matches!(
            enumerate_all_queries(21).err(),
            Some(Error::Capacity { limit: 20, .. })
        ));
    }

    #[test]
    fn random_queries_are_seed_deterministic() {
        let a = sample_random_queries(8, 3, &mut rng_from_seed(1)).unwrap();
        let b = sample_random_queries(8, 3, &mut rng_from_seed(1)).unwrap();
        assert_eq!(a, b);
        assert!(sample_random_queries(8, 0, &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn random_query_size_is_binomial() {
        // Binomial(1000, 1/2): mean 500, sd sqrt(250) ~ 15.8, so 5 sd ~ 79.
        for seed in 0..10 {
            let q = sample_random_queries(1000, 1, &mut rng_from_seed(seed)).unwrap();
            let size = q[0].len() as i64;
            assert!((size - 500).abs() <= 79, "seed {seed}: {size}");
        }
    }

    proptest! {
        #[test]
        fn count_is_bounded_by_query_size(bits in proptest::collection::vec(0u8..2, 1..40), mask in any::<u64>()) {
            let d = BinaryDatabase::new(bits.clone()).unwrap();
            let n = bits.len();
            let q = SubsetQuery::from_mask(mask & ((1u64 << n) - 1), n);
            let c = true_count(&d, &q).unwrap();
            prop_assert!(c <= q.len());
            let zeros = q.indices().iter().filter(|&&i| bits[i] == 0).count();
            prop_assert_eq!(c + zeros, q.len());
        }
    }
}
