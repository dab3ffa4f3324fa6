use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{true_count, BinaryDatabase, QueryAnswer, SubsetQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    /// Uniform on the real interval `[-B, B]`.
    #[default]
    UniformContinuous,
    /// Uniform on the integers `-⌊B⌋ ..= ⌊B⌋`.
    UniformInteger,
}

/// Adds noise bounded in `[-B, B]` to every answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedNoiseMechanism {
    bound: f64,
    distribution: NoiseDistribution,
}

impl BoundedNoiseMechanism {
    pub fn new(bound: f64, distribution: NoiseDistribution) -> Result<Self> {
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise bound must be finite and non-negative, got {bound}"
            )));
        }
        Ok(Self {
            bound,
            distribution,
        })
    }

    pub fn continuous(bound: f64) -> Result<Self> {
        Self::new(bound, NoiseDistribution::UniformContinuous)
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn distribution(&self) -> NoiseDistribution {
        self.distribution
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.bound == 0.0 {
            return 0.0;
        }
        match self.distribution {
            NoiseDistribution::UniformContinuous => rng.gen_range(-self.bound..=self.bound),
            NoiseDistribution::UniformInteger => {
                let b = self.bound.floor() as i64;
                rng.gen_range(-b..=b) as f64
            }
        }
    }
}

pub fn answer_bounded<R: Rng + ?Sized>(
    db: &BinaryDatabase,
    query: &SubsetQuery,
    query_id: usize,
    mech: &BoundedNoiseMechanism,
    rng: &mut R,
) -> Result<QueryAnswer> {
    let count = true_count(db, query)? as f64;
    Ok(QueryAnswer {
        query_id,
        value: count + mech.sample(rng),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn zero_bound_answers_exactly() {
        let db = BinaryDatabase::new(vec![1, 0, 1, 1, 0]).unwrap();
        let q = SubsetQuery::all(5);
        let mech = BoundedNoiseMechanism::continuous(0.0).unwrap();
        let mut rng = rng_from_seed(0);
        for id in 0..10 {
            assert_eq!(
                answer_bounded(&db, &q, id, &mech, &mut rng).unwrap().value,
                3.0
            );
        }
    }

    #[test]
    fn noise_never_exceeds_bound_and_is_centred() {
        for dist in [
            NoiseDistribution::UniformContinuous,
            NoiseDistribution::UniformInteger,
        ] {
            let mech = BoundedNoiseMechanism::new(3.0, dist).unwrap();
            let mut rng = rng_from_seed(11);
            let draws: Vec<f64> = (0..100_000).map(|_| mech.sample(&mut rng)).collect();
            assert!(draws.iter().all(|e| e.abs() <= 3.0));
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            assert!(mean.abs() < 0.1, "{dist:?}: mean {mean}");
        }
    }

    #[test]
    fn answers_stay_in_interval() {
        let db = BinaryDatabase::new(vec![1, 1]).unwrap();
        let q = SubsetQuery::all(2);
        let mech = BoundedNoiseMechanism::continuous(1.0).unwrap();
        let mut rng = rng_from_seed(5);
        for id in 0..1000 {
            let a = answer_bounded(&db, &q, id, &mech, &mut rng).unwrap();
            assert!((1.0..=3.0).contains(&a.value));
            assert_eq!(a.query_id, id);
        }
    }

    #[test]
    fn answering_is_seed_deterministic() {
        let db = BinaryDatabase::new(vec![0, 1, 1]).unwrap();
        let q = SubsetQuery::all(3);
        let mech = BoundedNoiseMechanism::continuous(2.0).unwrap();
        let a = answer_bounded(&db, &q, 0, &mech, &mut rng_from_seed(8)).unwrap();
        let b = answer_bounded(&db, &q, 0, &mech, &mut rng_from_seed(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_bound_is_rejected() {
        assert!(BoundedNoiseMechanism::continuous(-1.0).is_err());
        assert!(BoundedNoiseMechanism::continuous(f64::NAN).is_err());
    }
}
