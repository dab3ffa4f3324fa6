use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary randomized response: report the true bit with probability `p`.
///
/// With `p = e^ε / (1 + e^ε)` this carries the same disclosure risk as ε-DP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizedResponse {
    p: f64,
}

impl RandomizedResponse {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&p) {
            return Err(Error::Parameter(format!(
                "truthful-report probability must lie in [0.5, 1], got {p}"
            )));
        }
        Ok(Self { p })
    }

    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::Parameter(format!(
                "epsilon must be non-negative, got {epsilon}"
            )));
        }
        Self::new(rr_p_from_epsilon(epsilon))
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

pub fn rr_flip<R: Rng + ?Sized>(bit: u8, rr: &RandomizedResponse, rng: &mut R) -> Result<u8> {
    if bit > 1 {
        return Err(Error::Parameter(format!("expected a bit, got {bit}")));
    }
    Ok(if rng.gen_bool(rr.p) { bit } else { 1 - bit })
}

/// `e^ε / (1 + e^ε)`, evaluated as a logistic so large ε does not overflow.
pub fn rr_p_from_epsilon(epsilon: f64) -> f64 {
    // 1 - q with q computed to full relative precision rounds once, where
    // 1 / (1 + e^-ε) rounds twice and can land an ulp low near 1.
    let t = (-epsilon).exp();
    if t.is_infinite() {
        return 0.0;
    }
    1.0 - t / (1.0 + t)
}

/// Unbiased inversion of the randomized proportion, clamped to `[0, 1]`.
pub fn rr_estimate_proportion(randomized: &[u8], p: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p must lie in [0.5, 1], got {p}")));
    }
    if p == 0.5 {
        return Err(Error::Undefined(
            "p = 0.5 makes randomized output independent of the truth".into(),
        ));
    }
    if randomized.is_empty() {
        return Err(Error::Parameter("no randomized responses".into()));
    }
    if let Some(&b) = randomized.iter().find(|&&b| b > 1) {
        return Err(Error::Parameter(format!("expected bits, found {b}")));
    }
    let observed = randomized.iter().map(|&b| f64::from(b)).sum::<f64>() / randomized.len() as f64;
    Ok(((observed + p - 1.0) / (2.0 * p - 1.0)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn mean_of_flips(bit: u8, p: f64, n: usize, seed: u64) -> f64 {
        let rr = RandomizedResponse::new(p).unwrap();
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| f64::from(rr_flip(bit, &rr, &mut rng).unwrap()))
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn p_from_epsilon_reference_points() {
        assert_eq!(rr_p_from_epsilon(0.0), 0.5);
        assert!((rr_p_from_epsilon(3f64.ln()) - 0.75).abs() < 1e-15);
        // e^19.61 / (1 + e^19.61) to 30 digits: 0.999999996955715695...
        assert!((rr_p_from_epsilon(19.61) - 0.999_999_996_955_715_7).abs() < 1e-16);
        assert!((rr_p_from_epsilon(19.61) - 0.999_999_996_96).abs() < 1e-11);
        assert_eq!(rr_p_from_epsilon(800.0), 1.0);
        assert_eq!(rr_p_from_epsilon(-800.0), 0.0);
    }

    #[test]
    fn p_is_strictly_increasing() {
        let grid: Vec<f64> = (0..200).map(|i| f64::from(i) * 0.1).collect();
        for w in grid.windows(2) {
            assert!(rr_p_from_epsilon(w[0]) < rr_p_from_epsilon(w[1]));
        }
    }

    #[test]
    fn flip_frequencies_match_bernoulli() {
        assert_eq!(mean_of_flips(1, 1.0, 1000, 1), 1.0);
        assert_eq!(mean_of_flips(0, 1.0, 1000, 1), 0.0);
        assert!((mean_of_flips(1, 0.5, 100_000, 2) - 0.5).abs() < 0.01);
        assert!((mean_of_flips(0, 0.75, 100_000, 3) - 0.25).abs() < 0.01);
    }

    #[test]
    fn estimate_inverts_randomization() {
        let bits: Vec<u8> = (0..10).map(|i| u8::from(i < 3)).collect();
        assert!((rr_estimate_proportion(&bits, 1.0).unwrap() - 0.3).abs() < 1e-12);

        let rr = RandomizedResponse::new(0.75).unwrap();
        let mut rng = rng_from_seed(17);
        let n = 100_000;
        let randomized: Vec<u8> = (0..n)
            .map(|i| rr_flip(u8::from(i % 5 < 2), &rr, &mut rng).unwrap())
            .collect();
        assert!((rr_estimate_proportion(&randomized, 0.75).unwrap() - 0.4).abs() < 0.02);
    }

    #[test]
    fn estimate_is_clamped() {
        // Raw estimator: (0 + 0.6 - 1) / (2 * 0.6 - 1) = -2.
        assert_eq!(rr_estimate_proportion(&[0; 50], 0.6).unwrap(), 0.0);
        assert_eq!(rr_estimate_proportion(&[1; 50], 0.6).unwrap(), 1.0);
    }

    #[test]
    fn estimate_is_undefined_at_one_half() {
        assert!(matches!(
            rr_estimate_proportion(&[0, 1], 0.5),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn estimate_is_unbiased_over_trials() {
        let truth = 0.3;
        let p = 0.7;
        let n = 10_000;
        let trials = 200;
        let rr = RandomizedResponse::new(p).unwrap();
        let estimates: Vec<f64> = (0..trials)
            .map(|t| {
                let mut rng = rng_from_seed(1000 + t);
                let bits: Vec<u8> = (0..n)
                    .map(|i| {
                        rr_flip(u8::from((i as f64) < truth * n as f64), &rr, &mut rng).unwrap()
                    })
                    .collect();
                rr_estimate_proportion(&bits, p).unwrap()
            })
            .collect();
        let mean = estimates.iter().sum::<f64>() / trials as f64;
        // Var of one estimate: q(1-q) / (n (2p-1)^2), q the randomized mean.
        let q = truth * p + (1.0 - truth) * (1.0 - p);
        let se = (q * (1.0 - q) / (n as f64 * (2.0 * p - 1.0).powi(2)) / trials as f64).sqrt();
        assert!((mean - truth).abs() < 3.0 * se, "mean {mean}, se {se}");
    }
}
