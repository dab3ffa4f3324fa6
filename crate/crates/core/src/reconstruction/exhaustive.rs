use super::{check_answers, ReconstructionResult};
use crate::error::{Error, Result};
use crate::model::{BinaryDatabase, QueryAnswer, SubsetQuery, MAX_ENUMERATION_N};

/// Slack on the `|answer − count| ≤ B` test for floating-point answers.
const FEASIBILITY_SLACK: f64 = 1e-9;

fn masks(n: usize, queries: &[SubsetQuery]) -> Result<Vec<u64>> {
    queries
        .iter()
        .map(|q| {
            q.to_mask()
                .filter(|m| m >> n == 0)
                .ok_or_else(|| Error::Range {
                    index: q.indices().last().copied().unwrap_or(0),
                    n,
                })
        })
        .collect()
}

fn is_feasible(candidate: u64, masks: &[u64], answers: &[QueryAnswer], bound: f64) -> bool {
    masks.iter().zip(answers).all(|(&q, a)| {
        let count = f64::from((candidate & q).count_ones());
        (a.value - count).abs() <= bound + FEASIBILITY_SLACK
    })
}

/// Every n-bit database whose answers are all within `bound` of the given ones.
pub fn exhaustive_feasible_set(
    n: usize,
    queries: &[SubsetQuery],
    answers: &[QueryAnswer],
    bound: f64,
) -> Result<Vec<BinaryDatabase>> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if n > MAX_ENUMERATION_N {
        return Err(Error::Capacity {
            what: "exhaustive reconstruction (n)",
            requested: n,
            limit: MAX_ENUMERATION_N,
        });
    }
    check_answers(queries.len(), answers.len())?;
    let masks = masks(n, queries)?;
    (0..1u64 << n)
        .filter(|&c| is_feasible(c, &masks, answers, bound))
        .map(|c| BinaryDatabase::from_mask(c, n))
        .collect()
}

/// Exponential-time attack: enumerate all 2^n candidates and keep those
/// consistent with every answer to within `bound`.
///
/// Returns the first feasible candidate in enumeration order, with the size
/// of the feasible set.
pub fn exhaustive_reconstruct(
    n: usize,
    queries: &[SubsetQuery],
    answers: &[QueryAnswer],
    bound: f64,
) -> Result<ReconstructionResult> {
    let feasible = exhaustive_feasible_set(n, queries, answers, bound)?;
    let count = feasible.len() as u64;
    let candidate = feasible.into_iter().next().ok_or_else(|| {
        Error::Infeasible(format!(
            "no database of {n} records is within {bound} of all {} answers; the noise bound is understated",
            answers.len()
        ))
    })?;
    Ok(ReconstructionResult {
        n,
        bound,
        candidate,
        feasible_count: Some(count),
        distance: None,
        queries_used: queries.len(),
        lp_violation: None,
    })
}
