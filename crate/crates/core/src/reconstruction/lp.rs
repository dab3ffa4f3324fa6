use super::simplex::{minimize_violation, FeasibilityProblem, RangedRow, SolverOptions};
use super::{check_answers, ReconstructionResult};
use crate::error::{Error, Result};
use crate::model::{BinaryDatabase, QueryAnswer, SubsetQuery};

/// Polynomial-time attack: relax each record to `x_i ∈ [0, 1]`, require every
/// subset sum to lie within `bound` of its answer, and round the LP point
/// (`x_i ≥ 0.5` becomes 1).
///
/// If no point satisfies every constraint, e.g. under unbounded Laplace
/// noise, the point of least total violation is rounded instead.
pub fn lp_reconstruct(
    queries: &[SubsetQuery],
    answers: &[QueryAnswer],
    n: usize,
    bound: f64,
) -> Result<ReconstructionResult> {
    lp_reconstruct_with(queries, answers, n, bound, &SolverOptions::default())
}

pub fn lp_reconstruct_with(
    queries: &[SubsetQuery],
    answers: &[QueryAnswer],
    n: usize,
    bound: f64,
    options: &SolverOptions,
) -> Result<ReconstructionResult> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if bound.is_nan() || bound < 0.0 {
        return Err(Error::Parameter(format!(
            "bound must be non-negative, got {bound}"
        )));
    }
    check_answers(queries.len(), answers.len())?;
    let rows = queries
        .iter()
        .zip(answers)
        .map(|(q, a)| {
            if let Some(&index) = q.indices().iter().find(|&&i| i >= n) {
                return Err(Error::Range { index, n });
            }
            Ok(RangedRow {
                coeffs: q.indices().iter().map(|&i| (i, 1.0)).collect(),
                lower: a.value - bound,
                upper: a.value + bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let problem = FeasibilityProblem {
        col_lower: vec![0.0; n],
        col_upper: vec![1.0; n],
        rows,
    };
    let solution = minimize_violation(&problem, options)?;
    let bits = solution
        .values
        .iter()
        .map(|&x| u8::from(x >= 0.5))
        .collect();
    Ok(ReconstructionResult {
        n,
        bound,
        candidate: BinaryDatabase::new(bits)?,
        feasible_count: None,
        distance: None,
        queries_used: queries.len(),
        lp_violation: Some(solution.violation),
    })
}
