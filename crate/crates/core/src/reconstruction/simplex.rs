//! Dense bounded-variable primal simplex for ranged feasibility problems.
//!
//! Solves
//!
//! ```text
//! minimise   Σ_r dist(a_r · x, [lower_r, upper_r])
//! subject to col_lower ≤ x ≤ col_upper
//! ```
//!
//! which is zero exactly when the ranged rows are simultaneously
//! satisfiable. Each row gets a logical variable `w_r = a_r · x` carrying the
//! row range as its bounds; the starting basis is all logicals, so no
//! artificial columns are needed and the tableau is `m × (n + m)`.
//!
//! The phase-1 objective is the piecewise-linear sum of row infeasibilities.
//! Logicals may leave their range at unit cost per unit, so a nonbasic
//! logical at a range bound can also move outward. The ratio test stops at
//! the first breakpoint, so the objective never increases. Pricing is Dantzig's largest reduced cost,
//! switching to Bland's smallest-index rule after a run of degenerate
//! pivots until progress resumes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RangedRow {
    pub coeffs: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityProblem {
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
    pub rows: Vec<RangedRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// `None` scales with problem size: `50 · (rows + cols) + 1000`.
    pub max_iterations: Option<usize>,
    /// Primal feasibility tolerance.
    pub tolerance: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            tolerance: 1e-9,
            degenerate_limit: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilitySolution {
    pub values: Vec<f64>,
    /// Total row-range violation at `values`.
    pub violation: f64,
    pub iterations: usize,
}

impl FeasibilitySolution {
    pub fn is_feasible(&self, tolerance: f64) -> bool {
        self.violation <= tolerance
    }
}

const PIVOT_TOL: f64 = 1e-9;
const PRICE_TOL: f64 = 1e-9;
const REFRESH_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Position {
    Basic(usize),
    Nonbasic(usize),
}

/// Condensed tableau `D` (rows × nonbasic positions) with `x_B = −D x_N`.
struct Tableau {
    cols: usize,
    data: Vec<f64>,
}

impl Tableau {
    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn at(&self, r: usize, q: usize) -> f64 {
        self.data[r * self.cols + q]
    }

    /// Exchanges the basic variable of row `p` with the nonbasic one at `q`.
    fn pivot(&mut self, p: usize, q: usize) {
        let cols = self.cols;
        let inv = 1.0 / self.at(p, q);
        {
            let prow = &mut self.data[p * cols..(p + 1) * cols];
            prow.iter_mut().for_each(|v| *v *= inv);
            prow[q] = inv;
        }
        let (before, rest) = self.data.split_at_mut(p * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for row in before
            .chunks_exact_mut(cols)
            .chain(after.chunks_exact_mut(cols))
        {
            let factor = row[q];
            if factor != 0.0 {
                row[q] = 0.0;
                for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= factor * pv;
                }
            }
        }
    }
}

struct Breakpoint {
    step: f64,
    row: usize,
    at_upper: bool,
    /// Slope increase when passing; infinite for hard column bounds.
    kink: f64,
}

fn row_violation(value: f64, lower: f64, upper: f64) -> f64 {
    if value < lower {
        lower - value
    } else if value > upper {
        value - upper
    } else {
        0.0
    }
}

/// Total violation of the ranged rows at `x`.
pub fn total_violation(problem: &FeasibilityProblem, x: &[f64]) -> f64 {
    problem
        .rows
        .iter()
        .map(|row| {
            let v: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            row_violation(v, row.lower, row.upper)
        })
        .sum()
}

fn validate(problem: &FeasibilityProblem) -> Result<()> {
    let n = problem.col_lower.len();
    if problem.col_upper.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: problem.col_upper.len(),
        });
    }
    for (j, (&lo, &hi)) in problem.col_lower.iter().zip(&problem.col_upper).enumerate() {
        if !lo.is_finite() || hi.is_nan() || hi < lo {
            return Err(Error::Parameter(format!(
                "column {j} has invalid bounds [{lo}, {hi}] (lower must be finite)"
            )));
        }
    }
    for (r, row) in problem.rows.iter().enumerate() {
        if row.lower.is_nan() || row.upper.is_nan() || row.upper < row.lower {
            return Err(Error::Parameter(format!(
                "row {r} has invalid range [{}, {}]",
                row.lower, row.upper
            )));
        }
        if let Some(&(j, _)) = row.coeffs.iter().find(|&&(j, a)| j >= n || !a.is_finite()) {
            return Err(Error::Parameter(format!(
                "row {r} has an invalid entry in column {j}"
            )));
        }
    }
    Ok(())
}

/// Finds `x` within the column bounds minimising total row violation.
pub fn minimize_violation(
    problem: &FeasibilityProblem,
    options: &SolverOptions,
) -> Result<FeasibilitySolution> {
    validate(problem)?;
    let n = problem.col_lower.len();
    let m = problem.rows.len();
    let total = n + m;
    let tol = options.tolerance;
    let max_iterations = options.max_iterations.unwrap_or(50 * (n + m) + 1000);

    let mut lower = Vec::with_capacity(total);
    let mut upper = Vec::with_capacity(total);
    lower.extend_from_slice(&problem.col_lower);
    upper.extend_from_slice(&problem.col_upper);
    for row in &problem.rows {
        lower.push(row.lower);
        upper.push(row.upper);
    }

    // Logical basis: w = A x, so D = −A.
    let mut tab = Tableau {
        cols: n,
        data: vec![0.0; m * n],
    };
    for (r, row) in problem.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            tab.data[r * n + j] -= a;
        }
    }
    let mut basis: Vec<usize> = (n..total).collect();
    let mut nonbasic: Vec<usize> = (0..n).collect();
    let mut position: Vec<Position> = (0..total)
        .map(|j| {
            if j < n {
                Position::Nonbasic(j)
            } else {
                Position::Basic(j - n)
            }
        })
        .collect();
    // Values of nonbasic variables; always at one of their bounds.
    let mut value: Vec<f64> = lower[..n].to_vec();
    value.resize(total, 0.0);
    let mut beta = vec![0.0; m];
    let refresh = |tab: &Tableau, nonbasic: &[usize], value: &[f64], beta: &mut [f64]| {
        for (r, b) in beta.iter_mut().enumerate() {
            *b = -tab
                .row(r)
                .iter()
                .zip(nonbasic)
                .map(|(&d, &j)| d * value[j])
                .sum::<f64>();
        }
    };
    refresh(&tab, &nonbasic, &value, &mut beta);

    let mut cost = vec![0i8; m];
    let mut reduced = vec![0.0; n];
    let mut breakpoints: Vec<Breakpoint> = Vec::new();
    let mut degenerate_run = 0usize;
    let mut iterations = 0usize;

    loop {
        let mut any_infeasible = false;
        for r in 0..m {
            let v = basis[r];
            cost[r] = if beta[r] < lower[v] - tol {
                -1
            } else if beta[r] > upper[v] + tol {
                1
            } else {
                0
            };
            any_infeasible |= cost[r] != 0;
        }
        if !any_infeasible {
            break;
        }
        if iterations >= max_iterations {
            let violation: f64 = (0..m)
                .map(|r| row_violation(beta[r], lower[basis[r]], upper[basis[r]]))
                .sum();
            return Err(Error::Solver {
                iterations,
                violation,
                message: format!("iteration cap reached ({m} rows, {n} columns)"),
            });
        }

        // d_q = ∂(infeasibility)/∂x_{N_q} = Σ_r cost_r ∂β_r/∂x_{N_q} = −Σ_r cost_r D[r][q]
        reduced.iter_mut().for_each(|d| *d = 0.0);
        for r in (0..m).filter(|&r| cost[r] != 0) {
            let c = f64::from(cost[r]);
            for (d, &t) in reduced.iter_mut().zip(tab.row(r)) {
                *d -= c * t;
            }
        }

        let bland = degenerate_run >= options.degenerate_limit;
        // (position, direction, slope along that direction, own breakpoint distance)
        let mut entering: Option<(usize, f64, f64, f64)> = None;
        for (q, &j) in nonbasic.iter().enumerate() {
            let d = reduced[q];
            let width = upper[j] - lower[j];
            let at_lower = value[j] == lower[j];
            let candidates: [Option<(f64, f64, f64)>; 2] = match (j < n, at_lower) {
                // Structural columns have hard bounds.
                (true, true) => [Some((1.0, d, width)), None],
                (true, false) => [Some((-1.0, -d, width)), None],
                // A logical may leave its range at a cost of one per unit.
                _ if width <= 0.0 => [
                    Some((1.0, 1.0 + d, f64::INFINITY)),
                    Some((-1.0, 1.0 - d, f64::INFINITY)),
                ],
                (false, true) => [Some((1.0, d, width)), Some((-1.0, 1.0 - d, f64::INFINITY))],
                (false, false) => [Some((-1.0, -d, width)), Some((1.0, 1.0 + d, f64::INFINITY))],
            };
            for (dir, slope, reach) in candidates.into_iter().flatten() {
                if slope >= -PRICE_TOL || reach <= 0.0 {
                    continue;
                }
                if entering.map_or(true, |(_, _, best, _)| slope < best) {
                    entering = Some((q, dir, slope, reach));
                }
            }
            if bland && entering.is_some() {
                break;
            }
        }
        let Some((enter_pos, sigma, slope, reach)) = entering else {
            // No improving direction: the violation is minimal.
            break;
        };
        let enter = nonbasic[enter_pos];

        // Long-step ratio test: walk the breakpoints of the basic rows in
        // order and stop where the objective's slope turns non-negative.
        breakpoints.clear();
        for r in 0..m {
            let g = -sigma * tab.at(r, enter_pos);
            if g.abs() <= PIVOT_TOL {
                continue;
            }
            let v = basis[r];
            let (lo, hi, b) = (lower[v], upper[v], beta[r]);
            if v < n {
                let (target, at_upper) = if g > 0.0 { (hi, true) } else { (lo, false) };
                breakpoints.push(Breakpoint {
                    step: ((target - b) / g).max(0.0),
                    row: r,
                    at_upper,
                    kink: f64::INFINITY,
                });
                continue;
            }
            // Bounds met in the direction of travel, nearest first.
            let ahead: [(f64, bool); 2] = if g > 0.0 {
                [(lo, false), (hi, true)]
            } else {
                [(hi, true), (lo, false)]
            };
            for (bound, at_upper) in ahead {
                if !bound.is_finite() {
                    continue;
                }
                let t = (bound - b) / g;
                let reached = if g > 0.0 {
                    b <= bound + tol
                } else {
                    b >= bound - tol
                };
                if reached {
                    breakpoints.push(Breakpoint {
                        step: t.max(0.0),
                        row: r,
                        at_upper,
                        kink: g.abs(),
                    });
                }
            }
        }
        breakpoints.sort_by(|a, b| {
            a.step.total_cmp(&b.step).then_with(|| {
                if bland {
                    basis[a.row].cmp(&basis[b.row])
                } else {
                    b.kink.total_cmp(&a.kink)
                }
            })
        });
        let mut step = reach;
        let mut leave: Option<(usize, bool)> = None;
        let mut current = slope;
        for bp in &breakpoints {
            if bp.step >= reach {
                break;
            }
            current += bp.kink;
            if current >= -PRICE_TOL {
                step = bp.step;
                leave = Some((bp.row, bp.at_upper));
                break;
            }
        }
        if !step.is_finite() {
            return Err(Error::Solver {
                iterations,
                violation: f64::NAN,
                message: "unbounded improving direction in phase 1".into(),
            });
        }

        let column: Vec<f64> = (0..m).map(|r| tab.at(r, enter_pos)).collect();
        for (b, &t) in beta.iter_mut().zip(&column) {
            if t != 0.0 {
                *b -= sigma * t * step;
            }
        }
        let entering_value = value[enter] + sigma * step;
        match leave {
            None => {
                // Bound flip to the entering column's other bound.
                value[enter] = if sigma > 0.0 {
                    upper[enter]
                } else {
                    lower[enter]
                };
            }
            Some((p, at_upper)) => {
                let out = basis[p];
                value[out] = if at_upper { upper[out] } else { lower[out] };
                tab.pivot(p, enter_pos);
                basis[p] = enter;
                nonbasic[enter_pos] = out;
                position[enter] = Position::Basic(p);
                position[out] = Position::Nonbasic(enter_pos);
                beta[p] = entering_value;
            }
        }

        degenerate_run = if step <= tol { degenerate_run + 1 } else { 0 };
        iterations += 1;
        if iterations % REFRESH_EVERY == 0 {
            refresh(&tab, &nonbasic, &value, &mut beta);
        }
    }

    let mut x: Vec<f64> = (0..n)
        .map(|j| match position[j] {
            Position::Basic(r) => beta[r],
            Position::Nonbasic(_) => value[j],
        })
        .collect();
    for (j, v) in x.iter_mut().enumerate() {
        *v = v.clamp(problem.col_lower[j], problem.col_upper[j]);
    }
    let violation = total_violation(problem, &x);
    Ok(FeasibilitySolution {
        values: x,
        violation,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn row(coeffs: &[(usize, f64)], lower: f64, upper: f64) -> RangedRow {
        RangedRow {
            coeffs: coeffs.to_vec(),
            lower,
            upper,
        }
    }

    fn unit_box(n: usize, rows: Vec<RangedRow>) -> FeasibilityProblem {
        FeasibilityProblem {
            col_lower: vec![0.0; n],
            col_upper: vec![1.0; n],
            rows,
        }
    }

    #[test]
    fn pinned_variables_are_recovered() {
        let p = unit_box(
            3,
            vec![
                row(&[(0, 1.0)], 1.0, 1.0),
                row(&[(1, 1.0)], 0.0, 0.0),
                row(&[(2, 1.0)], 0.25, 0.25),
            ],
        );
        let s = minimize_violation(&p, &SolverOptions::default()).unwrap();
        assert!(s.violation < 1e-12);
        assert!((s.values[0] - 1.0).abs() < 1e-12);
        assert!(s.values[1].abs() < 1e-12);
        assert!((s.values[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system_minimises_l1_violation() {
        // x0 + x1 ∈ [3, 3] with x ∈ [0,1]²: best is x = (1, 1), violation 1.
        // Adding x0 ∈ [0.2, 0.2]: with x1 = 1 the sum |2 − x0| + |x0 − 0.2|
        // is 1.8 for every x0 in [0.2, 1].
        let p = unit_box(2, vec![row(&[(0, 1.0), (1, 1.0)], 3.0, 3.0)]);
        let s = minimize_violation(&p, &SolverOptions::default()).unwrap();
        assert!((s.violation - 1.0).abs() < 1e-9);

        let p = unit_box(
            2,
            vec![
                row(&[(0, 1.0), (1, 1.0)], 3.0, 3.0),
                row(&[(0, 1.0)], 0.2, 0.2),
            ],
        );
        let s = minimize_violation(&p, &SolverOptions::default()).unwrap();
        assert!((s.violation - 1.8).abs() < 1e-9, "{s:?}");
        assert!((s.values[1] - 1.0).abs() < 1e-9);
    }

    /// Grid search over [0,1]^2 as an independent oracle for the minimum
    /// violation; the objective is Lipschitz with constant Σ|a|.
    #[test]
    fn matches_grid_oracle_on_random_two_variable_problems() {
        let mut rng = rng_from_seed(99);
        for _ in 0..40 {
            let rows: Vec<RangedRow> = (0..rng.gen_range(1..6))
                .map(|_| {
                    let a0: f64 = rng.gen_range(-2.0..2.0);
                    let a1: f64 = rng.gen_range(-2.0..2.0);
                    let lo: f64 = rng.gen_range(-2.0..2.0);
                    let width: f64 = rng.gen_range(0.0..0.5);
                    row(&[(0, a0), (1, a1)], lo, lo + width)
                })
                .collect();
            let p = unit_box(2, rows);
            let s = minimize_violation(&p, &SolverOptions::default()).unwrap();
            let steps = 400;
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                for k in 0..=steps {
                    let x = [i as f64 / steps as f64, k as f64 / steps as f64];
                    best = best.min(total_violation(&p, &x));
                }
            }
            let lipschitz: f64 = p
                .rows
                .iter()
                .map(|r| r.coeffs.iter().map(|c| c.1.abs()).sum::<f64>())
                .sum();
            assert!(
                s.violation <= best + 1e-9,
                "solver {} grid {best}",
                s.violation
            );
            assert!(best <= s.violation + lipschitz / steps as f64 + 1e-9);
            assert!(s.values.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn degenerate_duplicated_rows_terminate() {
        let mut rows = Vec::new();
        for _ in 0..30 {
            rows.push(row(&[(0, 1.0), (1, 1.0), (2, 1.0)], 1.0, 1.0));
            rows.push(row(&[(0, 1.0), (1, -1.0)], 0.0, 0.0));
            rows.push(row(&[(2, 1.0)], 0.0, 0.0));
        }
        let p = unit_box(3, rows);
        let s = minimize_violation(&p, &SolverOptions::default()).unwrap();
        assert!(s.violation < 1e-9);
        assert!((s.values[0] - 0.5).abs() < 1e-9 && (s.values[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn one_sided_ranges_are_supported() {
        let p = unit_box(
            2,
            vec![
                row(&[(0, 1.0), (1, 1.0)], 1.5, f64::INFINITY),
                row(&[(0, 1.0)], f64::NEG_INFINITY, 0.6),
            ],
        );
        let s = minimize_violation(&p, &SolverOptions::default()).unwrap();
        assert!(s.violation < 1e-9);
        assert!(s.values[0] + s.values[1] >= 1.5 - 1e-9 && s.values[0] <= 0.6 + 1e-9);
    }

    #[test]
    fn iteration_cap_reports_diagnostics() {
        let p = unit_box(4, (0..4).map(|j| row(&[(j, 1.0)], 1.0, 1.0)).collect());
        let opts = SolverOptions {
            max_iterations: Some(1),
            ..Default::default()
        };
        match minimize_violation(&p, &opts) {
            Err(Error::Solver {
                iterations,
                violation,
                ..
            }) => {
                assert_eq!(iterations, 1);
                assert!(violation > 0.0);
            }
            other => panic!("expected solver error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_problems_are_rejected() {
        let mut p = unit_box(1, vec![row(&[(1, 1.0)], 0.0, 1.0)]);
        assert!(minimize_violation(&p, &SolverOptions::default()).is_err());
        p.rows = vec![row(&[(0, 1.0)], 1.0, 0.0)];
        assert!(minimize_violation(&p, &SolverOptions::default()).is_err());
        p.rows.clear();
        p.col_lower[0] = f64::NEG_INFINITY;
        assert!(minimize_violation(&p, &SolverOptions::default()).is_err());
    }
}
