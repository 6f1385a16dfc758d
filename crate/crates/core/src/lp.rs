//! Dense two-phase primal simplex: Dantzig pricing with a fall back to
//! Bland's anti-cycling rule on degenerate stalls.
//!
//! Problems are minimisations over variables with finite lower bounds (or
//! free variables, lower bound `-inf`) subject to `<=`, `>=` and `=` rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pivot and reduced-cost tolerance.
pub const PIVOT_TOL: f64 = 1e-9;

const MAX_PIVOTS: usize = 200_000;

/// Consecutive degenerate pivots after which Bland's rule takes over.
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("constraint {row} has {got} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("pivot limit exceeded")]
    PivotLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Per-variable lower bound; `f64::NEG_INFINITY` marks a free variable.
    pub lower_bounds: Vec<f64>,
}

impl LpProblem {
    /// Minimise `objective . x` with every variable non-negative.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            lower_bounds: vec![0.0; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn set_lower_bound(&mut self, var: usize, lb: f64) -> &mut Self {
        self.lower_bounds[var] = lb;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal value; `+inf` when infeasible, `-inf` when unbounded.
    pub objective: f64,
    /// Primal solution (empty unless optimal).
    pub x: Vec<f64>,
    /// One multiplier per constraint with `objective - c.lb = rhs' . duals`
    /// where `rhs'` is the right-hand side after shifting by the lower
    /// bounds. `>=` rows have non-negative and `<=` rows non-positive duals.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, pivots: usize) -> Self {
        let objective = match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
        Self {
            status,
            objective,
            x: Vec::new(),
            duals: Vec::new(),
            pivots,
        }
    }
}

/// Column bookkeeping for the standard-form tableau.
#[derive(Clone, Copy, PartialEq)]
enum Col {
    /// Structural column for variable `j`, with sign (+1, or -1 for the negative part of a free variable).
    Var(usize, f64),
    Slack,
    Artificial,
}

struct Tableau {
    rows: usize,
    width: usize,
    /// Row-major `rows x (width + 1)`; the last entry of each row is the rhs.
    a: Vec<f64>,
    basis: Vec<usize>,
    kinds: Vec<Col>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.width + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.a[r * (self.width + 1) + self.width]
    }

    fn pivot(&mut self, pr: usize, pc: usize, cost: &mut [f64]) {
        let stride = self.width + 1;
        let inv = 1.0 / self.at(pr, pc);
        {
            let row = &mut self.a[pr * stride..(pr + 1) * stride];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[pc] = 1.0;
        }
        let prow: Vec<f64> = self.a[pr * stride..(pr + 1) * stride].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let factor = self.a[r * stride + pc];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.a[r * stride..(r + 1) * stride];
            for (v, p) in row.iter_mut().zip(&prow) {
                *v -= factor * p;
            }
            row[pc] = 0.0;
        }
        let factor = cost[pc];
        if factor != 0.0 {
            for (v, p) in cost.iter_mut().zip(&prow) {
                *v -= factor * p;
            }
            cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Minimises `cost` (reduced costs, last entry = -objective) by Dantzig's
    /// rule, switching to Bland's rule during runs of degenerate pivots.
    /// Returns `false` if unbounded.
    fn optimize(&mut self, cost: &mut [f64]) -> Result<bool, LpError> {
        let mut stalled = 0usize;
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(LpError::PivotLimit);
            }
            let eligible = |c: &usize| self.kinds[*c] != Col::Artificial && cost[*c] < -PIVOT_TOL;
            let entering = if stalled < DEGENERATE_RUN {
                (0..self.width)
                    .filter(eligible)
                    .min_by(|&x, &y| cost[x].total_cmp(&cost[y]))
            } else {
                (0..self.width).find(eligible)
            };
            let Some(pc) = entering else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let coef = self.at(r, pc);
                if coef > PIVOT_TOL {
                    let ratio = self.rhs(r) / coef;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-12
                                || (ratio <= bratio + 1e-12 && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio)) = best else {
                return Ok(false);
            };
            stalled = if ratio.abs() <= 1e-12 { stalled + 1 } else { 0 };
            self.pivot(pr, pc, cost);
        }
    }
}

/// Solves `problem` to optimality or reports infeasibility / unboundedness.
pub fn solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    let nv = problem.num_vars();
    if problem.lower_bounds.len() != nv {
        return Err(LpError::DimensionMismatch {
            row: usize::MAX,
            expected: nv,
            got: problem.lower_bounds.len(),
        });
    }
    if problem.objective.iter().any(|v| !v.is_finite()) {
        return Err(LpError::NonFinite("objective"));
    }
    if problem
        .lower_bounds
        .iter()
        .any(|v| v.is_nan() || *v == f64::INFINITY)
    {
        return Err(LpError::NonFinite("lower bounds"));
    }
    for (row, c) in problem.constraints.iter().enumerate() {
        if c.coeffs.len() != nv {
            return Err(LpError::DimensionMismatch {
                row,
                expected: nv,
                got: c.coeffs.len(),
            });
        }
        if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("constraints"));
        }
    }

    // Structural columns.
    let mut kinds = Vec::new();
    for j in 0..nv {
        kinds.push(Col::Var(j, 1.0));
        if problem.lower_bounds[j] == f64::NEG_INFINITY {
            kinds.push(Col::Var(j, -1.0));
        }
    }
    let shift = |j: usize| {
        let lb = problem.lower_bounds[j];
        if lb.is_finite() {
            lb
        } else {
            0.0
        }
    };

    let m = problem.constraints.len();
    let mut rel = Vec::with_capacity(m);
    let mut sign = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for c in &problem.constraints {
        let b = c.rhs
            - c.coeffs
                .iter()
                .enumerate()
                .map(|(j, a)| a * shift(j))
                .sum::<f64>();
        if b < 0.0 {
            sign.push(-1.0);
            rhs.push(-b);
            rel.push(match c.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            });
        } else {
            sign.push(1.0);
            rhs.push(b);
            rel.push(c.relation);
        }
    }

    let n_struct = kinds.len();
    let mut slack_col = vec![usize::MAX; m];
    let mut art_col = vec![usize::MAX; m];
    for i in 0..m {
        if rel[i] != Relation::Eq {
            slack_col[i] = kinds.len();
            kinds.push(Col::Slack);
        }
    }
    for i in 0..m {
        if rel[i] != Relation::Le {
            art_col[i] = kinds.len();
            kinds.push(Col::Artificial);
        }
    }
    let width = kinds.len();
    let stride = width + 1;
    let mut a = vec![0.0; m * stride];
    let mut basis = vec![0; m];
    for (i, c) in problem.constraints.iter().enumerate() {
        let row = &mut a[i * stride..(i + 1) * stride];
        for (col, kind) in kinds[..n_struct].iter().enumerate() {
            if let Col::Var(j, s) = *kind {
                row[col] = sign[i] * s * c.coeffs[j];
            }
        }
        match rel[i] {
            Relation::Le => {
                row[slack_col[i]] = 1.0;
                basis[i] = slack_col[i];
            }
            Relation::Ge => {
                row[slack_col[i]] = -1.0;
                row[art_col[i]] = 1.0;
                basis[i] = art_col[i];
            }
            Relation::Eq => {
                row[art_col[i]] = 1.0;
                basis[i] = art_col[i];
            }
        }
        row[width] = rhs[i];
    }
    let mut t = Tableau {
        rows: m,
        width,
        a,
        basis,
        kinds,
        pivots: 0,
    };

    // Phase 1: minimise the sum of artificials.
    if art_col.iter().any(|&c| c != usize::MAX) {
        let mut cost = vec![0.0; stride];
        for i in 0..m {
            if art_col[i] != usize::MAX {
                for c in 0..stride {
                    cost[c] -= t.at(i, c);
                }
            }
        }
        for &c in &art_col {
            if c != usize::MAX {
                cost[c] = 0.0;
            }
        }
        t.optimize(&mut cost)?;
        let infeasibility = -cost[width];
        let scale = rhs.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        if infeasibility > 1e-9 * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, t.pivots));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if t.kinds[t.basis[r]] == Col::Artificial {
                if let Some(pc) = (0..width)
                    .find(|&c| t.kinds[c] != Col::Artificial && t.at(r, c).abs() > PIVOT_TOL)
                {
                    t.pivot(r, pc, &mut cost);
                }
            }
        }
    }

    // Phase 2.
    let col_cost: Vec<f64> = t
        .kinds
        .iter()
        .map(|k| match *k {
            Col::Var(j, s) => s * problem.objective[j],
            _ => 0.0,
        })
        .collect();
    let mut cost = vec![0.0; stride];
    cost[..width].copy_from_slice(&col_cost);
    for r in 0..m {
        let cb = col_cost[t.basis[r]];
        if cb != 0.0 {
            for c in 0..stride {
                cost[c] -= cb * t.at(r, c);
            }
        }
    }
    if !t.optimize(&mut cost)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, t.pivots));
    }

    let mut x: Vec<f64> = (0..nv).map(shift).collect();
    for r in 0..m {
        if let Col::Var(j, s) = t.kinds[t.basis[r]] {
            x[j] += s * t.rhs(r);
        }
    }
    let objective = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let duals = (0..m)
        .map(|i| {
            // Column of B^-1 for row i: its initial basic variable.
            let col = if rel[i] == Relation::Le {
                slack_col[i]
            } else {
                art_col[i]
            };
            let y: f64 = (0..m).map(|r| col_cost[t.basis[r]] * t.at(r, col)).sum();
            sign[i] * y
        })
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        x,
        duals,
        pivots: t.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximisation() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
        let mut p = LpProblem::minimize(vec![-3.0, -5.0]);
        p.add(vec![1.0, 0.0], Relation::Le, 4.0)
            .add(vec![0.0, 2.0], Relation::Le, 12.0)
            .add(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = solve(&p).unwrap();
        assert!(s.is_optimal());
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        let dual_obj: f64 = [4.0, 12.0, 18.0]
            .iter()
            .zip(&s.duals)
            .map(|(b, y)| b * y)
            .sum();
        assert!((dual_obj - s.objective).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y, x + y = 2, x >= 0.5  ->  2
        let mut p = LpProblem::minimize(vec![1.0, 1.0]);
        p.add(vec![1.0, 1.0], Relation::Eq, 2.0)
            .add(vec![1.0, 0.0], Relation::Ge, 0.5);
        let s = solve(&p).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!(s.x[0] >= 0.5 - 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = LpProblem::minimize(vec![1.0]);
        p.add(vec![1.0], Relation::Le, 1.0)
            .add(vec![1.0], Relation::Ge, 2.0);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible);

        let mut q = LpProblem::minimize(vec![-1.0, 0.0]);
        q.add(vec![1.0, -1.0], Relation::Le, 1.0);
        let s = solve(&q).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
        assert_eq!(s.objective, f64::NEG_INFINITY);
    }

    #[test]
    fn bounds_and_free_variables() {
        // min x with x >= -3 (bound) and free y, x - y = 1, y >= -10  ->  x = -3
        let mut p = LpProblem::minimize(vec![1.0, 0.0]);
        p.set_lower_bound(0, -3.0)
            .set_lower_bound(1, f64::NEG_INFINITY);
        p.add(vec![1.0, -1.0], Relation::Eq, 1.0)
            .add(vec![0.0, 1.0], Relation::Ge, -10.0);
        let s = solve(&p).unwrap();
        assert!((s.objective + 3.0).abs() < 1e-12);
        assert!((s.x[1] + 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling example under Dantzig's rule.
        let mut p = LpProblem::minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        p.add(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0)
            .add(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0)
            .add(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let s = solve(&p).unwrap();
        assert!((s.objective + 0.05).abs() < 1e-12);
    }

    #[test]
    fn dimension_checks() {
        let mut p = LpProblem::minimize(vec![1.0, 1.0]);
        p.add(vec![1.0], Relation::Le, 1.0);
        assert!(matches!(
            solve(&p),
            Err(LpError::DimensionMismatch { row: 0, .. })
        ));
        let mut q = LpProblem::minimize(vec![1.0]);
        q.add(vec![f64::NAN], Relation::Le, 1.0);
        assert!(matches!(solve(&q), Err(LpError::NonFinite(_))));
    }
}
