//! The lower bound `g_B` on the loss of any IC rule, and its minimisers over
//! designated and symmetric shapes.
//!
//! For a canonical profile `s` with `a = n - h`:
//!
//! ```text
//! g_B(s) = max( sum s_i + C * prod (1 - s_i),  C * prod_{i > a} (1 - s_i) - B )
//! ```
//!
//! The left branch is the cost when the attacker mimics honest play, the right
//! one the penalty when the `a` most active provers are corrupted and stay silent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EquilibriumShape, ModelError, ProtocolParams, ShapeKind, StrategyProfile};
use crate::numerics::{find_all_roots, find_root_newton};

/// Grid used to isolate symmetric-constraint roots.
pub const ROOT_GRID: usize = 4096;

/// Largest `n` accepted by the grid oracle.
pub const GRID_ORACLE_MAX_N: usize = 6;

/// Largest grid accepted by the grid oracle.
pub const GRID_ORACLE_MAX_GRID: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LowerBoundError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("grid oracle supports n <= {GRID_ORACLE_MAX_N}, got {0}")]
    TooManyProvers(usize),
    #[error("grid oracle supports 1..={GRID_ORACLE_MAX_GRID} cells, got {0}")]
    GridTooLarge(usize),
}

/// Both branches of `g_B` and the products they are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    /// `sum s + C * prod (1 - s)`.
    pub left: f64,
    /// `C * prod_{i > a} (1 - s_i) - B`.
    pub right: f64,
    pub g: f64,
    /// `prod_{i <= a} (1 - s_i)`.
    pub pi_attack: f64,
    /// `prod_{i > a} (1 - s_i)`.
    pub pi_honest: f64,
}

/// Minimiser of `g_B` within one family of shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeOptimum {
    pub shape: EquilibriumShape,
    /// Number of honest provers inside the mixing committee.
    pub honest_committee: usize,
    /// Minimum loss; `+inf` when the family has no feasible point.
    pub loss: f64,
    /// `|left - right|` of the shape constraint at the returned point.
    pub constraint_residual: f64,
}

impl ShapeOptimum {
    pub fn is_feasible(&self) -> bool {
        self.loss.is_finite()
    }

    fn infeasible(kind: ShapeKind, n: usize) -> Self {
        Self {
            shape: EquilibriumShape {
                kind,
                k: 0,
                s: 0.0,
                n,
            },
            honest_committee: 0,
            loss: f64::INFINITY,
            constraint_residual: 0.0,
        }
    }
}

/// Evaluates `g_B` at a canonical profile of length `n`.
pub fn eval_g(
    params: &ProtocolParams,
    profile: &StrategyProfile,
) -> Result<BoundEvaluation, ModelError> {
    profile.expect_len(params.n())?;
    // StrategyProfile guarantees canonical order.
    Ok(eval_g_unchecked(params, profile.probs()))
}

pub(crate) fn eval_g_unchecked(params: &ProtocolParams, s: &[f64]) -> BoundEvaluation {
    let a = params.a();
    let c = params.penalty();
    let pi_attack: f64 = s[..a].iter().map(|x| 1.0 - x).product();
    let pi_honest: f64 = s[a..].iter().map(|x| 1.0 - x).product();
    let sum: f64 = s.iter().sum();
    let left = sum + c * pi_attack * pi_honest;
    let right = c * pi_honest - params.stake();
    BoundEvaluation {
        left,
        right,
        g: left.max(right),
        pi_attack,
        pi_honest,
    }
}

/// `|left - right|` at `profile`.
pub fn branch_equality_residual(
    params: &ProtocolParams,
    profile: &StrategyProfile,
) -> Result<f64, ModelError> {
    let e = eval_g(params, profile)?;
    Ok((e.left - e.right).abs())
}

/// Best designated profile with `h_j` honest committee members, i.e. a
/// committee of `m = h_j + a - 1` mixing provers plus the designate, solving
/// `1 + m s = C (1 - s)^{h_j} - B`. `None` when `C - B <= 1` (then `s = 0`).
pub fn designated_branch(params: &ProtocolParams, h_j: usize) -> Option<ShapeOptimum> {
    let a = params.a();
    let c = params.penalty();
    let b = params.stake();
    if c - b <= 1.0 || h_j == 0 || h_j > params.h() {
        return None;
    }
    let m = h_j + a - 1;
    if m == 0 {
        return None;
    }
    let mf = m as f64;
    let hj = h_j as i32;
    let f = |s: f64| 1.0 + mf * s - c * (1.0 - s).powi(hj) + b;
    let df = |s: f64| mf + c * hj as f64 * (1.0 - s).powi(hj - 1);
    let r = find_root_newton(f, df, 0.0, 1.0).ok()?;
    let s = r.root;
    let shape = EquilibriumShape::designated(m, s, params.n()).ok()?;
    Some(ShapeOptimum {
        shape,
        honest_committee: h_j,
        loss: 1.0 + mf * s,
        constraint_residual: r.residual.abs(),
    })
}

/// Designated optimum `D*_B`: the best designated branch over `h_j = 1..=h`.
///
/// When `C - B <= 1` the designate alone (`s = 0`) is optimal with loss 1.
pub fn minimize_designated_star(params: &ProtocolParams) -> ShapeOptimum {
    let n = params.n();
    let lone = ShapeOptimum {
        shape: EquilibriumShape {
            kind: ShapeKind::Designated,
            k: 0,
            s: 0.0,
            n,
        },
        honest_committee: 0,
        loss: 1.0,
        constraint_residual: (1.0 - (params.penalty() - params.stake())).abs(),
    };
    if params.penalty() - params.stake() <= 1.0 {
        return lone;
    }
    (1..=params.h())
        .filter_map(|h_j| designated_branch(params, h_j))
        .fold(None, |best: Option<ShapeOptimum>, cand| match best {
            Some(b) if b.loss <= cand.loss => Some(b),
            _ => Some(cand),
        })
        .unwrap_or(lone)
}

/// All interior solutions of the symmetric constraint for committee
/// `k = h_k + a`: `k s + C (1 - s)^k = C (1 - s)^{h_k} - B`.
pub fn symmetric_roots(params: &ProtocolParams, h_k: usize) -> Vec<f64> {
    let k = h_k + params.a();
    let c = params.penalty();
    let b = params.stake();
    let kf = k as f64;
    let (ki, hi) = (k as i32, h_k as i32);
    let f = |s: f64| kf * s + c * (1.0 - s).powi(ki) - c * (1.0 - s).powi(hi) + b;
    find_all_roots(f, 1e-9, 1.0 - 1e-9, ROOT_GRID)
}

/// Best symmetric profile with `h_k` honest members (committee `k = h_k + a`),
/// minimising `C (1 - s)^{h_k} - B` over the interior constraint roots.
pub fn symmetric_branch(params: &ProtocolParams, h_k: usize) -> Option<ShapeOptimum> {
    if h_k == 0 || h_k > params.h() {
        return None;
    }
    let k = h_k + params.a();
    let c = params.penalty();
    let b = params.stake();
    symmetric_roots(params, h_k)
        .into_iter()
        .map(|s| {
            let right = c * (1.0 - s).powi(h_k as i32) - b;
            let left = k as f64 * s + c * (1.0 - s).powi(k as i32);
            (s, right, (left - right).abs())
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .and_then(|(s, loss, residual)| {
            Some(ShapeOptimum {
                shape: EquilibriumShape::symmetric(k, s, params.n()).ok()?,
                honest_committee: h_k,
                loss,
                constraint_residual: residual,
            })
        })
}

/// Symmetric optimum `S*_B`; loss `+inf` if no `h_k` admits an interior root.
pub fn minimize_symmetric_star(params: &ProtocolParams) -> ShapeOptimum {
    (1..=params.h())
        .filter_map(|h_k| symmetric_branch(params, h_k))
        .fold(None, |best: Option<ShapeOptimum>, cand| match best {
            Some(b) if b.loss <= cand.loss => Some(b),
            _ => Some(cand),
        })
        .unwrap_or_else(|| ShapeOptimum::infeasible(ShapeKind::Symmetric, params.n()))
}

/// The smaller of `D*_B` and `S*_B`; ties within `1e-9` go to the designated shape.
pub fn minimize_g(params: &ProtocolParams) -> ShapeOptimum {
    let d = minimize_designated_star(params);
    let s = minimize_symmetric_star(params);
    if s.loss < d.loss - 1e-9 {
        s
    } else {
        d
    }
}

/// Result of brute-force minimisation over a probability grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub profile: StrategyProfile,
    pub g: f64,
    /// Number of canonical grid profiles evaluated.
    pub evaluated: u64,
}

impl GridOptimum {
    /// The profile's shape if it is designated or symmetric to within one grid cell.
    pub fn shape(&self, grid: usize) -> Option<EquilibriumShape> {
        EquilibriumShape::classify(&self.profile, 0.5 / grid as f64)
    }
}

/// Minimises `g_B` over every canonical profile with entries in `{0, 1/grid, ..., 1}`.
pub fn grid_oracle_minimize_g(
    params: &ProtocolParams,
    grid: usize,
) -> Result<GridOptimum, LowerBoundError> {
    let n = params.n();
    if n > GRID_ORACLE_MAX_N {
        return Err(LowerBoundError::TooManyProvers(n));
    }
    if grid == 0 || grid > GRID_ORACLE_MAX_GRID {
        return Err(LowerBoundError::GridTooLarge(grid));
    }
    let mut search = GridSearch {
        params,
        step: 1.0 / grid as f64,
        cur: vec![0; n],
        best: vec![0; n],
        best_g: f64::INFINITY,
        evaluated: 0,
    };
    search.walk(0, grid, 0.0, 1.0, 1.0);
    let step = search.step;
    let profile = StrategyProfile::new(
        search
            .best
            .iter()
            .map(|&i| (i as f64 * step).min(1.0))
            .collect(),
    )?;
    Ok(GridOptimum {
        profile,
        g: search.best_g,
        evaluated: search.evaluated,
    })
}

struct GridSearch<'a> {
    params: &'a ProtocolParams,
    step: f64,
    cur: Vec<usize>,
    best: Vec<usize>,
    best_g: f64,
    evaluated: u64,
}

impl GridSearch<'_> {
    /// Depth-first over non-increasing grid indices with running sum and products.
    fn walk(&mut self, depth: usize, max_idx: usize, sum: f64, prod_all: f64, prod_honest: f64) {
        let c = self.params.penalty();
        if depth == self.cur.len() {
            let g = (sum + c * prod_all).max(c * prod_honest - self.params.stake());
            self.evaluated += 1;
            if g < self.best_g {
                self.best_g = g;
                self.best.copy_from_slice(&self.cur);
            }
            return;
        }
        let honest = depth >= self.params.a();
        for idx in (0..=max_idx).rev() {
            let x = idx as f64 * self.step;
            self.cur[depth] = idx;
            let q = 1.0 - x;
            let ph = if honest { prod_honest * q } else { prod_honest };
            self.walk(depth + 1, idx, sum + x, prod_all * q, ph);
        }
    }
}
