//! Bracketed scalar root finding and the principal branch of the Lambert W function.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Iteration cap for bracketed root finding.
pub const MAX_ITER: usize = 200;

/// Residual at which a root is accepted outright.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("iteration limit reached; best residual {residual}")]
    MaxIterations { residual: f64 },
    #[error("argument {0} is outside the domain")]
    Domain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finds a root of `f` in `[lo, hi]`, which must bracket a sign change.
///
/// Uses safeguarded false position (Illinois variant), falling back to
/// bisection whenever the bracket fails to halve. Iterates until the bracket
/// is down to a few ulps (or `1e-15` of the initial width), so the residual
/// is at floating-point resolution; it is `<= 1e-10` for well-scaled `f`.
pub fn find_root<F: FnMut(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
) -> Result<RootResult, NumericsError> {
    solve(f, None::<fn(f64) -> f64>, lo, hi)
}

/// Like [`find_root`] but takes Newton steps from the derivative `df` when they
/// stay inside the bracket.
pub fn find_root_newton<F, D>(f: F, df: D, lo: f64, hi: f64) -> Result<RootResult, NumericsError>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    solve(f, Some(df), lo, hi)
}

fn solve<F, D>(mut f: F, mut df: Option<D>, lo: f64, hi: f64) -> Result<RootResult, NumericsError>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if fa.is_nan() || fb.is_nan() {
        return Err(NumericsError::Domain(if fa.is_nan() { a } else { b }));
    }
    if fa == 0.0 {
        return Ok(RootResult {
            root: a,
            residual: 0.0,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(RootResult {
            root: b,
            residual: 0.0,
            iterations: 0,
        });
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NotBracketed {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    // Last evaluated point, used as the Newton base.
    let (mut x, mut fx) = if fa.abs() < fb.abs() {
        (a, fa)
    } else {
        (b, fb)
    };
    let mut width_before = b - a;
    let xtol_abs = 1e-15 * (b - a);
    // Which endpoint was retained last step (-1 = a, 1 = b), for Illinois.
    let mut side = 0i8;

    for iter in 1..=MAX_ITER {
        let mid = a + 0.5 * (b - a);
        let xtol = 4.0 * f64::EPSILON * a.abs().max(b.abs()) + xtol_abs;
        if mid <= a || mid >= b || b - a <= xtol {
            // Endpoint values may carry Illinois scaling, so re-evaluate them.
            let (fa, fb) = (f(a), f(b));
            let mut best = if fa.abs() < fb.abs() {
                (a, fa)
            } else {
                (b, fb)
            };
            if fx.abs() < best.1.abs() {
                best = (x, fx);
            }
            return Ok(RootResult {
                root: best.0,
                residual: best.1,
                iterations: iter - 1,
            });
        }

        let width = b - a;
        let mut cand = f64::NAN;
        if let Some(d) = df.as_mut() {
            let slope = d(x);
            if slope != 0.0 && slope.is_finite() {
                cand = x - fx / slope;
            }
        }
        if !(cand > a && cand < b) {
            cand = (a * fb - b * fa) / (fb - fa);
        }
        // Force a bisection when interpolation stalls.
        if !(cand > a && cand < b) || width > 0.5 * width_before {
            cand = mid;
        }
        width_before = width;

        let fc = f(cand);
        if fc.is_nan() {
            return Err(NumericsError::Domain(cand));
        }
        x = cand;
        fx = fc;
        if fc == 0.0 {
            return Ok(RootResult {
                root: cand,
                residual: 0.0,
                iterations: iter,
            });
        }
        if fc.signum() == fa.signum() {
            a = cand;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = cand;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    if fx.abs() <= RESIDUAL_TOL {
        return Ok(RootResult {
            root: x,
            residual: fx,
            iterations: MAX_ITER,
        });
    }
    Err(NumericsError::MaxIterations { residual: fx })
}

/// Every root of `f` in `[lo, hi]` detected as a sign change (or exact zero)
/// on a uniform grid of `grid` cells, refined with [`find_root`]. Sorted and
/// de-duplicated to within `1e-8`.
pub fn find_all_roots<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, grid: usize) -> Vec<f64> {
    let grid = grid.max(1);
    let xs: Vec<f64> = (0..=grid)
        .map(|i| {
            if i == grid {
                hi
            } else {
                lo + (hi - lo) * i as f64 / grid as f64
            }
        })
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..=grid {
        if fs[i] == 0.0 {
            roots.push(xs[i]);
        } else if i < grid && fs[i + 1] != 0.0 && fs[i].signum() != fs[i + 1].signum() {
            if let Ok(r) = find_root(&mut f, xs[i], xs[i + 1]) {
                roots.push(r.root);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-8);
    roots
}

/// Principal branch `W_0(x)` for `x >= -1/e`, by Halley iteration.
pub fn lambert_w(x: f64) -> Result<f64, NumericsError> {
    const INV_E: f64 = 0.367_879_441_171_442_33;
    if x.is_nan() || x < -INV_E - 1e-15 {
        return Err(NumericsError::Domain(x));
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let p2 = 2.0 * (std::f64::consts::E * x + 1.0);
    if p2 <= 0.0 {
        return Ok(-1.0);
    }
    let mut w = if x < -0.25 {
        // Series about the branch point.
        let p = p2.sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        (1.0 + x).ln()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..64 {
        let ew = w.exp();
        let r = w * ew - x;
        if r == 0.0 || w == -1.0 {
            break;
        }
        let wp1 = w + 1.0;
        let step = r / (ew * wp1 - (w + 2.0) * r / (2.0 * wp1));
        if !step.is_finite() {
            break;
        }
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// `W_0(e^y)`, computed without forming `e^y`: solves `w + ln w = y`.
pub fn lambert_w_of_exp(y: f64) -> Result<f64, NumericsError> {
    if y.is_nan() {
        return Err(NumericsError::Domain(y));
    }
    if y < 500.0 {
        return lambert_w(y.exp());
    }
    let mut w = y - y.ln();
    for _ in 0..64 {
        let r = w + w.ln() - y;
        let step = r / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    Ok(w)
}
