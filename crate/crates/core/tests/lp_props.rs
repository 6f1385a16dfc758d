use liveness::lp::{solve, LpProblem, LpStatus, Relation};
use liveness::model::binomial_pmf;
use liveness::payment::solve_lp1;
use proptest::prelude::*;

/// Solves the square system `m x = b` by Gaussian elimination with partial pivoting.
fn gauss(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..n {
                        m[r][c] -= f * m[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / m[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Minimum of `c . x` over `a x <= b`, `x >= 0` by enumerating every vertex.
fn vertex_minimum(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let nv = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..nv {
        let mut e = vec![0.0; nv];
        e[j] = -1.0;
        rows.push((e, 0.0));
    }
    let mut best = f64::INFINITY;
    for active in combinations(rows.len(), nv) {
        let m = active.iter().map(|&i| rows[i].0.clone()).collect();
        let rhs = active.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = gauss(m, rhs) {
            let feasible = rows
                .iter()
                .all(|(r, bi)| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= bi + 1e-9);
            if feasible {
                best = best.min(c.iter().zip(&x).map(|(p, q)| p * q).sum());
            }
        }
    }
    best
}

fn random_lp() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=8, 1usize..=5).prop_flat_map(|(nv, m)| {
        (
            prop::collection::vec(-5.0f64..5.0, nv),
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, nv), m),
            prop::collection::vec(0.1f64..10.0, m),
        )
    })
}

/// Adds `x_j <= 10` so the feasible region is a polytope containing the origin.
fn boxed(nv: usize, a: &[Vec<f64>], b: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    for j in 0..nv {
        let mut e = vec![0.0; nv];
        e[j] = 1.0;
        a.push(e);
        b.push(10.0);
    }
    (a, b)
}

fn problem(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpProblem {
    let mut p = LpProblem::minimize(c.to_vec());
    for (row, &rhs) in a.iter().zip(b) {
        p.add(row.clone(), Relation::Le, rhs);
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn simplex_matches_vertex_enumeration((c, a, b) in random_lp()) {
        let nv = c.len();
        let (a, b) = boxed(nv, &a, &b);
        let sol = solve(&problem(&c, &a, &b)).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let brute = vertex_minimum(&c, &a, &b);
        prop_assert!((sol.objective - brute).abs() <= 1e-7 * (1.0 + brute.abs()), "simplex {} vertices {}", sol.objective, brute);
    }

    #[test]
    fn weak_duality((c, a, b) in random_lp()) {
        let nv = c.len();
        let (a, b) = boxed(nv, &a, &b);
        let sol = solve(&problem(&c, &a, &b)).unwrap();
        // Duals of <= rows are non-positive and dual feasible: c - A^T y >= 0.
        for &y in &sol.duals {
            prop_assert!(y <= 1e-9);
        }
        for j in 0..nv {
            let reduced = c[j] - a.iter().zip(&sol.duals).map(|(row, y)| row[j] * y).sum::<f64>();
            prop_assert!(reduced >= -1e-7);
        }
        let dual_bound: f64 = b.iter().zip(&sol.duals).map(|(bi, y)| bi * y).sum();
        prop_assert!(sol.objective >= dual_bound - 1e-7);
        prop_assert!((sol.objective - dual_bound).abs() <= 1e-7 * (1.0 + dual_bound.abs()));
    }

    #[test]
    fn row_scaling_preserves_solution((c, a, b) in random_lp(), scales in prop::collection::vec(0.01f64..100.0, 13)) {
        let nv = c.len();
        let (a, b) = boxed(nv, &a, &b);
        let base = solve(&problem(&c, &a, &b)).unwrap();
        let sa: Vec<Vec<f64>> = a.iter().zip(&scales).map(|(r, k)| r.iter().map(|x| x * k).collect()).collect();
        let sb: Vec<f64> = b.iter().zip(&scales).map(|(x, k)| x * k).collect();
        let scaled = solve(&problem(&c, &sa, &sb)).unwrap();
        prop_assert!((base.objective - scaled.objective).abs() <= 1e-7 * (1.0 + base.objective.abs()));
    }
}

/// The committee LP for `k = h_k + a`, built directly, with each row scaled by `scales`.
fn lp1_problem(k: usize, a: usize, c: f64, s: f64, scales: &[f64]) -> LpProblem {
    let h_k = k - a;
    let tv = k;
    let mut obj = vec![0.0; k + 1];
    obj[tv] = 1.0;
    let mut p = LpProblem::minimize(obj);
    p.set_lower_bound(tv, f64::NEG_INFINITY);
    let bin = binomial_pmf(h_k, s);
    for i in 0..=a {
        let mut row = vec![0.0; k + 1];
        let mut rhs = 0.0;
        for (x, &pr) in bin.iter().enumerate() {
            if i + x == 0 {
                rhs -= c * pr;
            } else {
                row[i + x - 1] += pr;
            }
        }
        row[tv] = -1.0;
        let sc = scales[i];
        p.add(row.iter().map(|v| v * sc).collect(), Relation::Le, rhs * sc);
    }
    let eq = binomial_pmf(k - 1, s);
    let row: Vec<f64> = (0..=k)
        .map(|j| if j < k { eq[j] / (j + 1) as f64 } else { 0.0 })
        .collect();
    let sc = scales[a + 1];
    p.add(row.iter().map(|v| v * sc).collect(), Relation::Eq, sc);
    p
}

fn feasible(p: &LpProblem, x: &[f64]) -> bool {
    let lb_ok = x.iter().zip(&p.lower_bounds).all(|(v, lb)| *v >= lb - 1e-9);
    lb_ok
        && p.constraints.iter().all(|c| {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let tol = 1e-7 * (1.0 + c.rhs.abs());
            match c.relation {
                Relation::Le => lhs <= c.rhs + tol,
                Relation::Ge => lhs >= c.rhs - tol,
                Relation::Eq => (lhs - c.rhs).abs() <= tol,
            }
        })
}

/// Whether every variable has the same value across the optimal face.
fn optimum_is_unique(p: &LpProblem, opt: f64) -> bool {
    let nv = p.num_vars();
    let mut face = p.clone();
    face.add(
        p.objective.clone(),
        Relation::Le,
        opt + 1e-9 * (1.0 + opt.abs()),
    );
    (0..nv).all(|j| {
        let mut e = vec![0.0; nv];
        e[j] = 1.0;
        let mut lo = face.clone();
        lo.objective = e.clone();
        let mut hi = face.clone();
        hi.objective = e.iter().map(|v| -v).collect();
        match (solve(&lo), solve(&hi)) {
            (Ok(l), Ok(h)) if l.is_optimal() && h.is_optimal() => {
                (l.objective + h.objective).abs() <= 1e-6
            }
            _ => false,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lp1_row_scaling_keeps_optimum(
        h_k in 1usize..6,
        a in 1usize..5,
        c in 2.0f64..500.0,
        s in 0.05f64..0.95,
        scales in prop::collection::vec(0.01f64..100.0, 7),
    ) {
        let k = h_k + a;
        let reference = solve_lp1(k, a, c, s, 0.0).unwrap();
        let plain = solve(&lp1_problem(k, a, c, s, &[1.0; 7])).unwrap();
        let scaled = solve(&lp1_problem(k, a, c, s, &scales)).unwrap();
        prop_assert!(plain.is_optimal() && scaled.is_optimal());
        let tol = 1e-7 * (1.0 + reference.t.abs());
        prop_assert!((plain.objective - reference.t).abs() <= tol);
        prop_assert!((scaled.objective - reference.t).abs() <= tol);
        // Each solution is optimal for the other problem.
        let base = lp1_problem(k, a, c, s, &[1.0; 7]);
        prop_assert!(feasible(&base, &scaled.x));
        // When the optimum is unique the vertex itself must coincide.
        if optimum_is_unique(&base, plain.objective) {
            for (p, q) in plain.x.iter().zip(&scaled.x) {
                prop_assert!((p - q).abs() <= 1e-6 * (1.0 + p.abs()));
            }
        }
    }
}
