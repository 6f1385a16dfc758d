//! Payment rules: the designated rule, anonymous committee prizes (from the
//! tight linear system or the committee LP), the lottery, explicit tables,
//! and the two reductions between them.
//!
//! Structured rules pay only for deliveries by the designate and committee
//! members (provers `0..` in canonical order); deliveries by idle provers
//! still avert the penalty but earn nothing.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{ic_check, AdversaryError};
use crate::lower_bound::{eval_g, minimize_designated_star, symmetric_branch, ShapeOptimum};
use crate::lp::{self, LpError, LpProblem, LpStatus, Relation};
use crate::model::{
    binomial_coefficient, binomial_pmf, DeliveryVector, EquilibriumShape, ModelError,
    ProtocolParams, ShapeKind, StrategyProfile, MAX_PROVERS,
};

/// Step of the coarse grid over `s` when minimising LP1.
pub const S_GRID_STEP: f64 = 1e-3;

/// Largest `n` for which a rule is expanded into an explicit table.
pub const MAX_TABLE_PROVERS: usize = 14;

/// Tolerance for classifying LP1 prizes as zero and constraints as slack.
pub const LP1_PATTERN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PaymentError {
    #[error("probability s = {0} must lie strictly between 0 and 1")]
    ProbabilityOutOfRange(f64),
    #[error("committee of size {k} needs more than a = {a} members")]
    CommitteeTooSmall { k: usize, a: usize },
    #[error("rule needs at least {needed} provers, got {n}")]
    TooFewProvers { needed: usize, n: usize },
    #[error("table has {got} rows, expected {expected}")]
    TableShape { expected: usize, got: usize },
    #[error("explicit tables support n <= {MAX_TABLE_PROVERS}, got {0}")]
    TableTooLarge(usize),
    #[error("the profile is not an equilibrium of the rule (max violation {0:e})")]
    NotIncentiveCompatible(f64),
    #[error("profile is not symmetric on a committee of {0}")]
    NotSymmetric(usize),
    #[error("committee LP is infeasible")]
    Lp1Infeasible,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Adversary(#[from] Box<AdversaryError>),
}

impl From<AdversaryError> for PaymentError {
    fn from(e: AdversaryError) -> Self {
        Self::Adversary(Box::new(e))
    }
}

/// A payment rule over delivery outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PaymentRule {
    /// Prover 0 is designated; provers `1..=k` form the committee.
    Designated {
        k: usize,
        s: f64,
        /// Amount charged to every prover when the designate fails to deliver.
        #[serde(default)]
        slash: f64,
    },
    /// Provers `0..k` form the committee; `t` committee deliverers share `f[t - 1]`.
    AnonymousSymmetric { k: usize, f: Vec<f64> },
    /// Provers `0..k`; one committee deliverer, chosen uniformly, wins `prize`.
    /// Tabulated in expectation (each of `t` deliverers gets `prize / t`).
    Lottery { k: usize, prize: f64 },
    /// `payments[mask][i]`, where bit `i` of `mask` is prover `i`'s delivery.
    Table { n: usize, payments: Vec<Vec<f64>> },
}

/// Position of a prover within a structured rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Designate,
    Committee,
    Idle,
}

impl PaymentRule {
    /// Smallest number of provers the rule is defined for.
    pub fn min_provers(&self) -> usize {
        match self {
            Self::Designated { k, .. } => k + 1,
            Self::AnonymousSymmetric { k, .. } | Self::Lottery { k, .. } => *k,
            Self::Table { n, .. } => *n,
        }
    }

    pub fn is_table(&self) -> bool {
        matches!(self, Self::Table { .. })
    }

    /// Role of prover `i`; `None` for tables.
    pub fn role(&self, i: usize) -> Option<Role> {
        match self {
            Self::Designated { k, .. } => Some(if i == 0 {
                Role::Designate
            } else if i <= *k {
                Role::Committee
            } else {
                Role::Idle
            }),
            Self::AnonymousSymmetric { k, .. } | Self::Lottery { k, .. } => {
                Some(if i < *k { Role::Committee } else { Role::Idle })
            }
            Self::Table { .. } => None,
        }
    }

    /// Committee index range.
    pub fn committee(&self) -> Option<std::ops::Range<usize>> {
        match self {
            Self::Designated { k, .. } => Some(1..k + 1),
            Self::AnonymousSymmetric { k, .. } | Self::Lottery { k, .. } => Some(0..*k),
            Self::Table { .. } => None,
        }
    }

    /// Payment to a prover of `role` in a structured rule, given its own
    /// delivery, whether the designate delivered and the number of committee
    /// deliveries (own included).
    pub fn role_payment(
        &self,
        role: Role,
        own: bool,
        designate: bool,
        committee_count: usize,
    ) -> f64 {
        match self {
            Self::Designated { k, s, slash } => {
                if !designate {
                    return -slash;
                }
                let (k, s) = (*k, *s);
                let total = 1.0 + k as f64 * s;
                if k == 0 {
                    return if role == Role::Designate { 1.0 } else { 0.0 };
                }
                let q = (1.0 - s).powi(k as i32);
                let prize = k as f64 * s / (1.0 - q);
                match role {
                    Role::Designate if committee_count == 0 => total,
                    Role::Designate => 1.0 - q * prize,
                    Role::Committee if own => prize / committee_count as f64,
                    _ => 0.0,
                }
            }
            Self::AnonymousSymmetric { f, .. } => {
                if role == Role::Committee && own && committee_count > 0 {
                    f[committee_count - 1] / committee_count as f64
                } else {
                    0.0
                }
            }
            Self::Lottery { prize, .. } => {
                if role == Role::Committee && own && committee_count > 0 {
                    prize / committee_count as f64
                } else {
                    0.0
                }
            }
            Self::Table { .. } => panic!("role_payment called on a table rule"),
        }
    }

    /// Total payment of a structured rule over all `n` provers.
    pub fn role_total(&self, n: usize, designate: bool, committee_count: usize) -> f64 {
        match self {
            Self::Designated { k, s, slash } => {
                if designate {
                    1.0 + *k as f64 * s
                } else {
                    -slash * n as f64
                }
            }
            Self::AnonymousSymmetric { f, .. } => {
                if committee_count == 0 {
                    0.0
                } else {
                    f[committee_count - 1]
                }
            }
            Self::Lottery { prize, .. } => {
                if committee_count == 0 {
                    0.0
                } else {
                    *prize
                }
            }
            Self::Table { .. } => panic!("role_total called on a table rule"),
        }
    }

    fn check_n(&self, n: usize) -> Result<(), PaymentError> {
        match self {
            Self::Table { n: tn, payments } => {
                if *tn != n {
                    return Err(ModelError::LengthMismatch {
                        expected: *tn,
                        got: n,
                    }
                    .into());
                }
                if *tn > MAX_TABLE_PROVERS {
                    return Err(PaymentError::TableTooLarge(*tn));
                }
                let expected = 1usize << tn;
                if payments.len() != expected {
                    return Err(PaymentError::TableShape {
                        expected,
                        got: payments.len(),
                    });
                }
                if let Some(row) = payments.iter().find(|r| r.len() != *tn) {
                    return Err(ModelError::LengthMismatch {
                        expected: *tn,
                        got: row.len(),
                    }
                    .into());
                }
                Ok(())
            }
            Self::AnonymousSymmetric { k, f } if f.len() != *k => Err(ModelError::LengthMismatch {
                expected: *k,
                got: f.len(),
            }
            .into()),
            _ => {
                let needed = self.min_provers();
                if n < needed || n > MAX_PROVERS {
                    Err(PaymentError::TooFewProvers { needed, n })
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Checks the rule can be applied to `n` provers.
    pub fn validate(&self, n: usize) -> Result<(), PaymentError> {
        self.check_n(n)
    }

    /// Payment vector for delivery outcome `d`.
    pub fn payments(&self, d: DeliveryVector) -> Vec<f64> {
        let n = d.len();
        match self {
            Self::Table { payments, .. } => payments[d.mask() as usize].clone(),
            _ => {
                let committee = self.committee().expect("structured rule");
                let c = d.count_range(committee.start, committee.end);
                let designate = match self {
                    Self::Designated { .. } => d.get(0),
                    _ => true,
                };
                (0..n)
                    .map(|i| self.role_payment(self.role(i).unwrap(), d.get(i), designate, c))
                    .collect()
            }
        }
    }

    /// Total payment for outcome `d`.
    pub fn total(&self, d: DeliveryVector) -> f64 {
        match self {
            Self::Table { payments, .. } => payments[d.mask() as usize].iter().sum(),
            Self::Designated { .. } => {
                let c = self.committee().unwrap();
                self.role_total(d.len(), d.get(0), d.count_range(c.start, c.end))
            }
            _ => {
                let c = self.committee().unwrap();
                self.role_total(d.len(), true, d.count_range(c.start, c.end))
            }
        }
    }

    /// Expands the rule into an explicit table over `n <= 14` provers.
    pub fn to_table(&self, n: usize) -> Result<PaymentRule, PaymentError> {
        if n > MAX_TABLE_PROVERS {
            return Err(PaymentError::TableTooLarge(n));
        }
        self.check_n(n)?;
        if self.is_table() {
            return Ok(self.clone());
        }
        let payments = (0..1u64 << n)
            .map(|m| self.payments(DeliveryVector::from_mask(m, n)))
            .collect();
        Ok(Self::Table { n, payments })
    }

    /// Smallest payment the rule can make.
    pub fn min_payment(&self, n: usize) -> f64 {
        match self {
            Self::Table { payments, .. } => payments
                .iter()
                .flatten()
                .copied()
                .fold(f64::INFINITY, f64::min),
            _ => (0..1u64 << n.min(MAX_TABLE_PROVERS))
                .flat_map(|m| self.payments(DeliveryVector::from_mask(m, n.min(MAX_TABLE_PROVERS))))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn check_open_probability(s: f64) -> Result<(), PaymentError> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(PaymentError::ProbabilityOutOfRange(s))
    }
}

/// Designated rule for a committee of `k` mixing at `s` (`k = 0` pays the designate 1).
pub fn make_designated_rule(k: usize, s: f64) -> Result<PaymentRule, PaymentError> {
    make_designated_rule_staked(k, s, 0.0)
}

/// Designated rule that charges every prover `slash` when the designate fails.
pub fn make_designated_rule_staked(
    k: usize,
    s: f64,
    slash: f64,
) -> Result<PaymentRule, PaymentError> {
    if k > 0 {
        check_open_probability(s)?;
    }
    let s = if k == 0 { 0.0 } else { s };
    Ok(PaymentRule::Designated { k, s, slash })
}

/// Lottery with prize `P = k s / (1 - (1 - s)^k)`.
pub fn make_lottery(k: usize, s: f64) -> Result<PaymentRule, PaymentError> {
    check_open_probability(s)?;
    if k == 0 {
        return Err(PaymentError::TooFewProvers { needed: 1, n: 0 });
    }
    let prize = k as f64 * s / (1.0 - (1.0 - s).powi(k as i32));
    Ok(PaymentRule::Lottery { k, prize })
}

/// Solution of the tight system for a full committee of `h + a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ls1Solution {
    /// `f_{h+1}, ..., f_{h+a}` (closed form).
    pub f: Vec<f64>,
    /// `C (1 - s)^h`.
    pub t: f64,
    pub nonnegative: bool,
    /// `E[f_{1+X} / (1+X)] - 1` with `X ~ Bin(h + a - 1, s)` and `f_1..f_h = 0`.
    pub equilibrium_residual: f64,
    /// Largest relative gap between closed form and forward substitution.
    pub closed_form_gap: f64,
    /// Largest residual of the attacker equations.
    pub system_residual: f64,
}

impl Ls1Solution {
    /// Prize vector `f_1..f_{h+a}` with the leading `h` zeros.
    pub fn full_prizes(&self, h: usize) -> Vec<f64> {
        let mut f = vec![0.0; h];
        f.extend_from_slice(&self.f);
        f
    }
}

/// Solves the system in which every attacker delivery count `1..=a` yields
/// exactly the silent-attack cost `C (1 - s)^h`, with `f_1 = ... = f_h = 0`.
pub fn solve_ls1(h: usize, a: usize, c: f64, s: f64) -> Result<Ls1Solution, PaymentError> {
    check_open_probability(s)?;
    if h == 0 {
        return Err(ModelError::NoHonest(0).into());
    }
    let r = (1.0 - s) / s;
    let t = c * (1.0 - s).powi(h as i32);
    let lead = c * r.powi(h as i32);
    let closed: Vec<f64> = (1..=a)
        .map(|i| {
            lead * (0..i)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * binomial_coefficient(h + j - 1, j) * r.powi(j as i32)
                })
                .sum::<f64>()
        })
        .collect();

    // Forward substitution: equation i (attacker delivers i) determines f_{h+i}.
    let pmf = binomial_pmf(h, s);
    let mut direct = vec![0.0; a];
    let prize = |f: &[f64], idx: usize| if idx <= h { 0.0 } else { f[idx - h - 1] };
    for i in 1..=a {
        let known: f64 = (0..h)
            .filter(|x| i + x > h)
            .map(|x| pmf[x] * prize(&direct, i + x))
            .sum();
        direct[i - 1] = (t - known) / pmf[h];
    }
    let closed_form_gap = closed
        .iter()
        .zip(&direct)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max);
    let system_residual = (1..=a)
        .map(|i| {
            let lhs: f64 = (0..=h).map(|x| pmf[x] * prize(&closed, i + x)).sum();
            (lhs - t).abs()
        })
        .fold(0.0, f64::max);

    let k = h + a;
    let eq = binomial_pmf(k - 1, s);
    let value: f64 = (h + 1..=k)
        .map(|i| eq[i - 1] * prize(&closed, i) / i as f64)
        .sum();
    let nonnegative = closed.iter().all(|&x| x >= -1e-9);
    Ok(Ls1Solution {
        f: closed,
        t,
        nonnegative,
        equilibrium_residual: value - 1.0,
        closed_form_gap,
        system_residual,
    })
}

/// Optimum of the committee LP at fixed `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lp1Solution {
    pub t: f64,
    /// `f_1..f_k`.
    pub f: Vec<f64>,
    pub rule: PaymentRule,
    /// Prize indices `t` (1-based) with `f_t` at zero.
    pub zero_prizes: Vec<usize>,
    /// Attacker delivery counts `i` whose constraint is not tight.
    pub slack_constraints: Vec<usize>,
}

/// Minimises the worst attacker cost `t` over anonymous prizes `f_1..f_k`
/// for a committee of `k` mixing at `s`, of which `a` may be corrupted.
///
/// Row `i` (attacker delivers `i`, honest deliveries `X ~ Bin(k - a, s)`):
/// `E[f_{i+X}] <= t`, where `f_0 = C`. The equilibrium row fixes each
/// member's expected prize per delivery at 1. Prizes are bounded below by
/// `-t_count * stake_per_prover`.
pub fn solve_lp1(
    k: usize,
    a: usize,
    c: f64,
    s: f64,
    stake_per_prover: f64,
) -> Result<Lp1Solution, PaymentError> {
    check_open_probability(s)?;
    if k <= a {
        return Err(PaymentError::CommitteeTooSmall { k, a });
    }
    let h_k = k - a;
    let pmf = binomial_pmf(h_k, s);
    let eq = binomial_pmf(k - 1, s);
    let tv = k;
    let mut objective = vec![0.0; k + 1];
    objective[tv] = 1.0;
    let mut problem = LpProblem::minimize(objective);
    for j in 0..k {
        problem.set_lower_bound(j, -((j + 1) as f64) * stake_per_prover);
    }
    for i in 0..=a {
        let mut row = vec![0.0; k + 1];
        let mut rhs = 0.0;
        for (x, &p) in pmf.iter().enumerate() {
            let idx = i + x;
            if idx == 0 {
                rhs -= c * p;
            } else {
                row[idx - 1] += p;
            }
        }
        row[tv] = -1.0;
        problem.add(row, Relation::Le, rhs);
    }
    let mut row = vec![0.0; k + 1];
    for j in 1..=k {
        row[j - 1] = eq[j - 1] / j as f64;
    }
    problem.add(row, Relation::Eq, 1.0);

    let sol = lp::solve(&problem)?;
    if sol.status != LpStatus::Optimal {
        return Err(PaymentError::Lp1Infeasible);
    }
    let t = sol.x[tv];
    let f = sol.x[..k].to_vec();
    let scale = t.abs().max(1.0);
    let zero_prizes = f
        .iter()
        .enumerate()
        .filter(|(j, v)| {
            (*v - (-((j + 1) as f64) * stake_per_prover)).abs() <= LP1_PATTERN_TOL * scale
        })
        .map(|(j, _)| j + 1)
        .collect();
    let slack_constraints = (0..=a)
        .filter(|&i| {
            let lhs: f64 = pmf
                .iter()
                .enumerate()
                .map(|(x, p)| p * if i + x == 0 { c } else { f[i + x - 1] })
                .sum();
            t - lhs > LP1_PATTERN_TOL * scale
        })
        .collect();
    Ok(Lp1Solution {
        t,
        rule: PaymentRule::AnonymousSymmetric { k, f: f.clone() },
        f,
        zero_prizes,
        slack_constraints,
    })
}

/// A designated optimum together with the rule that attains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplementedDesignated {
    pub optimum: ShapeOptimum,
    pub rule: PaymentRule,
}

/// `D-hat`: the designated optimum, which is always implementable.
pub fn implementable_designated(params: &ProtocolParams) -> ImplementedDesignated {
    let optimum = minimize_designated_star(params);
    let rule =
        make_designated_rule_staked(optimum.shape.k, optimum.shape.s, params.stake_per_prover())
            .expect("designated optimum has s in (0, 1)");
    ImplementedDesignated { optimum, rule }
}

/// Local minimum of LP1's `t` over `s` for one committee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimum {
    pub honest_committee: usize,
    pub s: f64,
    pub t: f64,
}

/// `S-hat`: the best LP1 value over committee sizes and `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplementedSymmetric {
    /// Shape and LP value; loss `+inf` if every LP was infeasible.
    pub optimum: ShapeOptimum,
    pub lp: Option<Lp1Solution>,
    /// All refined local minima across committee sizes.
    pub local_minima: Vec<LocalMinimum>,
}

impl ImplementedSymmetric {
    pub fn rule(&self) -> Option<&PaymentRule> {
        self.lp.as_ref().map(|l| &l.rule)
    }
}

/// Minimum of LP1's `t` over `s` for committee `h_k + a`, with every local minimum found.
pub fn implementable_symmetric_branch(
    params: &ProtocolParams,
    h_k: usize,
) -> (Option<(f64, Lp1Solution)>, Vec<LocalMinimum>) {
    let k = h_k + params.a();
    let c = params.penalty();
    let spp = params.stake_per_prover();
    let eval = |s: f64| {
        solve_lp1(k, params.a(), c, s, spp)
            .map(|l| l.t)
            .unwrap_or(f64::INFINITY)
    };

    let steps = (1.0 / S_GRID_STEP).round() as usize;
    let mut grid: Vec<f64> = (1..steps).map(|i| i as f64 * S_GRID_STEP).collect();
    // Probe the lower-bound root as well: LP1 is tight there when implementable.
    if let Some(b) = symmetric_branch(params, h_k) {
        grid.push(b.shape.s);
        grid.sort_by(f64::total_cmp);
    }
    let ts: Vec<f64> = grid.iter().map(|&s| eval(s)).collect();
    let mut minima = Vec::new();
    for i in 0..ts.len() {
        let left = if i == 0 { f64::INFINITY } else { ts[i - 1] };
        let right = if i + 1 == ts.len() {
            f64::INFINITY
        } else {
            ts[i + 1]
        };
        if ts[i].is_finite() && ts[i] < left && ts[i] <= right {
            let lo = if i == 0 { grid[0] * 0.5 } else { grid[i - 1] };
            let hi = if i + 1 == grid.len() {
                0.5 * (grid[i] + 1.0)
            } else {
                grid[i + 1]
            };
            let (s, t) = golden_section(&eval, lo, hi, grid[i], ts[i]);
            minima.push(LocalMinimum {
                honest_committee: h_k,
                s,
                t,
            });
        }
    }
    let best = minima
        .iter()
        .min_by(|x, y| x.t.total_cmp(&y.t))
        .and_then(|m| solve_lp1(k, params.a(), c, m.s, spp).ok().map(|l| (m.s, l)));
    (best, minima)
}

/// Golden-section search on `[lo, hi]`; never returns worse than the seed point.
fn golden_section<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    seed: f64,
    seed_val: f64,
) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = (seed, seed_val);
    for _ in 0..80 {
        if b - a <= 1e-12 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    best
}

/// `S-hat` over all honest committee sizes `1..=h`.
pub fn implementable_symmetric(params: &ProtocolParams) -> ImplementedSymmetric {
    let mut local_minima = Vec::new();
    let mut best: Option<(usize, f64, Lp1Solution)> = None;
    for h_k in 1..=params.h() {
        let (b, mins) = implementable_symmetric_branch(params, h_k);
        local_minima.extend(mins);
        if let Some((s, lp)) = b {
            if best.as_ref().is_none_or(|(_, _, cur)| lp.t < cur.t) {
                best = Some((h_k, s, lp));
            }
        }
    }
    let n = params.n();
    match best {
        Some((h_k, s, lp)) => {
            let shape =
                EquilibriumShape::symmetric(h_k + params.a(), s, n).expect("committee fits");
            let residual = eval_g(params, &shape.expand())
                .map(|e| (e.left - e.right).abs())
                .unwrap_or(f64::NAN);
            ImplementedSymmetric {
                optimum: ShapeOptimum {
                    shape,
                    honest_committee: h_k,
                    loss: lp.t,
                    constraint_residual: residual,
                },
                lp: Some(lp),
                local_minima,
            }
        }
        None => ImplementedSymmetric {
            optimum: ShapeOptimum {
                shape: EquilibriumShape {
                    kind: ShapeKind::Symmetric,
                    k: 0,
                    s: 0.0,
                    n,
                },
                honest_committee: 0,
                loss: f64::INFINITY,
                constraint_residual: 0.0,
            },
            lp: None,
            local_minima,
        },
    }
}

/// Converts an IC rule into one whose equilibrium has prover 0 deliver with
/// certainty: prover 0 is paid exactly 1 on delivery, every other prover the
/// `s_0`-weighted mix of its old payments conditional on prover 0's delivery,
/// and nobody is paid when prover 0 is silent.
pub fn transform_to_designated(
    rule: &PaymentRule,
    profile: &StrategyProfile,
) -> Result<(PaymentRule, StrategyProfile), PaymentError> {
    let n = profile.len();
    let table = rule.to_table(n)?;
    let report = ic_check(&table, profile)?;
    if !report.is_ic() {
        return Err(PaymentError::NotIncentiveCompatible(report.max_violation));
    }
    let PaymentRule::Table { payments, .. } = &table else {
        unreachable!()
    };
    let s0 = profile.get(0);
    let mut out = vec![vec![0.0; n]; 1 << n];
    for (mask, row) in out.iter_mut().enumerate() {
        if mask & 1 == 0 {
            continue;
        }
        row[0] = 1.0;
        let with = &payments[mask];
        let without = &payments[mask & !1];
        for i in 1..n {
            row[i] = (1.0 - s0) * without[i] + s0 * with[i];
        }
    }
    let mut s = profile.probs().to_vec();
    s[0] = 1.0;
    Ok((
        PaymentRule::Table { n, payments: out },
        StrategyProfile::new(s)?,
    ))
}

/// Averages an IC rule implementing a symmetric committee of `k` into
/// anonymous prizes, dropping payments to non-deliverers and rescaling so
/// each member's expected prize per delivery is exactly 1.
pub fn anonymize_symmetric(
    rule: &PaymentRule,
    profile: &StrategyProfile,
    k: usize,
) -> Result<PaymentRule, PaymentError> {
    let n = profile.len();
    let p = profile.probs();
    if k == 0 || k > n {
        return Err(PaymentError::NotSymmetric(k));
    }
    let s = p[0];
    if !(s > 0.0 && s < 1.0) || p[..k].iter().any(|&x| x != s) || p[k..].iter().any(|&x| x != 0.0) {
        return Err(PaymentError::NotSymmetric(k));
    }
    let table = rule.to_table(n)?;
    let report = ic_check(&table, profile)?;
    if !report.is_ic() {
        return Err(PaymentError::NotIncentiveCompatible(report.max_violation));
    }
    let PaymentRule::Table { payments, .. } = &table else {
        unreachable!()
    };
    // Average total deliverer pay over committee subsets of each size (idle silent).
    let mut sums = vec![0.0; k + 1];
    let mut counts = vec![0usize; k + 1];
    for mask in 1u64..1 << k {
        let t = mask.count_ones() as usize;
        let paid: f64 = (0..k)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| payments[mask as usize][i])
            .sum();
        sums[t] += paid;
        counts[t] += 1;
    }
    let fbar: Vec<f64> = (1..=k).map(|t| sums[t] / counts[t] as f64).collect();
    let eq = binomial_pmf(k - 1, s);
    let v: f64 = (1..=k).map(|t| eq[t - 1] * fbar[t - 1] / t as f64).sum();
    if v <= 0.0 {
        return Err(PaymentError::NotIncentiveCompatible(1.0 - v));
    }
    Ok(PaymentRule::AnonymousSymmetric {
        k,
        f: fbar.iter().map(|x| x / v).collect(),
    })
}

/// Makes a table rule incentive compatible for `profile` by rescaling each
/// prover's payments on the outcomes where it delivers, so that its expected
/// pay for delivering exceeds that for abstaining by exactly 1.
pub fn project_to_ic(
    rule: &PaymentRule,
    profile: &StrategyProfile,
) -> Result<PaymentRule, PaymentError> {
    let n = profile.len();
    let PaymentRule::Table { payments, .. } = rule.to_table(n)? else {
        unreachable!()
    };
    let report = ic_check(rule, profile)?;
    let mut out = payments;
    for i in 0..n {
        let target = 1.0 + report.no_deliver_pay[i];
        let have = report.deliver_pay[i];
        for (mask, row) in out.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                row[i] = if have > 1e-12 {
                    row[i] * target / have
                } else {
                    target
                };
            }
        }
    }
    Ok(PaymentRule::Table { n, payments: out })
}

/// Random IC table rule for `profile`: non-negative payments, a fraction of
/// them zeroed, then projected with [`project_to_ic`].
pub fn random_ic_table<R: Rng + ?Sized>(
    profile: &StrategyProfile,
    rng: &mut R,
) -> Result<PaymentRule, PaymentError> {
    let n = profile.len();
    let zero_frac: f64 = rng.gen_range(0.0..0.6);
    let scale: f64 = rng.gen_range(0.1..5.0);
    let payments = (0..1usize << n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if rng.gen_bool(zero_frac) {
                        0.0
                    } else {
                        scale * rng.gen::<f64>()
                    }
                })
                .collect()
        })
        .collect();
    project_to_ic(&PaymentRule::Table { n, payments }, profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(bits: &[bool]) -> DeliveryVector {
        DeliveryVector::from_bools(bits)
    }

    #[test]
    fn designated_payments_example() {
        let r = make_designated_rule(1, 0.875).unwrap();
        let sole = r.payments(d(&[true, false, false]));
        assert!((sole[0] - 1.875).abs() < 1e-12);
        let both = r.payments(d(&[true, true, false]));
        assert!((both[0] - 0.875).abs() < 1e-12);
        assert!((both[1] - 1.0).abs() < 1e-12);
        assert!((both.iter().sum::<f64>() - 1.875).abs() < 1e-12);
        assert!(r
            .payments(d(&[false, true, true]))
            .iter()
            .all(|&x| x == 0.0));
        // Idle deliveries earn nothing.
        assert_eq!(r.payments(d(&[true, false, true]))[2], 0.0);
    }

    #[test]
    fn designated_k0_and_bad_s() {
        let r = make_designated_rule(0, 0.3).unwrap();
        assert_eq!(r.payments(d(&[true, false])), vec![1.0, 0.0]);
        assert_eq!(r.payments(d(&[false, true])), vec![0.0, 0.0]);
        assert!(make_designated_rule(2, 1.0).is_err());
        assert!(make_designated_rule(2, 0.0).is_err());
    }

    #[test]
    fn lottery_prizes() {
        let PaymentRule::Lottery { prize, .. } = make_lottery(2, 0.5).unwrap() else {
            panic!()
        };
        assert!((prize - 4.0 / 3.0).abs() < 1e-12);
        let PaymentRule::Lottery { prize, .. } = make_lottery(1, 0.37).unwrap() else {
            panic!()
        };
        assert!((prize - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ls1_example_values() {
        let sol = solve_ls1(2, 3, 10.0, 0.4735).unwrap();
        assert!((sol.f[0] - 12.36).abs() < 0.01);
        assert!((sol.f[1] + 15.13).abs() < 0.05);
        assert!(!sol.nonnegative);
        assert!(sol.closed_form_gap < 1e-8);
        assert!(sol.system_residual < 1e-8);
    }

    #[test]
    fn ls1_zero_at_threshold() {
        for c in [2.0, 7.0] {
            let sol = solve_ls1(1, 3, c, 0.5).unwrap();
            assert!(sol.f[1].abs() < 1e-12);
        }
        let single = solve_ls1(3, 1, 5.0, 0.2).unwrap();
        assert!(single.nonnegative);
        assert!((single.f[0] - 5.0 * 4f64.powi(3)).abs() < 1e-9);
    }

    #[test]
    fn lp1_toy_instance() {
        let sol = solve_lp1(2, 1, 4.0, 0.5, 0.0).unwrap();
        assert!((sol.t - 2.0).abs() < 1e-9);
        assert!(sol.t >= 4.0 * 0.5 - 1e-12);
        assert!(matches!(
            solve_lp1(2, 2, 4.0, 0.5, 0.0),
            Err(PaymentError::CommitteeTooSmall { .. })
        ));
    }

    #[test]
    fn implementable_designated_examples() {
        let r = implementable_designated(&ProtocolParams::unstaked(3, 4, 15.0).unwrap());
        assert_eq!(r.optimum.shape.k, 1);
        assert!((r.optimum.shape.s - 0.875).abs() < 1e-9);
        assert!((r.optimum.loss - 1.875).abs() < 1e-9);
        let q = implementable_designated(&ProtocolParams::unstaked(1, 2, 3.0).unwrap());
        assert!((q.optimum.loss - 1.5).abs() < 1e-9);
    }

    #[test]
    fn anonymize_two_player_example() {
        // Deliverer paid 2 only when alone.
        let mut payments = vec![vec![0.0; 2]; 4];
        payments[0b01][0] = 2.0;
        payments[0b10][1] = 2.0;
        let rule = PaymentRule::Table { n: 2, payments };
        let prof = StrategyProfile::new(vec![0.5, 0.5]).unwrap();
        let out = anonymize_symmetric(&rule, &prof, 2).unwrap();
        let PaymentRule::AnonymousSymmetric { f, .. } = out else {
            panic!()
        };
        assert!((f[0] - 2.0).abs() < 1e-12 && f[1].abs() < 1e-12);
    }

    #[test]
    fn table_round_trip_json() {
        let r = make_designated_rule(2, 0.3).unwrap().to_table(3).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: PaymentRule = serde_json::from_str(&text).unwrap();
        assert_eq!(r, back);
        let parsed: PaymentRule =
            serde_json::from_str(r#"{"type":"designated","k":2,"s":0.3}"#).unwrap();
        assert_eq!(parsed, make_designated_rule(2, 0.3).unwrap());
    }
}
