//! Exact worst-case loss of a payment rule, incentive-compatibility checks,
//! and the linear program over complete payment tables.
//!
//! The adversary corrupts `a` provers and fixes their deliveries before the
//! honest provers' coins are tossed. A candidate's cost is the expected total
//! payment plus `C` times the probability that nobody delivers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, LpError, LpProblem, LpStatus, Relation};
use crate::model::{
    binomial_pmf, DeliveryVector, IcReport, ModelError, ProtocolParams, StrategyProfile,
};
use crate::payment::{PaymentError, PaymentRule, Role, MAX_TABLE_PROVERS};

/// Tolerance on incentive-compatibility verdicts.
pub const IC_TOL: f64 = 1e-8;

/// Largest `n` accepted by [`inner_lp_oracle`].
pub const ORACLE_MAX_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("instance with n = {n} is too large (limit {limit})")]
    TooLarge { n: usize, limit: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Payment(#[from] Box<PaymentError>),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("oracle LP reported {0:?}; valid profiles always admit a rule")]
    OracleFailed(LpStatus),
}

impl From<PaymentError> for AdversaryError {
    fn from(e: PaymentError) -> Self {
        Self::Payment(Box::new(e))
    }
}

/// One pure adversary strategy and its expected cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackCandidate {
    /// Corrupted prover indices (sorted).
    pub corruption: Vec<usize>,
    /// Delivery decision of each corrupted prover, aligned with `corruption`.
    pub delivery: Vec<bool>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub loss: f64,
    pub argmax_corruption: Vec<usize>,
    pub argmax_delivery: Vec<bool>,
    /// Every candidate examined, when requested. Structured rules list one
    /// representative per role-class choice.
    pub candidates: Option<Vec<AttackCandidate>>,
}

/// Worst-case expected cost of `rule` when honest provers follow `profile`.
pub fn exact_loss(
    rule: &PaymentRule,
    profile: &StrategyProfile,
    params: &ProtocolParams,
) -> Result<LossReport, AdversaryError> {
    loss_impl(rule, profile, params, false)
}

/// [`exact_loss`] with the full candidate table.
pub fn exact_loss_with_candidates(
    rule: &PaymentRule,
    profile: &StrategyProfile,
    params: &ProtocolParams,
) -> Result<LossReport, AdversaryError> {
    loss_impl(rule, profile, params, true)
}

fn loss_impl(
    rule: &PaymentRule,
    profile: &StrategyProfile,
    params: &ProtocolParams,
    keep: bool,
) -> Result<LossReport, AdversaryError> {
    let n = params.n();
    profile.expect_len(n)?;
    rule.validate(n)?;
    if !rule.is_table() && uniform_within_roles(rule, profile) {
        return Ok(structured_loss(rule, profile, params, keep));
    }
    if n > MAX_TABLE_PROVERS {
        return Err(AdversaryError::TooLarge {
            n,
            limit: MAX_TABLE_PROVERS,
        });
    }
    let table = rule.to_table(n)?;
    Ok(table_loss(&table, profile, params, keep))
}

fn uniform_within_roles(rule: &PaymentRule, profile: &StrategyProfile) -> bool {
    let p = profile.probs();
    let committee = rule.committee().expect("structured rule");
    let same = |xs: &[f64]| xs.windows(2).all(|w| w[0] == w[1]);
    same(&p[committee.clone()])
        && same(&p[committee.end..])
        && (committee.start == 0 || same(&p[..committee.start]))
}

/// Probability that `count` of `probs` deliver, for every `count`.
fn poisson_binomial(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut dist = vec![1.0];
    for q in probs {
        let mut next = vec![0.0; dist.len() + 1];
        for (c, &p) in dist.iter().enumerate() {
            next[c] += p * (1.0 - q);
            next[c + 1] += p * q;
        }
        dist = next;
    }
    dist
}

fn structured_loss(
    rule: &PaymentRule,
    profile: &StrategyProfile,
    params: &ProtocolParams,
    keep: bool,
) -> LossReport {
    let n = params.n();
    let a = params.a();
    let c = params.penalty();
    let p = profile.probs();
    let committee = rule.committee().unwrap();
    let has_designate = committee.start == 1;
    let nd = usize::from(has_designate);
    let nc = committee.len();
    let ni = n - nd - nc;
    let pd = if has_designate { p[0] } else { 0.0 };
    let sc = if nc > 0 { p[committee.start] } else { 0.0 };
    let si = if ni > 0 { p[committee.end] } else { 0.0 };

    let mut best: Option<AttackCandidate> = None;
    let mut all = Vec::new();
    // Corrupting the designate is examined first so it wins ties.
    for zd in (0..=nd).rev() {
        for zc in 0..=nc.min(a - zd.min(a)) {
            if zd + zc > a || a - zd - zc > ni {
                continue;
            }
            let zi = a - zd - zc;
            let honest_committee = binomial_pmf(nc - zc, sc);
            let idle_silent = (1.0 - si).powi((ni - zi) as i32);
            let designate_choices: &[Option<bool>] = if zd == 1 {
                &[Some(false), Some(true)]
            } else {
                &[None]
            };
            for &dd in designate_choices {
                for r in 0..=zc {
                    for e in 0..=usize::from(zi > 0) {
                        let idle_deliver = e == 1;
                        let mut cost = 0.0;
                        let outcomes: &[(bool, f64)] = match (has_designate, dd) {
                            (false, _) => &[(true, 1.0)],
                            (true, Some(x)) => {
                                if x {
                                    &[(true, 1.0)]
                                } else {
                                    &[(false, 1.0)]
                                }
                            }
                            (true, None) => &[(true, pd), (false, 1.0 - pd)],
                        };
                        for &(dflag, dp) in outcomes {
                            if dp == 0.0 {
                                continue;
                            }
                            for (x, &px) in honest_committee.iter().enumerate() {
                                if px == 0.0 {
                                    continue;
                                }
                                let count = r + x;
                                let mut v = rule.role_total(n, dflag, count);
                                let designate_delivered = has_designate && dflag;
                                if !designate_delivered && count == 0 && !idle_deliver {
                                    v += c * idle_silent;
                                }
                                cost += dp * px * v;
                            }
                        }
                        let mut corruption: Vec<usize> = Vec::with_capacity(a);
                        let mut delivery = Vec::with_capacity(a);
                        if zd == 1 {
                            corruption.push(0);
                            delivery.push(dd == Some(true));
                        }
                        for j in 0..zc {
                            corruption.push(committee.start + j);
                            delivery.push(j < r);
                        }
                        for j in 0..zi {
                            corruption.push(committee.end + j);
                            delivery.push(idle_deliver);
                        }
                        let cand = AttackCandidate {
                            corruption,
                            delivery,
                            cost,
                        };
                        if best.as_ref().is_none_or(|b| cand.cost > b.cost) {
                            best = Some(cand.clone());
                        }
                        if keep {
                            all.push(cand);
                        }
                    }
                }
            }
        }
    }
    let best = best.expect("at least one corruption pattern exists");
    LossReport {
        loss: best.cost,
        argmax_corruption: best.corruption,
        argmax_delivery: best.delivery,
        candidates: keep.then_some(all),
    }
}

/// All subsets of `idx` as (mask, probability) under independent coins `p`.
fn outcome_distribution(idx: &[usize], p: &[f64]) -> Vec<(u64, f64)> {
    let mut out = vec![(0u64, 1.0)];
    for &i in idx {
        let q = p[i];
        let mut next = Vec::with_capacity(out.len() * 2);
        for &(m, pr) in &out {
            next.push((m, pr * (1.0 - q)));
            next.push((m | 1 << i, pr * q));
        }
        out = next;
    }
    out.retain(|&(_, pr)| pr > 0.0);
    out
}

/// Index sets of size `a` out of `n`, in lexicographic order.
fn combinations(n: usize, a: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..a).collect();
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..a).rev().find(|&i| cur[i] != i + n - a) else {
            return out;
        };
        cur[pos] += 1;
        for j in pos + 1..a {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn table_loss(
    table: &PaymentRule,
    profile: &StrategyProfile,
    params: &ProtocolParams,
    keep: bool,
) -> LossReport {
    let n = params.n();
    let a = params.a();
    let p = profile.probs();
    let PaymentRule::Table { payments, .. } = table else {
        unreachable!()
    };
    let mut cost: Vec<f64> = payments.iter().map(|row| row.iter().sum()).collect();
    cost[0] += params.penalty();

    let mut best: Option<AttackCandidate> = None;
    let mut all = Vec::new();
    for corrupt in combinations(n, a) {
        let honest: Vec<usize> = (0..n).filter(|i| !corrupt.contains(i)).collect();
        let dist = outcome_distribution(&honest, p);
        for da in 0u64..1 << a {
            let mut mask_a = 0u64;
            for (j, &i) in corrupt.iter().enumerate() {
                if da >> j & 1 == 1 {
                    mask_a |= 1 << i;
                }
            }
            let v: f64 = dist
                .iter()
                .map(|&(m, pr)| pr * cost[(m | mask_a) as usize])
                .sum();
            if best.as_ref().is_none_or(|b| v > b.cost) || keep {
                let cand = AttackCandidate {
                    corruption: corrupt.clone(),
                    delivery: (0..a).map(|j| da >> j & 1 == 1).collect(),
                    cost: v,
                };
                if best.as_ref().is_none_or(|b| v > b.cost) {
                    best = Some(cand.clone());
                }
                if keep {
                    all.push(cand);
                }
            }
        }
    }
    let best = best.expect("at least one corruption set exists");
    LossReport {
        loss: best.cost,
        argmax_corruption: best.corruption,
        argmax_delivery: best.delivery,
        candidates: keep.then_some(all),
    }
}

/// Expected cost of one pure attack: `corrupt` provers deliver per `deliver`,
/// the rest follow `profile`. Requires `n <= 14`.
pub fn attack_cost(
    rule: &PaymentRule,
    profile: &StrategyProfile,
    params: &ProtocolParams,
    corrupt: &[usize],
    deliver: &[bool],
) -> Result<f64, AdversaryError> {
    let n = params.n();
    profile.expect_len(n)?;
    if n > MAX_TABLE_PROVERS {
        return Err(AdversaryError::TooLarge {
            n,
            limit: MAX_TABLE_PROVERS,
        });
    }
    let honest: Vec<usize> = (0..n).filter(|i| !corrupt.contains(i)).collect();
    let mut mask_a = 0u64;
    for (&i, &b) in corrupt.iter().zip(deliver) {
        if b {
            mask_a |= 1 << i;
        }
    }
    Ok(outcome_distribution(&honest, profile.probs())
        .into_iter()
        .map(|(m, pr)| {
            let d = DeliveryVector::from_mask(m | mask_a, n);
            pr * (rule.total(d) + if d.any() { 0.0 } else { params.penalty() })
        })
        .sum())
}

/// Expected cost when every prover follows `profile`. Requires `n <= 14`.
pub fn honest_cost(
    rule: &PaymentRule,
    profile: &StrategyProfile,
    params: &ProtocolParams,
) -> Result<f64, AdversaryError> {
    attack_cost(rule, profile, params, &[], &[])
}

/// Expected payments for delivering and abstaining, per prover, with verdicts.
pub fn ic_check(rule: &PaymentRule, profile: &StrategyProfile) -> Result<IcReport, AdversaryError> {
    let n = profile.len();
    rule.validate(n)?;
    let p = profile.probs();
    let (deliver_pay, no_deliver_pay): (Vec<f64>, Vec<f64>) = if rule.is_table() {
        let PaymentRule::Table { payments, .. } = rule else {
            unreachable!()
        };
        (0..n)
            .map(|i| {
                let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let mut dp = 0.0;
                let mut np = 0.0;
                for (m, pr) in outcome_distribution(&others, p) {
                    dp += pr * payments[(m | 1 << i) as usize][i];
                    np += pr * payments[m as usize][i];
                }
                (dp, np)
            })
            .unzip()
    } else {
        structured_ic(rule, p)
    };
    let mut satisfied = Vec::with_capacity(n);
    let mut max_violation: f64 = 0.0;
    for i in 0..n {
        let margin = deliver_pay[i] - no_deliver_pay[i];
        let mut v: f64 = 0.0;
        if p[i] > 0.0 {
            v = v.max(1.0 - margin);
        }
        if p[i] < 1.0 {
            v = v.max(margin - 1.0);
        }
        max_violation = max_violation.max(v);
        satisfied.push(v <= IC_TOL);
    }
    Ok(IcReport {
        deliver_pay,
        no_deliver_pay,
        satisfied,
        max_violation,
    })
}

fn structured_ic(rule: &PaymentRule, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = p.len();
    let committee = rule.committee().unwrap();
    let has_designate = committee.start == 1;
    (0..n)
        .map(|i| {
            let role = rule.role(i).unwrap();
            let others = poisson_binomial(committee.clone().filter(|&j| j != i).map(|j| p[j]));
            let designate: &[(bool, f64)] =
                if !has_designate || role == Role::Designate || p[0] == 1.0 {
                    &[(true, 1.0)]
                } else {
                    &[(true, p[0]), (false, 1.0 - p[0])]
                };
            let pay = |own: bool| -> f64 {
                let mut e = 0.0;
                for &(dflag, dp) in designate {
                    let dflag = if role == Role::Designate { own } else { dflag };
                    for (c, &pc) in others.iter().enumerate() {
                        let count = c + usize::from(own && role == Role::Committee);
                        e += dp * pc * rule.role_payment(role, own, dflag, count);
                    }
                }
                e
            };
            (pay(true), pay(false))
        })
        .unzip()
}

/// Optimal value and rule of the LP over complete payment tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub t: f64,
    pub rule: PaymentRule,
}

/// Minimum, over all payment tables implementing `profile` (payments at
/// least `-B/n`), of the worst-case attack cost.
pub fn inner_lp_oracle(
    profile: &StrategyProfile,
    params: &ProtocolParams,
) -> Result<OracleSolution, AdversaryError> {
    let n = params.n();
    profile.expect_len(n)?;
    if n > ORACLE_MAX_N {
        return Err(AdversaryError::TooLarge {
            n,
            limit: ORACLE_MAX_N,
        });
    }
    let a = params.a();
    let p = profile.probs();
    let outcomes = 1usize << n;
    let tv = n * outcomes;
    let var = |mask: u64, i: usize| mask as usize * n + i;
    let mut objective = vec![0.0; tv + 1];
    objective[tv] = 1.0;
    let mut problem = LpProblem::minimize(objective);
    let lb = -params.stake_per_prover();
    for v in 0..tv {
        problem.set_lower_bound(v, lb);
    }
    problem.set_lower_bound(tv, f64::NEG_INFINITY);

    for corrupt in combinations(n, a) {
        let honest: Vec<usize> = (0..n).filter(|i| !corrupt.contains(i)).collect();
        let dist = outcome_distribution(&honest, p);
        for da in 0u64..1 << a {
            let mut mask_a = 0u64;
            for (j, &i) in corrupt.iter().enumerate() {
                if da >> j & 1 == 1 {
                    mask_a |= 1 << i;
                }
            }
            let mut row = vec![0.0; tv + 1];
            let mut rhs = 0.0;
            for &(m, pr) in &dist {
                let mask = m | mask_a;
                for i in 0..n {
                    row[var(mask, i)] += pr;
                }
                if mask == 0 {
                    rhs -= params.penalty() * pr;
                }
            }
            row[tv] = -1.0;
            problem.add(row, Relation::Le, rhs);
        }
    }
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mut row = vec![0.0; tv + 1];
        for (m, pr) in outcome_distribution(&others, p) {
            row[var(m | 1 << i, i)] += pr;
            row[var(m, i)] -= pr;
        }
        if p[i] > 0.0 {
            problem.add(row.clone(), Relation::Ge, 1.0);
        }
        if p[i] < 1.0 {
            problem.add(row, Relation::Le, 1.0);
        }
    }
    let sol = lp::solve(&problem)?;
    if sol.status != LpStatus::Optimal {
        return Err(AdversaryError::OracleFailed(sol.status));
    }
    let payments = (0..outcomes)
        .map(|m| (0..n).map(|i| sol.x[var(m as u64, i)]).collect())
        .collect();
    Ok(OracleSolution {
        t: sol.x[tv],
        rule: PaymentRule::Table { n, payments },
    })
}
