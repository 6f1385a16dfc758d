//! Protocol parameters, strategy profiles, delivery outcomes and equilibrium shapes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numeric tolerance used for internal consistency checks.
pub const TOL: f64 = 1e-9;

/// Tolerance for comparing against published three-decimal values.
pub const PUBLISHED_TOL: f64 = 5e-3;

/// Largest prover count representable by a [`DeliveryVector`], and so the
/// largest `n` for which payment rules can be evaluated.
pub const MAX_PROVERS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("at least one honest prover is required (h = {0})")]
    NoHonest(usize),
    #[error("honest count h = {h} exceeds prover count n = {n}")]
    TooManyHonest { h: usize, n: usize },
    #[error("penalty C = {0} must be finite and greater than 1")]
    PenaltyTooSmall(f64),
    #[error("stake B = {0} must be finite and non-negative")]
    InvalidStake(f64),
    #[error("probability s[{index}] = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("profile is not sorted in non-increasing order at index {0}")]
    NotCanonical(usize),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("committee size {k} does not fit in {n} provers")]
    CommitteeTooLarge { k: usize, n: usize },
    #[error("fraction tau = {0} is outside (0, 1]")]
    InvalidFraction(f64),
}

/// Model instance: `h` honest provers out of `n`, penalty `C` and aggregate stake `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    h: usize,
    n: usize,
    penalty: f64,
    stake: f64,
}

impl ProtocolParams {
    pub fn new(h: usize, n: usize, penalty: f64, stake: f64) -> Result<Self, ModelError> {
        if h == 0 {
            return Err(ModelError::NoHonest(h));
        }
        if h > n {
            return Err(ModelError::TooManyHonest { h, n });
        }
        if !penalty.is_finite() || penalty <= 1.0 {
            return Err(ModelError::PenaltyTooSmall(penalty));
        }
        if !stake.is_finite() || stake < 0.0 {
            return Err(ModelError::InvalidStake(stake));
        }
        Ok(Self {
            h,
            n,
            penalty,
            stake,
        })
    }

    /// Parameters without stake.
    pub fn unstaked(h: usize, n: usize, penalty: f64) -> Result<Self, ModelError> {
        Self::new(h, n, penalty, 0.0)
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of corrupted provers, `n - h`.
    pub fn a(&self) -> usize {
        self.n - self.h
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn stake(&self) -> f64 {
        self.stake
    }

    /// Honest fraction `h / n`.
    pub fn tau(&self) -> f64 {
        self.h as f64 / self.n as f64
    }

    /// Stake slashed from each prover, `B / n`.
    pub fn stake_per_prover(&self) -> f64 {
        self.stake / self.n as f64
    }

    pub fn with_penalty(&self, penalty: f64) -> Result<Self, ModelError> {
        Self::new(self.h, self.n, penalty, self.stake)
    }

    pub fn with_stake(&self, stake: f64) -> Result<Self, ModelError> {
        Self::new(self.h, self.n, self.penalty, stake)
    }
}

/// Per-prover delivery probabilities in canonical (non-increasing) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StrategyProfile {
    s: Vec<f64>,
}

impl StrategyProfile {
    /// Builds a profile, rejecting out-of-range or unsorted entries.
    pub fn new(s: Vec<f64>) -> Result<Self, ModelError> {
        check_probabilities(&s)?;
        if let Some(i) = s.windows(2).position(|w| w[0] < w[1]) {
            return Err(ModelError::NotCanonical(i + 1));
        }
        Ok(Self { s })
    }

    /// Sorts `raw` into canonical order. Returns the profile and, for each
    /// canonical position, the index of the entry in `raw` it came from.
    pub fn canonicalize(raw: &[f64]) -> Result<(Self, Vec<usize>), ModelError> {
        check_probabilities(raw)?;
        let mut order: Vec<usize> = (0..raw.len()).collect();
        // Stable sort keeps equal entries in their original relative order.
        order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));
        let s = order.iter().map(|&i| raw[i]).collect();
        Ok((Self { s }, order))
    }

    pub fn probs(&self) -> &[f64] {
        &self.s
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.s[i]
    }

    /// Checks the profile has exactly `n` entries.
    pub fn expect_len(&self, n: usize) -> Result<(), ModelError> {
        if self.s.len() != n {
            return Err(ModelError::LengthMismatch {
                expected: n,
                got: self.s.len(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for StrategyProfile {
    type Error = ModelError;

    fn try_from(s: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<StrategyProfile> for Vec<f64> {
    fn from(p: StrategyProfile) -> Self {
        p.s
    }
}

fn check_probabilities(s: &[f64]) -> Result<(), ModelError> {
    for (index, &value) in s.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(ModelError::ProbabilityOutOfRange { index, value });
        }
    }
    Ok(())
}

/// Delivery outcome over `n <= 64` provers, stored as a bit mask (bit `i` = prover `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DeliveryVector {
    bits: u64,
    n: usize,
}

impl DeliveryVector {
    pub fn from_mask(bits: u64, n: usize) -> Self {
        assert!(n <= MAX_PROVERS, "at most {MAX_PROVERS} provers");
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Self {
            bits: bits & mask,
            n,
        }
    }

    pub fn from_bools(d: &[bool]) -> Self {
        let bits = d
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| if b { acc | (1 << i) } else { acc });
        Self::from_mask(bits, d.len())
    }

    pub fn none(n: usize) -> Self {
        Self::from_mask(0, n)
    }

    pub fn mask(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    /// Number of provers that delivered.
    pub fn count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// Number of deliveries among provers `lo..hi`.
    pub fn count_range(&self, lo: usize, hi: usize) -> usize {
        (lo..hi.min(self.n)).filter(|&i| self.get(i)).count()
    }

    pub fn any(&self) -> bool {
        self.bits != 0
    }

    pub fn with(&self, i: usize, delivered: bool) -> Self {
        let bits = if delivered {
            self.bits | 1 << i
        } else {
            self.bits & !(1 << i)
        };
        Self { bits, n: self.n }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.get(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    /// One prover delivers with certainty, `k` more mix at `s`.
    Designated,
    /// `k` provers mix at `s`.
    Symmetric,
}

/// A structured profile: `[1, s x k, 0...]` (designated) or `[s x k, 0...]` (symmetric).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumShape {
    pub kind: ShapeKind,
    /// Size of the mixing committee.
    pub k: usize,
    pub s: f64,
    pub n: usize,
}

impl EquilibriumShape {
    pub fn designated(k: usize, s: f64, n: usize) -> Result<Self, ModelError> {
        Self::build(ShapeKind::Designated, k, s, n)
    }

    pub fn symmetric(k: usize, s: f64, n: usize) -> Result<Self, ModelError> {
        Self::build(ShapeKind::Symmetric, k, s, n)
    }

    fn build(kind: ShapeKind, k: usize, s: f64, n: usize) -> Result<Self, ModelError> {
        let used = k + usize::from(kind == ShapeKind::Designated);
        if used > n {
            return Err(ModelError::CommitteeTooLarge { k: used, n });
        }
        check_probabilities(&[s])?;
        Ok(Self { kind, k, s, n })
    }

    /// Number of provers with positive delivery probability (designate included).
    pub fn support(&self) -> usize {
        match self.kind {
            ShapeKind::Designated => self.k + 1,
            ShapeKind::Symmetric => self.k,
        }
    }

    pub fn expand(&self) -> StrategyProfile {
        let mut s = Vec::with_capacity(self.n);
        if self.kind == ShapeKind::Designated {
            s.push(1.0);
        }
        s.extend(std::iter::repeat_n(self.s, self.k));
        s.resize(self.n, 0.0);
        StrategyProfile { s }
    }

    /// Recognises a profile of one of the two shapes, comparing entries within `tol`.
    pub fn classify(profile: &StrategyProfile, tol: f64) -> Option<Self> {
        let p = profile.probs();
        let n = p.len();
        let support = p.iter().take_while(|&&x| x > tol).count();
        if p[support..].iter().any(|&x| x > tol) {
            return None;
        }
        if support == 0 {
            return Some(Self {
                kind: ShapeKind::Symmetric,
                k: 0,
                s: 0.0,
                n,
            });
        }
        let uniform = |xs: &[f64]| xs.iter().all(|&x| (x - xs[0]).abs() <= tol);
        if p[0] >= 1.0 - tol && support >= 1 && uniform(&p[1..support]) {
            let k = support - 1;
            let s = if k == 0 { 0.0 } else { p[1] };
            if k == 0 || s < 1.0 - tol {
                return Some(Self {
                    kind: ShapeKind::Designated,
                    k,
                    s,
                    n,
                });
            }
        }
        if uniform(&p[..support]) {
            return Some(Self {
                kind: ShapeKind::Symmetric,
                k: support,
                s: p[0],
                n,
            });
        }
        None
    }
}

/// Expected payments per prover for delivering and not delivering, with IC verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcReport {
    pub deliver_pay: Vec<f64>,
    pub no_deliver_pay: Vec<f64>,
    /// Per prover: the prescribed mix is a best response within tolerance.
    pub satisfied: Vec<bool>,
    /// Largest violation of a required inequality (0 when all hold exactly).
    pub max_violation: f64,
}

impl IcReport {
    pub fn is_ic(&self) -> bool {
        self.satisfied.iter().all(|&b| b)
    }
}

/// Binomial coefficient as a float, by the multiplicative recurrence.
pub fn binomial_coefficient(m: usize, x: usize) -> f64 {
    if x > m {
        return 0.0;
    }
    let x = x.min(m - x);
    let mut c = 1.0;
    for j in 0..x {
        c = c * (m - j) as f64 / (j + 1) as f64;
    }
    c
}

/// Probability mass function of `Bin(m, s)` at `0..=m`.
pub fn binomial_pmf(m: usize, s: f64) -> Vec<f64> {
    let mut coeff = 1.0;
    let mut pmf = Vec::with_capacity(m + 1);
    for x in 0..=m {
        pmf.push(coeff * s.powi(x as i32) * (1.0 - s).powi((m - x) as i32));
        coeff = coeff * (m - x) as f64 / (x + 1) as f64;
    }
    pmf
}
