//! Procurement of proofs from a prover market under liveness faults.
//!
//! A requester pays provers for delivering a proof; `n - h` provers may be
//! corrupted and coordinate to maximise the requester's expected cost, which
//! includes a penalty `C` when nobody delivers. This crate computes lower
//! bounds on that cost, constructs payment rules that attain them, evaluates
//! the exact adversarial loss of any rule, and maps the regimes in which each
//! equilibrium shape is optimal.

pub mod adversary;
pub mod analysis;
pub mod lower_bound;
pub mod lp;
pub mod model;
pub mod numerics;
pub mod payment;
