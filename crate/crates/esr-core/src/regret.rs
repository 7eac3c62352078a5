//! Loss functions (MSE, ESR) with analytic gradients with respect to the
//! prediction vector, and the hard/soft regret metrics.
//!
//! Gradients are taken with respect to predictions, not parameters; the
//! training loop composes them with [`crate::net::MlpModel::backward`]. The
//! ESR summand is evaluated through a branch form of the logistic so that
//! `k * u` in the hundreds of thousands neither overflows nor produces NaN.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{CounterfactualExample, Dataset};
use crate::learners::Policy;
use crate::pairing::PairedIndex;

/// Numerically stable `1 / (1 + exp(-z))`: the exponential argument is never
/// positive, so large `|z|` underflows to exactly 0 or saturates to 1.
pub fn stable_logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Smoothness parameter of the soft-regret sigmoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsrConfig {
    pub k: f64,
}

impl EsrConfig {
    pub fn new(k: f64) -> Self {
        Self { k }
    }

    /// `k = n^(1/4) * ln n`, the schedule under which soft regret tracks
    /// hard regret asymptotically.
    pub fn scaled_schedule(n: usize) -> Self {
        let nf = n as f64;
        Self {
            k: libm::pow(nf, 0.25) * libm::log(nf),
        }
    }
}

impl Default for EsrConfig {
    /// Benchmark default.
    fn default() -> Self {
        Self { k: 25.0 }
    }
}

/// One summand of the ESR loss: outcome gap `d = |y_i - y_p|`, its sign
/// `s = sgn(y_i - y_p)`, and the prediction margin `u = pred_i - pred_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub d: f64,
    pub s: i8,
    pub u: f64,
}

impl PairTerm {
    pub fn from_outcomes(y_i: f64, y_p: f64, u: f64) -> Self {
        let diff = y_i - y_p;
        Self {
            d: diff.abs(),
            s: if diff > 0.0 {
                1
            } else if diff < 0.0 {
                -1
            } else {
                0
            },
            u,
        }
    }
}

/// `d / (1 + exp(k * s * u))`, evaluated stably.
pub fn esr_pair_term(t: &PairTerm, cfg: &EsrConfig) -> f64 {
    t.d * stable_logistic(-cfg.k * t.s as f64 * t.u)
}

/// Derivative of [`esr_pair_term`] with respect to `u`.
pub fn esr_pair_term_grad_u(t: &PairTerm, cfg: &EsrConfig) -> f64 {
    let z = cfg.k * t.s as f64 * t.u;
    // d/du [d * sigma(-z)] = -d * k * s * sigma(z) * sigma(-z)
    -t.d * cfg.k * t.s as f64 * stable_logistic(z) * stable_logistic(-z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossError {
    EmptyInput,
    LengthMismatch,
    /// A partner index is out of range or the pairing length differs from
    /// the dataset.
    InvalidPairs,
}

impl fmt::Display for LossError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossError::EmptyInput => write!(f, "loss over empty input"),
            LossError::LengthMismatch => write!(f, "targets and predictions differ in length"),
            LossError::InvalidPairs => write!(f, "pairing does not match dataset"),
        }
    }
}

impl core::error::Error for LossError {}

/// Mean squared error and its gradient `2 (pred - y) / n`.
pub fn mse_loss(targets: &[f64], preds: &[f64]) -> Result<(f64, Vec<f64>), LossError> {
    if targets.len() != preds.len() {
        return Err(LossError::LengthMismatch);
    }
    if targets.is_empty() {
        return Err(LossError::EmptyInput);
    }
    let n = targets.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(preds.len());
    for (&y, &p) in targets.iter().zip(preds) {
        let r = p - y;
        loss += r * r;
        grad.push(2.0 * r / n);
    }
    Ok((loss / n, grad))
}

/// ESR loss over a paired dataset and its gradient with respect to `preds`.
///
/// The sum runs over every example `i` with partner `p = pairs.partner(i)`;
/// each term's `u`-gradient lands positively on `preds[i]` and negatively on
/// `preds[p]`, accumulated over all terms an example appears in.
pub fn esr_loss(
    ds: &Dataset,
    pairs: &PairedIndex,
    preds: &[f64],
    cfg: &EsrConfig,
) -> Result<(f64, Vec<f64>), LossError> {
    if ds.is_empty() {
        return Err(LossError::EmptyInput);
    }
    if preds.len() != ds.len() {
        return Err(LossError::LengthMismatch);
    }
    if pairs.len() != ds.len() || pairs.as_slice().iter().any(|&p| p >= ds.len()) {
        return Err(LossError::InvalidPairs);
    }
    let n = ds.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; preds.len()];
    for i in 0..ds.len() {
        let p = pairs.partner(i);
        let term = PairTerm::from_outcomes(
            ds.examples[i].outcome,
            ds.examples[p].outcome,
            preds[i] - preds[p],
        );
        loss += esr_pair_term(&term, cfg);
        let g = esr_pair_term_grad_u(&term, cfg) / n;
        grad[i] += g;
        grad[p] -= g;
    }
    Ok((loss / n, grad))
}

/// Mean realized regret of a policy's decisions on counterfactual-complete
/// data: `mean(max(y0, y1) - y(chosen))`.
pub fn hard_regret_paired(cfs: &[CounterfactualExample], policy: &Policy) -> f64 {
    debug_assert!(!cfs.is_empty());
    let total: f64 = cfs
        .iter()
        .map(|cf| cf.best_outcome() - cf.outcome(policy.decide(&cf.context)))
        .sum();
    total / cfs.len() as f64
}

/// Soft regret: the indicator of a wrong decision replaced by a logistic in
/// the policy's prediction margin `f(1, w) - f(0, w)`.
pub fn soft_regret_paired(
    cfs: &[CounterfactualExample],
    policy: &Policy,
    cfg: &EsrConfig,
) -> f64 {
    debug_assert!(!cfs.is_empty());
    let total: f64 = cfs
        .iter()
        .map(|cf| {
            let term = PairTerm::from_outcomes(cf.y1, cf.y0, policy.margin(&cf.context));
            esr_pair_term(&term, cfg)
        })
        .sum();
    total / cfs.len() as f64
}
