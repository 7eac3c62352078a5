//! Policy evaluation: the matching off-policy value estimator for uniformly
//! logged data, exact regret on counterfactual-complete data, and
//! replication statistics with normal-approximation confidence intervals.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{CounterfactualExample, Dataset};
use crate::learners::Policy;
use crate::regret::hard_regret_paired;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalError {
    /// No log entry matched the policy's decision; the ratio estimator has a
    /// zero denominator and no defined value.
    NoMatchingLogEntries,
    /// Confidence intervals need at least two replication values.
    TooFewValues,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NoMatchingLogEntries => {
                write!(f, "off-policy value undefined: no log entry matches the policy")
            }
            EvalError::TooFewValues => write!(f, "need at least 2 values for an interval"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Mean outcome over log entries whose logged action equals the policy's
/// decision. Consistent for the policy value when actions were logged
/// uniformly at random (the caller's responsibility).
pub fn offpolicy_value(policy: &Policy, logs: &Dataset) -> Result<f64, EvalError> {
    let mut matched = 0usize;
    let mut total = 0.0;
    for ex in logs.iter() {
        if policy.decide(&ex.context) == ex.action {
            matched += 1;
            total += ex.outcome;
        }
    }
    if matched == 0 {
        return Err(EvalError::NoMatchingLogEntries);
    }
    Ok(total / matched as f64)
}

/// Fraction of log entries whose action agrees with the policy. Under
/// uniform logging this concentrates at 1/2 for any deterministic policy.
pub fn match_rate(policy: &Policy, logs: &Dataset) -> f64 {
    debug_assert!(!logs.is_empty());
    let matched = logs
        .iter()
        .filter(|ex| policy.decide(&ex.context) == ex.action)
        .count();
    matched as f64 / logs.len() as f64
}

/// Exact mean regret of the policy's decisions; see
/// [`crate::regret::hard_regret_paired`].
pub fn regret_report(policy: &Policy, cfs: &[CounterfactualExample]) -> f64 {
    hard_regret_paired(cfs, policy)
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// |relative error| < 1.2e-9).
fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inverse_normal_cdf(1.0 - p)
    }
}

/// Normal-approximation interval: `mean +/- z * s / sqrt(R)` with the
/// two-sided quantile `z` for the given level (`z = 0` at level 0).
pub fn confidence_interval(values: &[f64], level: f64) -> Result<(f64, f64), EvalError> {
    if values.len() < 2 {
        return Err(EvalError::TooFewValues);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let z = if level <= 0.0 {
        0.0
    } else {
        inverse_normal_cdf(0.5 + level / 2.0)
    };
    let half = z * libm::sqrt(var / n);
    Ok((mean - half, mean + half))
}

/// One metric across replications, with its mean and 95% interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub metric: String,
    pub values: Vec<f64>,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl EvalReport {
    pub fn from_values(metric: String, values: Vec<f64>, level: f64) -> Result<Self, EvalError> {
        let (ci_low, ci_high) = confidence_interval(&values, level)?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self {
            metric,
            values,
            mean,
            ci_low,
            ci_high,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{BinaryAction, Context, LabeledExample};
    use crate::learners::Policy;
    use crate::net::{Activation, LayerParams, MlpModel, MlpSpec};
    use crate::SeededRng;
    use alloc::string::ToString;
    use alloc::vec;

    /// Policy deciding `1 { w > 0 }` via a linear single model.
    fn sign_policy() -> Policy {
        let spec = MlpSpec {
            input_dim: 2,
            hidden: vec![],
            hidden_activation: Activation::Relu,
            output_activation: Activation::Identity,
        };
        Policy::single_model(
            MlpModel::from_parts(
                spec,
                vec![LayerParams {
                    weights: vec![1.0, 0.0],
                    biases: vec![0.0],
                }],
            )
            .unwrap(),
        )
    }

    fn log(w: f64, action: usize, y: f64) -> LabeledExample {
        LabeledExample {
            context: Context::new(vec![w]),
            action: BinaryAction::from_index(action).unwrap(),
            outcome: y,
        }
    }

    #[test]
    fn offpolicy_value_is_mean_of_matches() {
        // sign_policy always picks action 1; entries with action 1 have
        // outcomes 1 and 0, entries with action 0 are ignored
        let logs = Dataset::from_examples(
            1,
            vec![log(0.1, 1, 1.0), log(0.2, 1, 0.0), log(0.3, 0, 1.0)],
        );
        assert_eq!(offpolicy_value(&sign_policy(), &logs).unwrap(), 0.5);
    }

    #[test]
    fn offpolicy_value_all_matched_is_overall_mean() {
        let logs = Dataset::from_examples(1, vec![log(0.1, 1, 2.0), log(0.2, 1, 4.0)]);
        assert_eq!(offpolicy_value(&sign_policy(), &logs).unwrap(), 3.0);
    }

    #[test]
    fn offpolicy_value_no_matches_is_an_error() {
        let logs = Dataset::from_examples(1, vec![log(0.1, 0, 2.0)]);
        assert_eq!(
            offpolicy_value(&sign_policy(), &logs).unwrap_err(),
            EvalError::NoMatchingLogEntries
        );
    }

    #[test]
    fn offpolicy_value_invariant_under_permutation() {
        let mut rng = SeededRng::new(3);
        let entries: Vec<LabeledExample> = (0..200)
            .map(|_| log(rng.uniform(-1.0, 1.0), rng.below(2), rng.next_f64()))
            .collect();
        let forward = Dataset::from_examples(1, entries.clone());
        let mut reversed_entries = entries;
        reversed_entries.reverse();
        let reversed = Dataset::from_examples(1, reversed_entries);
        let p = sign_policy();
        let a = offpolicy_value(&p, &forward).unwrap();
        let b = offpolicy_value(&p, &reversed).unwrap();
        // equal up to summation order
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn match_rate_extremes() {
        let p = sign_policy(); // decides 1 for any logged w > 0
        let agree = Dataset::from_examples(1, vec![log(0.5, 1, 0.0), log(0.9, 1, 0.0)]);
        assert_eq!(match_rate(&p, &agree), 1.0);
        let disagree = Dataset::from_examples(1, vec![log(0.5, 0, 0.0), log(0.9, 0, 0.0)]);
        assert_eq!(match_rate(&p, &disagree), 0.0);
    }

    #[test]
    fn quantile_value_for_95() {
        let z = inverse_normal_cdf(0.975);
        assert!((z - 1.959964).abs() <= 1e-6, "z {z}");
    }

    #[test]
    fn ci_constant_vector_collapses() {
        let (lo, hi) = confidence_interval(&[3.0, 3.0, 3.0], 0.95).unwrap();
        assert_eq!((lo, hi), (3.0, 3.0));
    }

    #[test]
    fn ci_level_zero_collapses_to_mean() {
        let (lo, hi) = confidence_interval(&[1.0, 2.0, 3.0], 0.0).unwrap();
        assert_eq!((lo, hi), (2.0, 2.0));
    }

    #[test]
    fn ci_halfwidth_closed_form() {
        // 500 zeros and 500 ones: s = 0.5 (to 4 digits), half-width
        // 1.959964 * 0.5 / sqrt(1000)
        let mut values = vec![0.0; 500];
        values.extend(vec![1.0; 500]);
        let (lo, hi) = confidence_interval(&values, 0.95).unwrap();
        let half = (hi - lo) / 2.0;
        assert!((half - 0.0310).abs() <= 2e-4, "half {half}");
    }

    #[test]
    fn ci_rejects_single_value() {
        assert_eq!(
            confidence_interval(&[1.0], 0.95).unwrap_err(),
            EvalError::TooFewValues
        );
    }

    #[test]
    fn ci_width_scales_inverse_sqrt_r() {
        let mut rng = SeededRng::new(8);
        let mut width = |r: usize| {
            let values: Vec<f64> = (0..r).map(|_| rng.normal(0.0, 1.0)).collect();
            let (lo, hi) = confidence_interval(&values, 0.95).unwrap();
            hi - lo
        };
        let w100 = width(100);
        let w400 = width(400);
        let w1600 = width(1600);
        assert!((w100 / w400 - 2.0).abs() <= 0.5, "{}", w100 / w400);
        assert!((w400 / w1600 - 2.0).abs() <= 0.3, "{}", w400 / w1600);
    }

    #[test]
    fn report_orders_bounds_around_mean() {
        let report =
            EvalReport::from_values("regret".to_string(), vec![0.1, 0.4, 0.2, 0.3], 0.95).unwrap();
        assert!(report.ci_low <= report.mean && report.mean <= report.ci_high);
    }
}
