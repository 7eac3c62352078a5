//! Synthetic generators for desk-scale benchmarks.
//!
//! Four regimes: a level-shift construction where MSE training gets
//! distracted by a context-only additive term, its perfectly paired variant
//! (both actions observed per context), a log-linear outcome benchmark
//! analog, and uniformly logged click simulations with a computable true
//! policy value.
//!
//! Rows are generated independently from per-row child seeds, so a
//! generator's output is a pure function of its config.

use alloc::vec::Vec;
use core::fmt;

use crate::data::{BinaryAction, Context, CounterfactualExample, Dataset, LabeledExample};
use crate::learners::Policy;
use crate::regret::stable_logistic;
use crate::rng::SeededRng;

/// Shared generator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    pub d: usize,
    pub noise_sd: f64,
    /// Level-shift amplitude `A` in `a_w = A sin(omega * sum_j w_j)`.
    pub amplitude: f64,
    /// Level-shift frequency `omega`.
    pub frequency: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            d: 5,
            noise_sd: 0.1,
            amplitude: 0.0,
            frequency: 1.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    fn validate(&self) -> Result<(), GenError> {
        if self.n == 0 {
            return Err(GenError::Invalid("n must be >= 1"));
        }
        if self.d == 0 {
            return Err(GenError::Invalid("d must be >= 1"));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(GenError::Invalid("noise_sd must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenError {
    Invalid(&'static str),
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::Invalid(reason) => write!(f, "invalid generator config: {reason}"),
        }
    }
}

impl core::error::Error for GenError {}

/// A generated instance: the logged dataset, the noiseless counterfactual
/// means, and the per-arm noisy potential-outcome draws (the logged outcome
/// equals the draw of the logged arm).
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualData {
    pub dataset: Dataset,
    /// Noiseless `(mean0, mean1)` per context; the default regret target.
    pub counterfactuals: Vec<CounterfactualExample>,
    /// Noisy `(y0, y1)` draws per context.
    pub draws: Vec<[f64; 2]>,
}

/// One row of the level-shift construction.
struct LevelShiftRow {
    context: Vec<f64>,
    mean0: f64,
    mean1: f64,
    y0: f64,
    y1: f64,
    action: BinaryAction,
}

fn level_shift_row(cfg: &GenConfig, row_rng: &mut SeededRng) -> LevelShiftRow {
    let context: Vec<f64> = (0..cfg.d).map(|_| row_rng.uniform(-1.0, 1.0)).collect();
    let eps0 = row_rng.standard_normal() * cfg.noise_sd;
    let eps1 = row_rng.standard_normal() * cfg.noise_sd;
    let action = BinaryAction::from_index(row_rng.below(2)).unwrap();
    let tau = context[0];
    let level = cfg.amplitude * libm::sin(cfg.frequency * context.iter().sum::<f64>());
    LevelShiftRow {
        context,
        mean0: level,
        mean1: level + tau,
        y0: level + eps0,
        y1: level + tau + eps1,
        action,
    }
}

/// Level-shift generator: `w ~ U[-1,1]^d`, effect `tau(w) = w_1`, additive
/// level `A sin(omega sum_j w_j)`, uniform random logged action.
pub fn gen_level_shift(cfg: &GenConfig) -> Result<CounterfactualData, GenError> {
    cfg.validate()?;
    let root = SeededRng::new(cfg.seed);
    let mut examples = Vec::with_capacity(cfg.n);
    let mut counterfactuals = Vec::with_capacity(cfg.n);
    let mut draws = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let row = level_shift_row(cfg, &mut root.child(i as u64));
        let outcome = match row.action {
            BinaryAction::Zero => row.y0,
            BinaryAction::One => row.y1,
        };
        examples.push(LabeledExample {
            context: Context::new(row.context.clone()),
            action: row.action,
            outcome,
        });
        counterfactuals.push(CounterfactualExample {
            context: Context::new(row.context),
            y0: row.mean0,
            y1: row.mean1,
        });
        draws.push([row.y0, row.y1]);
    }
    Ok(CounterfactualData {
        dataset: Dataset::from_examples(cfg.d, examples),
        counterfactuals,
        draws,
    })
}

/// Perfectly paired level-shift data: each context is emitted twice, once
/// per action, so cross-action pairing distance is 0 by construction. The
/// dataset has `2n` rows; rows `2i` and `2i + 1` share context `i`.
pub fn gen_paired(cfg: &GenConfig) -> Result<CounterfactualData, GenError> {
    cfg.validate()?;
    let root = SeededRng::new(cfg.seed);
    let mut examples = Vec::with_capacity(2 * cfg.n);
    let mut counterfactuals = Vec::with_capacity(cfg.n);
    let mut draws = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let row = level_shift_row(cfg, &mut root.child(i as u64));
        examples.push(LabeledExample {
            context: Context::new(row.context.clone()),
            action: BinaryAction::Zero,
            outcome: row.y0,
        });
        examples.push(LabeledExample {
            context: Context::new(row.context.clone()),
            action: BinaryAction::One,
            outcome: row.y1,
        });
        counterfactuals.push(CounterfactualExample {
            context: Context::new(row.context),
            y0: row.mean0,
            y1: row.mean1,
        });
        draws.push([row.y0, row.y1]);
    }
    Ok(CounterfactualData {
        dataset: Dataset::from_examples(cfg.d, examples),
        counterfactuals,
        draws,
    })
}

/// Coefficient law and calibration target of [`gen_loglinear`].
///
/// These constants are this crate's documented defaults for the log-linear
/// analog benchmark, not values inherited from any external dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLinearParams {
    pub coef_values: Vec<f64>,
    pub coef_probs: Vec<f64>,
    /// The per-draw sample mean of `y1 - y0` is calibrated to this value.
    pub target_mean_effect: f64,
}

impl Default for LogLinearParams {
    fn default() -> Self {
        Self {
            coef_values: alloc::vec![0.0, 0.1, 0.2, 0.3, 0.4],
            coef_probs: alloc::vec![0.6, 0.1, 0.1, 0.1, 0.1],
            target_mean_effect: 4.0,
        }
    }
}

/// Log-linear benchmark analog: `w ~ N(0, I)`, control mean
/// `exp((w + 0.5)^T beta)`, treated mean `w^T beta - omega` with `omega`
/// calibrated per draw so the sample mean effect equals the target.
pub fn gen_loglinear(
    cfg: &GenConfig,
    params: &LogLinearParams,
) -> Result<CounterfactualData, GenError> {
    cfg.validate()?;
    if params.coef_values.len() != params.coef_probs.len() || params.coef_values.is_empty() {
        return Err(GenError::Invalid("coefficient values/probs mismatch"));
    }
    let root = SeededRng::new(cfg.seed);
    let mut beta_rng = root.child(u64::MAX);
    let beta: Vec<f64> = (0..cfg.d)
        .map(|_| {
            let u = beta_rng.next_f64();
            let mut acc = 0.0;
            for (v, p) in params.coef_values.iter().zip(&params.coef_probs) {
                acc += p;
                if u < acc {
                    return *v;
                }
            }
            *params.coef_values.last().unwrap()
        })
        .collect();

    struct Row {
        context: Vec<f64>,
        mean0: f64,
        raw1: f64,
        eps0: f64,
        eps1: f64,
        action: BinaryAction,
    }
    let rows: Vec<Row> = (0..cfg.n)
        .map(|i| {
            let mut rng = root.child(i as u64);
            let context: Vec<f64> = (0..cfg.d).map(|_| rng.standard_normal()).collect();
            let eps0 = rng.standard_normal() * cfg.noise_sd;
            let eps1 = rng.standard_normal() * cfg.noise_sd;
            let action = BinaryAction::from_index(rng.below(2)).unwrap();
            let dot: f64 = context.iter().zip(&beta).map(|(w, b)| w * b).sum();
            let shifted: f64 = context.iter().zip(&beta).map(|(w, b)| (w + 0.5) * b).sum();
            Row {
                context,
                mean0: libm::exp(shifted),
                raw1: dot,
                eps0,
                eps1,
                action,
            }
        })
        .collect();
    let n = cfg.n as f64;
    let omega =
        rows.iter().map(|r| r.raw1 - r.mean0).sum::<f64>() / n - params.target_mean_effect;

    let mut examples = Vec::with_capacity(cfg.n);
    let mut counterfactuals = Vec::with_capacity(cfg.n);
    let mut draws = Vec::with_capacity(cfg.n);
    for row in rows {
        let mean1 = row.raw1 - omega;
        let y0 = row.mean0 + row.eps0;
        let y1 = mean1 + row.eps1;
        let outcome = match row.action {
            BinaryAction::Zero => y0,
            BinaryAction::One => y1,
        };
        examples.push(LabeledExample {
            context: Context::new(row.context.clone()),
            action: row.action,
            outcome,
        });
        counterfactuals.push(CounterfactualExample {
            context: Context::new(row.context),
            y0: row.mean0,
            y1: mean1,
        });
        draws.push([y0, y1]);
    }
    Ok(CounterfactualData {
        dataset: Dataset::from_examples(cfg.d, examples),
        counterfactuals,
        draws,
    })
}

/// A click-rate function `w -> sigmoid(intercept + coefs . w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticLinear {
    pub intercept: f64,
    pub coefs: Vec<f64>,
}

impl LogisticLinear {
    pub fn constant(p: f64) -> Self {
        debug_assert!(p > 0.0 && p < 1.0);
        Self {
            intercept: libm::log(p / (1.0 - p)),
            coefs: Vec::new(),
        }
    }

    pub fn prob(&self, w: &Context) -> f64 {
        let dot: f64 = self
            .coefs
            .iter()
            .zip(w.as_slice())
            .map(|(c, x)| c * x)
            .sum();
        stable_logistic(self.intercept + dot)
    }
}

/// Uniformly logged binary click data plus the click-rate functions, so the
/// true value of any deterministic policy stays computable.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickData {
    pub dataset: Dataset,
    pub p0: LogisticLinear,
    pub p1: LogisticLinear,
}

impl ClickData {
    /// Exact policy value over the generated contexts:
    /// `mean_i p_{policy(w_i)}(w_i)`.
    pub fn true_value(&self, policy: &Policy) -> f64 {
        let total: f64 = self
            .dataset
            .iter()
            .map(|ex| match policy.decide(&ex.context) {
                BinaryAction::Zero => self.p0.prob(&ex.context),
                BinaryAction::One => self.p1.prob(&ex.context),
            })
            .sum();
        total / self.dataset.len() as f64
    }
}

/// Click simulation: `w ~ U[-1,1]^d`, `x ~ Bernoulli(1/2)`,
/// `y ~ Bernoulli(p_x(w))` with logistic-linear click rates.
pub fn gen_click_logs(
    cfg: &GenConfig,
    p0: &LogisticLinear,
    p1: &LogisticLinear,
) -> Result<ClickData, GenError> {
    cfg.validate()?;
    let root = SeededRng::new(cfg.seed);
    let examples = (0..cfg.n)
        .map(|i| {
            let mut rng = root.child(i as u64);
            let context = Context::new((0..cfg.d).map(|_| rng.uniform(-1.0, 1.0)).collect());
            let action = BinaryAction::from_index(rng.below(2)).unwrap();
            let p = match action {
                BinaryAction::Zero => p0.prob(&context),
                BinaryAction::One => p1.prob(&context),
            };
            let outcome = if rng.bernoulli(p) { 1.0 } else { 0.0 };
            LabeledExample {
                context,
                action,
                outcome,
            }
        })
        .collect();
    Ok(ClickData {
        dataset: Dataset::from_examples(cfg.d, examples),
        p0: p0.clone(),
        p1: p1.clone(),
    })
}
