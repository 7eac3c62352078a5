//! Reproducible experiment harness.
//!
//! An [`ExperimentConfig`] (versioned JSON) names a data source, a learner
//! list, and replication settings. `run_bench` derives one seed per
//! replication as a pure function of the master seed, runs replications in a
//! rayon pool keyed by replication index, and aggregates into `results.csv`
//! and `results.json`; output bytes are deterministic given the config,
//! parallel or not. Failed replications are counted per row (`R_effective`),
//! never silently dropped.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use esr_core::data::{split_indices, CounterfactualExample, Dataset, LabeledExample};
use esr_core::eval::{confidence_interval, match_rate, offpolicy_value, regret_report};
use esr_core::learners::{
    fit_direct, fit_dr_learner, fit_esr, fit_r_learner, fit_t_learner, LossKind, Policy,
    TrainConfig,
};
use esr_core::net::{Activation, OptimMethod};
use esr_core::regret::EsrConfig;
use esr_core::synth::{
    gen_click_logs, gen_level_shift, gen_loglinear, gen_paired, GenConfig, LogLinearParams,
    LogisticLinear,
};
use esr_core::SeededRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checkpoint::{load_policy, CheckpointError};
use crate::formats::{
    read_counterfactuals_csv, read_dataset_csv, read_dataset_jsonl, write_counterfactuals_csv,
    write_dataset_csv, write_dataset_jsonl, write_truth_sidecar, FormatError, TruthSidecar,
    TRUTH_VERSION,
};
use crate::ingest::{
    event_to_example, parse_line, resolve_pair_from_ids, FilterError, PairSpec, USER_FEATURE_DIM,
};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("generator error: {0}")]
    Gen(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("no events kept after filtering")]
    EmptyResult,
}

/// Logistic-linear click rate `sigmoid(intercept + coefs . w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub intercept: f64,
    pub coefs: Vec<f64>,
}

impl RateSpec {
    fn to_fn(&self) -> LogisticLinear {
        LogisticLinear {
            intercept: self.intercept,
            coefs: self.coefs.clone(),
        }
    }
}

fn default_noise_sd() -> f64 {
    0.1
}

/// Which synthetic generator produces each replication's data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    /// Uniform-action data with effect `w_1` plus a context-only level term.
    LevelShift {
        n: usize,
        d: usize,
        #[serde(default = "default_noise_sd")]
        noise_sd: f64,
        #[serde(default)]
        amplitude: f64,
        #[serde(default = "crate::harness::default_frequency")]
        frequency: f64,
    },
    /// Level-shift data with both arms observed per context (2n rows).
    Paired {
        n: usize,
        d: usize,
        #[serde(default = "default_noise_sd")]
        noise_sd: f64,
        #[serde(default)]
        amplitude: f64,
        #[serde(default = "crate::harness::default_frequency")]
        frequency: f64,
    },
    /// Log-linear outcome benchmark with calibrated mean effect.
    LogLinear {
        n: usize,
        d: usize,
        #[serde(default = "default_noise_sd")]
        noise_sd: f64,
    },
    /// Uniformly logged Bernoulli click data; evaluated off-policy.
    Click {
        n: usize,
        d: usize,
        p0: RateSpec,
        p1: RateSpec,
    },
}

pub(crate) fn default_frequency() -> f64 {
    1.0
}

/// Pre-existing data files instead of a generator. Counterfactuals, when
/// given, must be row-aligned with the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFiles {
    pub dataset: String,
    #[serde(default)]
    pub counterfactuals: Option<String>,
}

fn default_propensity() -> f64 {
    0.5
}

/// One learner to benchmark. `k` applies to `esr` only; `propensity` to
/// `dr` and `r` (the logging propensity, assumed known).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub name: String,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default = "default_propensity")]
    pub propensity: f64,
}

const LEARNER_NAMES: [&str; 5] = ["esr", "direct", "t", "dr", "r"];

/// Shared architecture and optimizer settings for every learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSpec {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// `adam` or `sgd`.
    pub optimizer: String,
}

impl Default for TrainSpec {
    fn default() -> Self {
        let base = TrainConfig::default();
        Self {
            hidden: base.hidden,
            epochs: base.epochs,
            batch_size: base.batch_size,
            learning_rate: 1e-3,
            optimizer: "adam".to_string(),
        }
    }
}

impl TrainSpec {
    fn to_train_config(&self, loss: LossKind, k: f64) -> Result<TrainConfig, HarnessError> {
        let optimizer = match self.optimizer.as_str() {
            "adam" => OptimMethod::adam(self.learning_rate),
            "sgd" => OptimMethod::Sgd {
                lr: self.learning_rate,
            },
            other => {
                return Err(HarnessError::InvalidConfig(format!(
                    "unknown optimizer `{other}`"
                )))
            }
        };
        Ok(TrainConfig {
            loss,
            esr: EsrConfig::new(k),
            hidden: self.hidden.clone(),
            hidden_activation: Activation::Relu,
            output_activation: Activation::Identity,
            optimizer,
            epochs: self.epochs,
            batch_size: self.batch_size,
        })
    }
}

fn default_split() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    pub replications: usize,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub input: Option<InputFiles>,
    pub learners: Vec<LearnerSpec>,
    /// Extra k values: each expands the `esr` learners into one row per k.
    #[serde(default)]
    pub k_sweep: Vec<f64>,
    #[serde(default)]
    pub train: TrainSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::InvalidConfig(m.to_string()));
        if self.version != CONFIG_VERSION {
            return fail(&format!("unsupported config version {}", self.version));
        }
        if self.replications == 0 {
            return fail("replications must be >= 1");
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return fail("split_fraction must lie strictly in (0, 1)");
        }
        if self.learners.is_empty() {
            return fail("learners must be nonempty");
        }
        for l in &self.learners {
            if !LEARNER_NAMES.contains(&l.name.as_str()) {
                return fail(&format!(
                    "unknown learner `{}` (expected one of {LEARNER_NAMES:?})",
                    l.name
                ));
            }
            if let Some(k) = l.k {
                if !(k > 0.0) {
                    return fail("k must be positive");
                }
            }
            if !(l.propensity > 0.0 && l.propensity < 1.0) {
                return fail("propensity must lie strictly in (0, 1)");
            }
        }
        match (&self.generator, &self.input) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return fail("exactly one of `generator` and `input` is required"),
        }
        if let Some(GeneratorSpec::LevelShift { n, d, .. })
        | Some(GeneratorSpec::Paired { n, d, .. })
        | Some(GeneratorSpec::LogLinear { n, d, .. })
        | Some(GeneratorSpec::Click { n, d, .. }) = &self.generator
        {
            if *n == 0 || *d == 0 {
                return fail("generator n and d must be >= 1");
            }
        }
        Ok(())
    }

    /// Short hex digest of the canonical JSON form, stamped on every row.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One replication's train split and evaluation target.
enum RepData {
    Counterfactual {
        train: Dataset,
        test_cfs: Vec<CounterfactualExample>,
    },
    Logged {
        train: Dataset,
        test_logs: Dataset,
    },
}

impl RepData {
    fn metric(&self) -> &'static str {
        match self {
            RepData::Counterfactual { .. } => "regret",
            RepData::Logged { .. } => "value",
        }
    }
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Build replication `r`'s data. The replication seed is
/// `master.child(r)`: a pure function of `(master seed, r)`.
fn build_rep_data(
    cfg: &ExperimentConfig,
    input: Option<&(Dataset, Option<Vec<CounterfactualExample>>)>,
    r: usize,
) -> Result<RepData, String> {
    let rep = SeededRng::new(cfg.seed).child(r as u64);
    let gen_seed = rep.child(0).seed();
    let mut split_rng = rep.child(1);
    let split = |n: usize, rng: &mut SeededRng| {
        split_indices(n, cfg.split_fraction, rng).map_err(|e| e.to_string())
    };
    match (&cfg.generator, input) {
        (Some(GeneratorSpec::LevelShift { n, d, noise_sd, amplitude, frequency }), _) => {
            let data = gen_level_shift(&GenConfig {
                n: *n,
                d: *d,
                noise_sd: *noise_sd,
                amplitude: *amplitude,
                frequency: *frequency,
                seed: gen_seed,
            })
            .map_err(|e| e.to_string())?;
            let (tr, te) = split(*n, &mut split_rng)?;
            Ok(RepData::Counterfactual {
                train: data.dataset.subset(&tr),
                test_cfs: pick(&data.counterfactuals, &te),
            })
        }
        (Some(GeneratorSpec::Paired { n, d, noise_sd, amplitude, frequency }), _) => {
            let data = gen_paired(&GenConfig {
                n: *n,
                d: *d,
                noise_sd: *noise_sd,
                amplitude: *amplitude,
                frequency: *frequency,
                seed: gen_seed,
            })
            .map_err(|e| e.to_string())?;
            // split at the context level; rows 2c and 2c+1 share context c
            let (tr_ctx, te_ctx) = split(*n, &mut split_rng)?;
            let rows: Vec<usize> = tr_ctx.iter().flat_map(|&c| [2 * c, 2 * c + 1]).collect();
            Ok(RepData::Counterfactual {
                train: data.dataset.subset(&rows),
                test_cfs: pick(&data.counterfactuals, &te_ctx),
            })
        }
        (Some(GeneratorSpec::LogLinear { n, d, noise_sd }), _) => {
            let data = gen_loglinear(
                &GenConfig {
                    n: *n,
                    d: *d,
                    noise_sd: *noise_sd,
                    amplitude: 0.0,
                    frequency: 1.0,
                    seed: gen_seed,
                },
                &LogLinearParams::default(),
            )
            .map_err(|e| e.to_string())?;
            let (tr, te) = split(*n, &mut split_rng)?;
            Ok(RepData::Counterfactual {
                train: data.dataset.subset(&tr),
                test_cfs: pick(&data.counterfactuals, &te),
            })
        }
        (Some(GeneratorSpec::Click { n, d, p0, p1 }), _) => {
            let data = gen_click_logs(
                &GenConfig {
                    n: *n,
                    d: *d,
                    noise_sd: 0.0,
                    amplitude: 0.0,
                    frequency: 1.0,
                    seed: gen_seed,
                },
                &p0.to_fn(),
                &p1.to_fn(),
            )
            .map_err(|e| e.to_string())?;
            let (tr, te) = split(*n, &mut split_rng)?;
            Ok(RepData::Logged {
                train: data.dataset.subset(&tr),
                test_logs: data.dataset.subset(&te),
            })
        }
        (None, Some((ds, cfs))) => {
            let (tr, te) = split(ds.len(), &mut split_rng)?;
            match cfs {
                Some(cfs) => Ok(RepData::Counterfactual {
                    train: ds.subset(&tr),
                    test_cfs: pick(cfs, &te),
                }),
                None => Ok(RepData::Logged {
                    train: ds.subset(&tr),
                    test_logs: ds.subset(&te),
                }),
            }
        }
        (None, None) => Err("no data source".to_string()),
    }
}

/// One results row before aggregation: a learner, optionally pinned to one
/// k value from the sweep.
struct Task<'a> {
    spec: &'a LearnerSpec,
    k: Option<f64>,
}

fn expand_tasks<'a>(cfg: &'a ExperimentConfig) -> Vec<Task<'a>> {
    let mut tasks = Vec::new();
    for spec in &cfg.learners {
        if spec.name == "esr" && !cfg.k_sweep.is_empty() {
            for &k in &cfg.k_sweep {
                tasks.push(Task { spec, k: Some(k) });
            }
        } else if spec.name == "esr" {
            tasks.push(Task {
                spec,
                k: Some(spec.k.unwrap_or_else(|| EsrConfig::default().k)),
            });
        } else {
            tasks.push(Task { spec, k: None });
        }
    }
    tasks
}

fn fit_task(
    task: &Task<'_>,
    train: &Dataset,
    train_spec: &TrainSpec,
    rng: &SeededRng,
) -> Result<Policy, String> {
    let name = task.spec.name.as_str();
    let loss = if name == "esr" { LossKind::Esr } else { LossKind::Mse };
    let cfg = train_spec
        .to_train_config(loss, task.k.unwrap_or_else(|| EsrConfig::default().k))
        .map_err(|e| e.to_string())?;
    let e = task.spec.propensity;
    match name {
        "esr" => fit_esr(train, &cfg, rng),
        "direct" => fit_direct(train, &cfg, rng),
        "t" => fit_t_learner(train, &cfg, rng),
        "dr" => fit_dr_learner(train, &cfg, rng, e),
        "r" => fit_r_learner(train, &cfg, rng, e),
        other => return Err(format!("unknown learner `{other}`")),
    }
    .map_err(|e| e.to_string())
}

fn eval_policy(policy: &Policy, data: &RepData) -> Result<f64, String> {
    match data {
        RepData::Counterfactual { test_cfs, .. } => {
            if test_cfs.is_empty() {
                return Err("empty test split".to_string());
            }
            Ok(regret_report(policy, test_cfs))
        }
        RepData::Logged { test_logs, .. } => {
            offpolicy_value(policy, test_logs).map_err(|e| e.to_string())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureJson {
    pub replication: usize,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowJson {
    pub learner: String,
    pub k: Option<f64>,
    pub metric: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub r_effective: usize,
    pub values: Vec<f64>,
    pub failures: Vec<FailureJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchOutput {
    pub version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<RowJson>,
}

impl BenchOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("learner,k,metric,mean,ci_low,ci_high,R_effective,seed,config_hash\n");
        for row in &self.rows {
            let k = row.k.map(|k| k.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.learner,
                k,
                row.metric,
                row.mean,
                row.ci_low,
                row.ci_high,
                row.r_effective,
                self.seed,
                self.config_hash
            );
        }
        out
    }
}

/// Run every (replication, task) cell and aggregate. Replications execute
/// in parallel keyed by index, so output is identical to a serial run.
pub fn run_bench(cfg: &ExperimentConfig, out_dir: &Path) -> Result<BenchOutput, HarnessError> {
    cfg.validate()?;
    let input = match &cfg.input {
        Some(files) => {
            let ds = read_dataset_any(Path::new(&files.dataset))?;
            let cfs = files
                .counterfactuals
                .as_deref()
                .map(|p| read_counterfactuals_csv(Path::new(p)))
                .transpose()?;
            if let Some(cfs) = &cfs {
                if cfs.len() != ds.len() {
                    return Err(HarnessError::InvalidConfig(
                        "counterfactual file not row-aligned with dataset".to_string(),
                    ));
                }
            }
            Some((ds, cfs))
        }
        None => None,
    };
    let tasks = expand_tasks(cfg);
    let metric_hint = std::sync::OnceLock::new();

    // cell results per replication, in replication order
    let cells: Vec<Vec<Result<f64, String>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let rep = SeededRng::new(cfg.seed).child(r as u64);
            let data = match build_rep_data(cfg, input.as_ref(), r) {
                Ok(data) => data,
                Err(e) => return vec![Err(e); tasks.len()],
            };
            let _ = metric_hint.set(data.metric());
            tasks
                .iter()
                .enumerate()
                .map(|(t, task)| {
                    let rng = rep.child(100 + t as u64);
                    let policy = fit_task(task, train_of(&data), &cfg.train, &rng)?;
                    eval_policy(&policy, &data)
                })
                .collect()
        })
        .collect();

    let metric = metric_hint.get().copied().unwrap_or("regret").to_string();
    let rows = tasks
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let mut values = Vec::new();
            let mut failures = Vec::new();
            for (r, rep_cells) in cells.iter().enumerate() {
                match &rep_cells[t] {
                    Ok(v) => values.push(*v),
                    Err(e) => failures.push(FailureJson {
                        replication: r,
                        error: e.clone(),
                    }),
                }
            }
            let mean = if values.is_empty() {
                f64::NAN
            } else {
                values.iter().sum::<f64>() / values.len() as f64
            };
            let (ci_low, ci_high) =
                confidence_interval(&values, 0.95).unwrap_or((mean, mean));
            RowJson {
                learner: task.spec.name.clone(),
                k: task.k,
                metric: metric.clone(),
                mean,
                ci_low,
                ci_high,
                r_effective: values.len(),
                values,
                failures,
            }
        })
        .collect();

    let output = BenchOutput {
        version: CONFIG_VERSION,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        rows,
    };
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("results.csv"), output.to_csv())?;
    let mut json = serde_json::to_string_pretty(&output)?;
    json.push('\n');
    fs::write(out_dir.join("results.json"), json)?;
    Ok(output)
}

fn train_of(data: &RepData) -> &Dataset {
    match data {
        RepData::Counterfactual { train, .. } | RepData::Logged { train, .. } => train,
    }
}

fn read_dataset_any(path: &Path) -> Result<Dataset, FormatError> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        read_dataset_jsonl(path)
    } else {
        read_dataset_csv(path)
    }
}

/// Generate one dataset with the config's generator and master seed; write
/// `dataset.csv`, `dataset.jsonl`, `counterfactuals.csv` (when the
/// generator provides them), and a `truth.json` sidecar.
pub fn run_gen(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(), HarnessError> {
    cfg.validate()?;
    let spec = cfg
        .generator
        .as_ref()
        .ok_or_else(|| HarnessError::InvalidConfig("gen requires a generator".to_string()))?;
    fs::create_dir_all(out_dir)?;
    let seed = cfg.seed;
    let (dataset, cfs, truth) = match spec {
        GeneratorSpec::LevelShift { n, d, noise_sd, amplitude, frequency }
        | GeneratorSpec::Paired { n, d, noise_sd, amplitude, frequency } => {
            let gc = GenConfig {
                n: *n,
                d: *d,
                noise_sd: *noise_sd,
                amplitude: *amplitude,
                frequency: *frequency,
                seed,
            };
            let (name, data) = if matches!(spec, GeneratorSpec::Paired { .. }) {
                ("paired", gen_paired(&gc))
            } else {
                ("level-shift", gen_level_shift(&gc))
            };
            let data = data.map_err(|e| HarnessError::Gen(e.to_string()))?;
            let truth = TruthSidecar {
                version: TRUTH_VERSION,
                generator: name.to_string(),
                seed,
                n: *n,
                d: *d,
                noise_sd: *noise_sd,
                amplitude: Some(*amplitude),
                frequency: Some(*frequency),
                click_rates: None,
            };
            (data.dataset, Some(data.counterfactuals), truth)
        }
        GeneratorSpec::LogLinear { n, d, noise_sd } => {
            let data = gen_loglinear(
                &GenConfig {
                    n: *n,
                    d: *d,
                    noise_sd: *noise_sd,
                    amplitude: 0.0,
                    frequency: 1.0,
                    seed,
                },
                &LogLinearParams::default(),
            )
            .map_err(|e| HarnessError::Gen(e.to_string()))?;
            let truth = TruthSidecar {
                version: TRUTH_VERSION,
                generator: "log-linear".to_string(),
                seed,
                n: *n,
                d: *d,
                noise_sd: *noise_sd,
                amplitude: None,
                frequency: None,
                click_rates: None,
            };
            (data.dataset, Some(data.counterfactuals), truth)
        }
        GeneratorSpec::Click { n, d, p0, p1 } => {
            let data = gen_click_logs(
                &GenConfig {
                    n: *n,
                    d: *d,
                    noise_sd: 0.0,
                    amplitude: 0.0,
                    frequency: 1.0,
                    seed,
                },
                &p0.to_fn(),
                &p1.to_fn(),
            )
            .map_err(|e| HarnessError::Gen(e.to_string()))?;
            let rates = [p0, p1].map(|r| {
                let mut v = vec![r.intercept];
                v.extend_from_slice(&r.coefs);
                v
            });
            let truth = TruthSidecar {
                version: TRUTH_VERSION,
                generator: "click".to_string(),
                seed,
                n: *n,
                d: *d,
                noise_sd: 0.0,
                amplitude: None,
                frequency: None,
                click_rates: Some(rates),
            };
            (data.dataset, None, truth)
        }
    };
    write_dataset_csv(&out_dir.join("dataset.csv"), &dataset)?;
    write_dataset_jsonl(&out_dir.join("dataset.jsonl"), &dataset)?;
    if let Some(cfs) = cfs {
        write_counterfactuals_csv(&out_dir.join("counterfactuals.csv"), &cfs)?;
    }
    write_truth_sidecar(&out_dir.join("truth.json"), &truth)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParseSummary {
    pub events_read: usize,
    pub parse_errors: usize,
    pub kept: usize,
    pub pair: [String; 2],
}

/// Streaming parse + filter over log files: two passes, O(1) memory in file
/// size (only kept rows are retained). Malformed lines are counted and
/// skipped, never fatal.
pub fn run_parse(
    inputs: &[std::path::PathBuf],
    spec: &PairSpec,
    seed: u64,
    out_dir: &Path,
) -> Result<ParseSummary, HarnessError> {
    // pass 1: displayed ids and error counts
    let mut ids: Vec<String> = Vec::new();
    let mut events_read = 0usize;
    let mut parse_errors = 0usize;
    for path in inputs {
        let reader = BufReader::new(fs::File::open(path)?);
        for line in reader.lines() {
            match parse_line(&line?) {
                Ok(event) => {
                    events_read += 1;
                    if !ids.contains(&event.displayed) {
                        ids.push(event.displayed);
                    }
                }
                Err(_) => parse_errors += 1,
            }
        }
    }
    let mut rng = SeededRng::new(seed);
    let pair = resolve_pair_from_ids(ids.iter().map(|s| s.as_str()), spec, &mut rng)?;

    // pass 2: keep matching rows
    let mut examples: Vec<LabeledExample> = Vec::new();
    for path in inputs {
        let reader = BufReader::new(fs::File::open(path)?);
        for line in reader.lines() {
            if let Ok(event) = parse_line(&line?) {
                if let Some(ex) = event_to_example(&event, &pair) {
                    examples.push(ex);
                }
            }
        }
    }
    if examples.is_empty() {
        return Err(HarnessError::EmptyResult);
    }
    let dataset = Dataset::from_examples(USER_FEATURE_DIM, examples);
    fs::create_dir_all(out_dir)?;
    write_dataset_csv(&out_dir.join("dataset.csv"), &dataset)?;
    write_dataset_jsonl(&out_dir.join("dataset.jsonl"), &dataset)?;
    Ok(ParseSummary {
        events_read,
        parse_errors,
        kept: dataset.len(),
        pair,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalOutput {
    pub metric: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub match_rate: Option<f64>,
    pub n: usize,
}

/// Evaluate a saved policy: exact regret when counterfactuals are supplied,
/// otherwise the matching off-policy value on the logged dataset.
pub fn run_eval(
    policy_path: &Path,
    dataset_path: &Path,
    cfs_path: Option<&Path>,
) -> Result<EvalOutput, HarnessError> {
    let policy = load_policy(policy_path)?;
    match cfs_path {
        Some(path) => {
            let cfs = read_counterfactuals_csv(path)?;
            if cfs.is_empty() {
                return Err(HarnessError::Eval("empty counterfactual file".to_string()));
            }
            Ok(EvalOutput {
                metric: "regret".to_string(),
                value: regret_report(&policy, &cfs),
                match_rate: None,
                n: cfs.len(),
            })
        }
        None => {
            let logs = read_dataset_any(dataset_path)?;
            if logs.is_empty() {
                return Err(HarnessError::Eval("empty dataset".to_string()));
            }
            let value =
                offpolicy_value(&policy, &logs).map_err(|e| HarnessError::Eval(e.to_string()))?;
            Ok(EvalOutput {
                metric: "value".to_string(),
                value,
                match_rate: Some(match_rate(&policy, &logs)),
                n: logs.len(),
            })
        }
    }
}
