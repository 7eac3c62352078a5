//! JSON checkpoints for trained networks and decision policies.
//!
//! A model file stores the architecture spec plus per-layer parameter arrays
//! in forward order (weights row-major `out x in`, then biases). A policy
//! file wraps one or two model checkpoints with the policy kind and
//! tie-break action.

use std::fs;
use std::path::Path;

use esr_core::data::BinaryAction;
use esr_core::learners::Policy;
use esr_core::net::{Activation, LayerParams, MlpModel, MlpSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Identity => "identity",
        Activation::Relu => "relu",
        Activation::Logistic => "logistic",
    }
}

fn activation_from_name(name: &str) -> Result<Activation, CheckpointError> {
    match name {
        "identity" => Ok(Activation::Identity),
        "relu" => Ok(Activation::Relu),
        "logistic" => Ok(Activation::Logistic),
        other => Err(CheckpointError::Invalid(format!("unknown activation `{other}`"))),
    }
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    input_dim: usize,
    hidden: Vec<usize>,
    hidden_activation: String,
    output_activation: String,
}

#[derive(Serialize, Deserialize)]
struct LayerRepr {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    spec: SpecRepr,
    layers: Vec<LayerRepr>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    model: ModelRepr,
}

fn model_to_repr(model: &MlpModel) -> ModelRepr {
    let spec = model.spec();
    ModelRepr {
        spec: SpecRepr {
            input_dim: spec.input_dim,
            hidden: spec.hidden.clone(),
            hidden_activation: activation_name(spec.hidden_activation).to_string(),
            output_activation: activation_name(spec.output_activation).to_string(),
        },
        layers: model
            .layers()
            .iter()
            .map(|l| LayerRepr {
                weights: l.weights.clone(),
                biases: l.biases.clone(),
            })
            .collect(),
    }
}

fn model_from_repr(repr: ModelRepr) -> Result<MlpModel, CheckpointError> {
    let spec = MlpSpec {
        input_dim: repr.spec.input_dim,
        hidden: repr.spec.hidden,
        hidden_activation: activation_from_name(&repr.spec.hidden_activation)?,
        output_activation: activation_from_name(&repr.spec.output_activation)?,
    };
    let layers = repr
        .layers
        .into_iter()
        .map(|l| LayerParams {
            weights: l.weights,
            biases: l.biases,
        })
        .collect();
    MlpModel::from_parts(spec, layers).map_err(|e| CheckpointError::Invalid(e.to_string()))
}

pub fn save_model(path: &Path, model: &MlpModel) -> Result<(), CheckpointError> {
    let file = ModelFile {
        version: CHECKPOINT_VERSION,
        model: model_to_repr(model),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MlpModel, CheckpointError> {
    let file: ModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    if file.version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version(file.version));
    }
    model_from_repr(file.model)
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    version: u32,
    kind: String,
    tie_break: u8,
    models: Vec<ModelRepr>,
}

pub fn save_policy(path: &Path, policy: &Policy) -> Result<(), CheckpointError> {
    let file = PolicyFile {
        version: CHECKPOINT_VERSION,
        kind: policy.kind_name().to_string(),
        tie_break: policy.tie_break.index() as u8,
        models: policy.models().iter().map(|m| model_to_repr(m)).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<Policy, CheckpointError> {
    let file: PolicyFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    if file.version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version(file.version));
    }
    let tie_break = BinaryAction::from_index(file.tie_break as usize)
        .ok_or_else(|| CheckpointError::Invalid(format!("bad tie_break {}", file.tie_break)))?;
    let models = file
        .models
        .into_iter()
        .map(model_from_repr)
        .collect::<Result<Vec<_>, _>>()?;
    Policy::from_models(&file.kind, models, tie_break).ok_or_else(|| {
        CheckpointError::Invalid("policy kind does not match model count".to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use esr_core::data::{Context, Dataset, LabeledExample};
    use esr_core::learners::{fit_esr, fit_t_learner, TrainConfig};
    use esr_core::SeededRng;

    fn tiny_dataset() -> Dataset {
        let mut rng = SeededRng::new(3);
        let examples = (0..40)
            .map(|i| LabeledExample {
                context: Context::new(vec![rng.uniform(-1.0, 1.0)]),
                action: BinaryAction::from_index(i % 2).unwrap(),
                outcome: rng.uniform(-1.0, 1.0),
            })
            .collect();
        Dataset::from_examples(1, examples)
    }

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            hidden: vec![4],
            epochs: 3,
            batch_size: 16,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn model_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = SeededRng::new(1);
        let model = MlpModel::init(MlpSpec::default_for_input(4), &mut rng).unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &model).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
    }

    #[test]
    fn single_model_policy_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let policy = fit_esr(&tiny_dataset(), &tiny_cfg(), &SeededRng::new(2)).unwrap();
        let path = dir.path().join("policy.json");
        save_policy(&path, &policy).unwrap();
        assert_eq!(load_policy(&path).unwrap(), policy);
    }

    #[test]
    fn two_model_policy_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let policy = fit_t_learner(&tiny_dataset(), &tiny_cfg(), &SeededRng::new(4)).unwrap();
        let path = dir.path().join("policy.json");
        save_policy(&path, &policy).unwrap();
        let back = load_policy(&path).unwrap();
        assert_eq!(back, policy);
        assert_eq!(back.kind_name(), "two-model");
    }

    #[test]
    fn bad_activation_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let text = r#"{"version":1,"model":{"spec":{"input_dim":1,"hidden":[],
            "hidden_activation":"tanh","output_activation":"identity"},
            "layers":[{"weights":[1.0],"biases":[0.0]}]}}"#;
        fs::write(&path, text).unwrap();
        assert!(matches!(load_model(&path), Err(CheckpointError::Invalid(_))));
    }

    #[test]
    fn future_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let text = r#"{"version":99,"model":{"spec":{"input_dim":1,"hidden":[],
            "hidden_activation":"relu","output_activation":"identity"},
            "layers":[{"weights":[1.0],"biases":[0.0]}]}}"#;
        fs::write(&path, text).unwrap();
        assert!(matches!(load_model(&path), Err(CheckpointError::Version(99))));
    }
}
