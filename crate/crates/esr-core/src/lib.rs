//! Black-box predict-then-optimize with binary actions.
//!
//! Train a small fully-connected network against the empirical soft regret
//! (ESR) loss over cross-action nearest-neighbor pairs, compare it with
//! MSE-trained and metalearner baselines (S/T/R/DR), and evaluate decision
//! policies either by exact regret (when both potential outcomes are known)
//! or by the matching off-policy value estimator on uniformly logged data.
//!
//! The crate is `no_std` + `alloc`: it holds the algorithmic core only.
//! File formats, log ingestion, and the experiment CLI live in `esr-cli`.
//!
//! Everything randomized is a pure function of its inputs and a [`SeededRng`]
//! seed, so runs reproduce bit-for-bit across platforms.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod eval;
pub mod learners;
pub mod net;
pub mod pairing;
pub mod regret;
pub mod rng;
pub mod synth;

pub use data::{
    train_test_split, validate_dataset, BinaryAction, Context, CounterfactualExample, Dataset,
    LabeledExample,
};
pub use eval::EvalReport;
pub use learners::{FitError, LossKind, Policy, TrainConfig};
pub use net::{Activation, MlpModel, MlpSpec, OptimizerState};
pub use pairing::PairedIndex;
pub use regret::EsrConfig;
pub use rng::SeededRng;
