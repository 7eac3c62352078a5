//! IO companion to `esr-core`: dataset and counterfactual file formats,
//! model/policy checkpoints, click-log ingestion, and the experiment
//! harness behind the `esr` binary.

pub mod checkpoint;
pub mod formats;
pub mod harness;
pub mod ingest;
pub mod pair_cache;

pub use harness::{ExperimentConfig, GeneratorSpec, LearnerSpec};
