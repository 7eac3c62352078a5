//! Domain types: contexts, actions, logged examples, datasets, and the
//! train/test split shared by every other module.
//!
//! `Dataset` construction is deliberately permissive; [`validate_dataset`]
//! reports violations so externally loaded data can be diagnosed instead of
//! rejected at parse time. Operations that require a clean dataset (pairing,
//! training) state so in their contracts.

use alloc::vec::Vec;
use core::fmt;

/// A feature vector describing the setting of one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub features: Vec<f64>,
}

impl Context {
    pub fn new(features: Vec<f64>) -> Self {
        Self { features }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.features
    }

    /// Squared Euclidean distance, summed in index order.
    pub fn dist2(&self, other: &Context) -> f64 {
        self.features
            .iter()
            .zip(&other.features)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// One of the two possible decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryAction {
    Zero,
    One,
}

impl BinaryAction {
    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Self::Zero),
            1 => Some(Self::One),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Self::Zero => 0,
            Self::One => 1,
        }
    }

    /// The action encoded as a model input feature.
    pub fn as_f64(self) -> f64 {
        self.index() as f64
    }

    pub fn other(self) -> Self {
        match self {
            Self::Zero => Self::One,
            Self::One => Self::Zero,
        }
    }
}

impl fmt::Display for BinaryAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// One logged observation: the action taken in a context and the outcome seen.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub context: Context,
    pub action: BinaryAction,
    pub outcome: f64,
}

/// A context with both potential outcomes, for exact-regret evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualExample {
    pub context: Context,
    pub y0: f64,
    pub y1: f64,
}

impl CounterfactualExample {
    pub fn outcome(&self, action: BinaryAction) -> f64 {
        match action {
            BinaryAction::Zero => self.y0,
            BinaryAction::One => self.y1,
        }
    }

    pub fn best_outcome(&self) -> f64 {
        self.y0.max(self.y1)
    }

    /// `y1 - y0`.
    pub fn effect(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// An ordered list of logged examples with a declared feature dimension.
///
/// Index order is stable; other modules (notably [`crate::pairing`]) refer to
/// examples by index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub dim: usize,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Self {
            examples: Vec::new(),
            dim,
        }
    }

    pub fn from_examples(dim: usize, examples: Vec<LabeledExample>) -> Self {
        Self { examples, dim }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, LabeledExample> {
        self.examples.iter()
    }

    /// Number of examples per action class, indexed by action.
    pub fn action_counts(&self) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for ex in &self.examples {
            counts[ex.action.index()] += 1;
        }
        counts
    }

    /// Select examples by index, preserving the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            dim: self.dim,
        }
    }
}

/// Errors from dataset-level operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataError {
    EmptyDataset,
    /// `train_fraction` must lie strictly inside (0, 1).
    FractionOutOfRange,
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::EmptyDataset => write!(f, "dataset is empty"),
            DataError::FractionOutOfRange => {
                write!(f, "train fraction must lie strictly in (0, 1)")
            }
        }
    }
}

impl core::error::Error for DataError {}

/// Partition `0..n` into (train, test) index sets by a uniform random
/// permutation; train gets `floor(fraction * n)` indices.
///
/// Both halves are returned in ascending index order so callers can keep
/// side tables (counterfactuals, truth sidecars) aligned with the split.
pub fn split_indices(
    n: usize,
    train_fraction: f64,
    rng: &mut crate::SeededRng,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if n == 0 {
        return Err(DataError::EmptyDataset);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::FractionOutOfRange);
    }
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let n_train = libm::floor(train_fraction * n as f64) as usize;
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Disjoint train/test partition of a dataset; see [`split_indices`].
pub fn train_test_split(
    ds: &Dataset,
    train_fraction: f64,
    rng: &mut crate::SeededRng,
) -> Result<(Dataset, Dataset), DataError> {
    let (train_idx, test_idx) = split_indices(ds.len(), train_fraction, rng)?;
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

/// One problem found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    /// Example `index` has a NaN/Inf feature at position `feature`.
    NonFiniteFeature { index: usize, feature: usize },
    NonFiniteOutcome { index: usize },
    /// Example `index` has `found` features instead of `ds.dim`.
    WrongDimension { index: usize, found: usize },
    EmptyActionClass { action: BinaryAction },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::NonFiniteFeature { index, feature } => {
                write!(f, "example {index}: non-finite feature at position {feature}")
            }
            ValidationIssue::NonFiniteOutcome { index } => {
                write!(f, "example {index}: non-finite outcome")
            }
            ValidationIssue::WrongDimension { index, found } => {
                write!(f, "example {index}: {found} features, expected dataset dim")
            }
            ValidationIssue::EmptyActionClass { action } => {
                write!(f, "action class {action} empty")
            }
        }
    }
}

/// Diagnostic scan: non-finite values, wrong dimensions, missing action
/// classes. Empty result means the dataset satisfies every invariant.
pub fn validate_dataset(ds: &Dataset) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    for (index, ex) in ds.examples.iter().enumerate() {
        if ex.context.len() != ds.dim {
            issues.push(ValidationIssue::WrongDimension {
                index,
                found: ex.context.len(),
            });
        }
        for (feature, &v) in ex.context.as_slice().iter().enumerate() {
            if !v.is_finite() {
                issues.push(ValidationIssue::NonFiniteFeature { index, feature });
            }
        }
        if !ex.outcome.is_finite() {
            issues.push(ValidationIssue::NonFiniteOutcome { index });
        }
    }
    if !ds.is_empty() {
        let counts = ds.action_counts();
        for a in [BinaryAction::Zero, BinaryAction::One] {
            if counts[a.index()] == 0 {
                issues.push(ValidationIssue::EmptyActionClass { action: a });
            }
        }
    }
    issues
}
