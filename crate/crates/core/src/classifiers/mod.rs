//! Classical baselines over feature vectors and the evaluation metrics
//! shared by every classifier in the crate.

mod knn;
mod metrics;
mod svm;

pub use knn::knn_classify;
pub use metrics::{classification_metrics, confusion_matrix, BinaryCells, ClassificationMetrics, ConfusionMatrix};
pub use svm::{svm_predict, svm_train, LinearSvmModel};

use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifierError {
    #[error("feature dimension {found} does not match {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("{0} labels for {1} samples")]
    LengthMismatch(usize, usize),
    #[error("k = {k} must lie in 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("training needs at least two classes")]
    SingleClass,
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("no samples")]
    Empty,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("class names must be unique")]
    DuplicateClassName,
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

/// Equal-length feature rows with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVectors {
    vectors: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledVectors {
    pub fn new(vectors: Vec<Vec<f64>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if vectors.len() != labels.len() {
            return Err(ClassifierError::LengthMismatch(labels.len(), vectors.len()));
        }
        if let Some(first) = vectors.first() {
            if let Some(bad) = vectors.iter().find(|v| v.len() != first.len()) {
                return Err(ClassifierError::Dimension {
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        let classes = class_names.len();
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(ClassifierError::Label { label, classes });
        }
        let mut sorted: Vec<&String> = class_names.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ClassifierError::DuplicateClassName);
        }
        Ok(Self {
            vectors,
            labels,
            class_names,
        })
    }

    pub fn from_features(features: Vec<FeatureVector>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        Self::new(features.into_iter().map(|f| f.values).collect(), labels, class_names)
    }

    /// Convenience for numbered classes `"0"`, `"1"`, ...
    pub fn numbered(vectors: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let classes = labels.iter().max().map_or(0, |&m| m + 1);
        Self::new(vectors, labels, (0..classes).map(|c| c.to_string()).collect())
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            vectors: idx.iter().map(|&i| self.vectors[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

fn check_dim(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(ClassifierError::Dimension {
            expected,
            found: v.len(),
        })
    }
}

/// Index of the maximum, first index on ties.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
