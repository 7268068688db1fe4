use serde::{Deserialize, Serialize};

use super::{ClassifierError, Result};

/// Counts indexed `[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

/// Two-class cells with class 0 as the positive class: the top-left cell is
/// true positives and the bottom-right true negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryCells {
    pub true_positive: u64,
    pub false_negative: u64,
    pub false_positive: u64,
    pub true_negative: u64,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn binary_cells(&self) -> Option<BinaryCells> {
        (self.classes() == 2).then(|| BinaryCells {
            true_positive: self.counts[0][0],
            false_negative: self.counts[0][1],
            false_positive: self.counts[1][0],
            true_negative: self.counts[1][1],
        })
    }

    /// CSV grid with a header row and a leading column of class names.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        let name = |i: usize| class_names.get(i).cloned().unwrap_or_else(|| i.to_string());
        let mut out = String::from("actual\\predicted");
        for c in 0..self.classes() {
            out.push(',');
            out.push_str(&name(c));
        }
        out.push('\n');
        for (r, row) in self.counts.iter().enumerate() {
            out.push_str(&name(r));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix(actual: &[usize], predicted: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(ClassifierError::LengthMismatch(predicted.len(), actual.len()));
    }
    let mut counts = vec![vec![0u64; classes]; classes];
    for (&a, &p) in actual.iter().zip(predicted) {
        for label in [a, p] {
            if label >= classes {
                return Err(ClassifierError::Label { label, classes });
            }
        }
        counts[a][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Per-class scores are `None` where the denominator is zero; such classes
/// are left out of the macro averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
    pub f1: Vec<Option<f64>>,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub macro_f1: Option<f64>,
}

pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<ClassificationMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(ClassifierError::Empty);
    }
    let k = cm.classes();
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let mut precision = Vec::with_capacity(k);
    let mut recall = Vec::with_capacity(k);
    let mut f1 = Vec::with_capacity(k);
    for c in 0..k {
        let diag = cm.counts[c][c];
        let col: u64 = cm.counts.iter().map(|row| row[c]).sum();
        let row: u64 = cm.counts[c].iter().sum();
        let p = ratio(diag, col);
        let r = ratio(diag, row);
        precision.push(p);
        recall.push(r);
        f1.push(match (p, r) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        });
    }
    let macro_avg = |v: &[Option<f64>]| {
        let defined: Vec<f64> = v.iter().flatten().copied().collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    };
    Ok(ClassificationMetrics {
        accuracy: cm.trace() as f64 / total as f64,
        macro_precision: macro_avg(&precision),
        macro_recall: macro_avg(&recall),
        macro_f1: macro_avg(&f1),
        precision,
        recall,
        f1,
    })
}
