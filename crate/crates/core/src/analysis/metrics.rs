use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts with rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::dims("confusion matrix predictions", truth.len(), predicted.len()));
        }
        let mut counts = vec![vec![0u64; classes]; classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= classes || p >= classes {
                return Err(Error::LabelOutOfRange {
                    label: t.max(p),
                    classes,
                });
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub per_class_f1: Vec<f64>,
    pub f1_weighted: f64,
    pub f1_macro: f64,
}

/// Accuracy, per-class F1, support-weighted F1 and macro F1.
///
/// A class with no true and no predicted samples has F1 = 0.
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<ClassificationMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Config("confusion matrix is empty".into()));
    }
    let c = cm.classes();
    let diag: u64 = (0..c).map(|k| cm.counts[k][k]).sum();
    let mut per_class_f1 = Vec::with_capacity(c);
    let mut weighted = 0.0;
    for k in 0..c {
        let tp = cm.counts[k][k] as f64;
        let support: u64 = cm.counts[k].iter().sum();
        let predicted: u64 = (0..c).map(|r| cm.counts[r][k]).sum();
        // F1 = 2 tp / (support + predicted)
        let denom = (support + predicted) as f64;
        let f1 = if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
        weighted += f1 * support as f64;
        per_class_f1.push(f1);
    }
    Ok(ClassificationMetrics {
        accuracy: diag as f64 / total as f64,
        f1_macro: per_class_f1.iter().sum::<f64>() / c as f64,
        f1_weighted: weighted / total as f64,
        per_class_f1,
    })
}
