use crate::expression::ExpressionLabel;

use super::MlError;

const K: usize = ExpressionLabel::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Test samples whose true label is this class.
    pub support: usize,
}

/// Classification summary. `confusion[t][p]` counts samples of true class
/// `t` predicted as `p`, both by [`ExpressionLabel::index`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub total: usize,
    pub accuracy: f64,
    pub per_class: [ClassMetrics; K],
    pub confusion: [[usize; K]; K],
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

/// Metrics for paired true and predicted labels. Undefined ratios (no
/// predictions or no support for a class) are reported as 0.
pub fn evaluate(truth: &[ExpressionLabel], predicted: &[ExpressionLabel]) -> Result<Metrics, MlError> {
    if truth.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    if truth.len() != predicted.len() {
        return Err(MlError::InvalidConfig("truth and predictions differ in length"));
    }
    let mut confusion = [[0usize; K]; K];
    for (t, p) in truth.iter().zip(predicted) {
        confusion[t.index()][p.index()] += 1;
    }
    let total = truth.len();
    let correct: usize = (0..K).map(|k| confusion[k][k]).sum();
    let per_class = core::array::from_fn(|k| {
        let support: usize = confusion[k].iter().sum();
        let predicted_k: usize = (0..K).map(|t| confusion[t][k]).sum();
        let precision = ratio(confusion[k][k], predicted_k);
        let recall = ratio(confusion[k][k], support);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        ClassMetrics { precision, recall, f1, support }
    });
    Ok(Metrics { total, accuracy: ratio(correct, total), per_class, confusion })
}
