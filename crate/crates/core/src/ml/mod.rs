//! Expression classifiers over per-chirp (amplitude, phase) features:
//! multinomial logistic regression, a CART decision tree, a random forest and
//! their majority-vote ensemble.

mod ensemble;
mod forest;
mod logreg;
mod metrics;
mod split;
mod tree;

use alloc::vec::Vec;

pub use ensemble::{vote, EnsembleModel, TrainConfig, DEFAULT_TIE_POLICY, MODEL_VERSION};
pub use forest::{FeatureSampling, ForestConfig, RandomForest};
pub use logreg::{objective_and_gradient, LogRegConfig, LogisticRegression, Standardizer};
pub use metrics::{evaluate, ClassMetrics, Metrics};
pub use split::{split, Fold, SplitMode};
pub use tree::{gini, DecisionTree, Node, TreeConfig};

use crate::dsp::BinFeatures;
use crate::expression::ExpressionLabel;

/// Number of features per sample.
pub const FEATURE_DIM: usize = 2;

/// Amplitude and unwrapped phase of the selected bin for one chirp (or the
/// mean over a window of chirps).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureVector {
    pub amplitude: f64,
    pub phase: f64,
}

impl FeatureVector {
    pub fn new(amplitude: f64, phase: f64) -> Self {
        Self { amplitude, phase }
    }

    pub fn as_array(&self) -> [f64; FEATURE_DIM] {
        [self.amplitude, self.phase]
    }

    pub fn is_finite(&self) -> bool {
        self.amplitude.is_finite() && self.phase.is_finite()
    }
}

impl From<&BinFeatures> for FeatureVector {
    fn from(f: &BinFeatures) -> Self {
        Self { amplitude: f.amplitude, phase: f.phase }
    }
}

/// One training or test example. `session` is needed by the session-based
/// split modes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: ExpressionLabel,
    pub session: Option<u32>,
}

/// Per-chirp features, or means over consecutive chirps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FeatureMode {
    #[default]
    PerChirp,
    /// Non-overlapping windows of this many chirps with one label and one
    /// session; incomplete windows are dropped.
    Windowed(usize),
}

/// Applies `mode` to a sequence of samples in time order.
pub fn apply_feature_mode(samples: &[LabeledSample], mode: FeatureMode) -> Result<Vec<LabeledSample>, MlError> {
    let width = match mode {
        FeatureMode::PerChirp => return Ok(samples.to_vec()),
        FeatureMode::Windowed(0) => return Err(MlError::InvalidConfig("window must hold at least one chirp")),
        FeatureMode::Windowed(w) => w,
    };
    let mut out = Vec::new();
    let mut run: Vec<&LabeledSample> = Vec::new();
    for s in samples {
        if let Some(first) = run.first() {
            if first.label != s.label || first.session != s.session {
                run.clear();
            }
        }
        run.push(s);
        if run.len() == width {
            let n = width as f64;
            out.push(LabeledSample {
                features: FeatureVector {
                    amplitude: run.iter().map(|x| x.features.amplitude).sum::<f64>() / n,
                    phase: run.iter().map(|x| x.features.phase).sum::<f64>() / n,
                },
                label: s.label,
                session: s.session,
            });
            run.clear();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MlError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training needs at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("class {label} has {count} samples; at least {min} are required")]
    TooFewSamples { label: ExpressionLabel, count: usize, min: usize },
    #[error("identical features ({amplitude}, {phase}) carry labels {first} and {second}")]
    ConflictingDuplicates { amplitude: f64, phase: f64, first: ExpressionLabel, second: ExpressionLabel },
    #[error("non-finite feature at sample {0}")]
    NonFinite(usize),
    #[error("sample {0} has no session tag")]
    MissingSession(usize),
    #[error("need at least two sessions for a leave-one-session-out split, found {0}")]
    TooFewSessions(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid model: {0}")]
    InvalidModel(&'static str),
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
}

/// Minimum samples per class accepted by training.
pub const MIN_SAMPLES_PER_CLASS: usize = 8;

/// Checks the training preconditions and returns the classes present.
pub(crate) fn check_training_set(samples: &[LabeledSample], min_per_class: usize) -> Result<Vec<ExpressionLabel>, MlError> {
    if samples.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    if let Some(i) = samples.iter().position(|s| !s.features.is_finite()) {
        return Err(MlError::NonFinite(i));
    }
    let mut counts = [0usize; ExpressionLabel::COUNT];
    samples.iter().for_each(|s| counts[s.label.index()] += 1);
    let classes: Vec<ExpressionLabel> = ExpressionLabel::ALL.into_iter().filter(|l| counts[l.index()] > 0).collect();
    if classes.len() < 2 {
        return Err(MlError::TooFewClasses(classes.len()));
    }
    for &label in &classes {
        let count = counts[label.index()];
        if count < min_per_class {
            return Err(MlError::TooFewSamples { label, count, min: min_per_class });
        }
    }
    let mut sorted: Vec<&LabeledSample> = samples.iter().collect();
    sorted.sort_by(|a, b| {
        a.features
            .amplitude
            .total_cmp(&b.features.amplitude)
            .then(a.features.phase.total_cmp(&b.features.phase))
    });
    for w in sorted.windows(2) {
        if w[0].features == w[1].features && w[0].label != w[1].label {
            return Err(MlError::ConflictingDuplicates {
                amplitude: w[0].features.amplitude,
                phase: w[0].features.phase,
                first: w[0].label.min(w[1].label),
                second: w[0].label.max(w[1].label),
            });
        }
    }
    Ok(classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExpressionLabel::*;

    fn s(a: f64, p: f64, label: ExpressionLabel) -> LabeledSample {
        LabeledSample { features: FeatureVector::new(a, p), label, session: Some(0) }
    }

    #[test]
    fn preconditions() {
        let one_class: Vec<_> = (0..10).map(|i| s(i as f64, 0.0, Happy)).collect();
        assert_eq!(check_training_set(&one_class, 8), Err(MlError::TooFewClasses(1)));
        assert_eq!(check_training_set(&[], 8), Err(MlError::EmptyDataset));
        let mut two: Vec<_> = (0..10).map(|i| s(i as f64, 0.0, Happy)).collect();
        two.extend((0..3).map(|i| s(i as f64, 1.0, Angry)));
        assert!(matches!(check_training_set(&two, 8), Err(MlError::TooFewSamples { label: Angry, count: 3, .. })));
        two.extend((3..10).map(|i| s(i as f64, 1.0, Angry)));
        assert_eq!(check_training_set(&two, 8).unwrap(), vec![Happy, Angry]);
        two.push(s(2.0, 0.0, Surprise));
        assert!(matches!(check_training_set(&two, 1), Err(MlError::ConflictingDuplicates { .. })));
        two.pop();
        two.push(s(f64::NAN, 0.0, Happy));
        assert!(matches!(check_training_set(&two, 8), Err(MlError::NonFinite(_))));
    }

    #[test]
    fn windowing_respects_label_runs() {
        let mut v: Vec<_> = (0..5).map(|i| s(i as f64, 0.0, Happy)).collect();
        v.extend((0..4).map(|i| s(10.0 + i as f64, 1.0, Angry)));
        let w = apply_feature_mode(&v, FeatureMode::Windowed(2)).unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w[0].features.amplitude, 0.5);
        assert_eq!(w[2].label, Angry);
        assert_eq!(w[2].features.amplitude, 10.5);
        assert_eq!(apply_feature_mode(&v, FeatureMode::PerChirp).unwrap(), v);
        assert!(apply_feature_mode(&v, FeatureMode::Windowed(0)).is_err());
    }
}
