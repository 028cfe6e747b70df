//! Majority vote over logistic regression, a decision tree and a random
//! forest trained on the same data.

use super::forest::{ForestConfig, RandomForest};
use super::logreg::{LogRegConfig, LogisticRegression};
use super::tree::{DecisionTree, TreeConfig};
use super::{check_training_set, FeatureVector, LabeledSample, MlError, MIN_SAMPLES_PER_CLASS};
use crate::expression::ExpressionLabel;

/// Current model document version.
pub const MODEL_VERSION: u32 = 1;

/// Priority used when all three members disagree.
pub const DEFAULT_TIE_POLICY: [ExpressionLabel; 4] = [
    ExpressionLabel::SadNeutral,
    ExpressionLabel::Happy,
    ExpressionLabel::Angry,
    ExpressionLabel::Surprise,
];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub logreg: LogRegConfig,
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub tie_policy: [ExpressionLabel; 4],
    pub min_samples_per_class: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            logreg: LogRegConfig::default(),
            tree: TreeConfig::default(),
            forest: ForestConfig::default(),
            tie_policy: DEFAULT_TIE_POLICY,
            min_samples_per_class: MIN_SAMPLES_PER_CLASS,
        }
    }
}

/// Majority label of three votes. Without a majority, the first label in
/// `tie_policy` that received a vote wins.
pub fn vote(votes: [ExpressionLabel; 3], tie_policy: &[ExpressionLabel; 4]) -> ExpressionLabel {
    let [a, b, c] = votes;
    if a == b || a == c {
        return a;
    }
    if b == c {
        return b;
    }
    tie_policy.iter().copied().find(|l| votes.contains(l)).unwrap_or(a)
}

/// A trained ensemble. Only [`EnsembleModel::train`] or a validated
/// deserialized document produce one, so an untrained model cannot exist.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleModel {
    pub version: u32,
    pub logreg: LogisticRegression,
    pub tree: DecisionTree,
    pub forest: RandomForest,
    pub tie_policy: [ExpressionLabel; 4],
}

impl EnsembleModel {
    pub fn train(samples: &[LabeledSample], cfg: &TrainConfig) -> Result<Self, MlError> {
        let min = cfg.min_samples_per_class;
        check_training_set(samples, min)?;
        check_policy(&cfg.tie_policy)?;
        Ok(Self {
            version: MODEL_VERSION,
            logreg: LogisticRegression::fit_with_minimum(samples, &cfg.logreg, min)?,
            tree: DecisionTree::fit_with_minimum(samples, &cfg.tree, min)?,
            forest: RandomForest::fit_with_minimum(samples, &cfg.forest, min)?,
            tie_policy: cfg.tie_policy,
        })
    }

    /// Checks a model loaded from outside.
    pub fn validate(&self) -> Result<(), MlError> {
        if self.version != MODEL_VERSION {
            return Err(MlError::UnsupportedVersion(self.version));
        }
        check_policy(&self.tie_policy)?;
        self.logreg.validate()?;
        self.tree.validate()?;
        self.forest.validate()
    }

    /// Votes of logistic regression, tree and forest, in that order.
    pub fn member_predictions(&self, x: &FeatureVector) -> [ExpressionLabel; 3] {
        [self.logreg.predict(x), self.tree.predict(x), self.forest.predict(x)]
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<ExpressionLabel, MlError> {
        if !x.is_finite() {
            return Err(MlError::NonFinite(0));
        }
        Ok(vote(self.member_predictions(x), &self.tie_policy))
    }
}

fn check_policy(policy: &[ExpressionLabel; 4]) -> Result<(), MlError> {
    if ExpressionLabel::ALL.iter().all(|l| policy.contains(l)) {
        Ok(())
    } else {
        Err(MlError::InvalidConfig("tie policy must list every class once"))
    }
}
