//! Random forest of CART trees with soft voting.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::logreg::argmax_label;
use super::tree::{encode, Builder, DecisionTree, TreeConfig};
use super::{check_training_set, FeatureVector, LabeledSample, MlError, FEATURE_DIM, MIN_SAMPLES_PER_CLASS};
use crate::expression::ExpressionLabel;

/// Features considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FeatureSampling {
    All,
    /// ⌊√d⌋, at least one.
    #[default]
    Sqrt,
    Count(usize),
}

impl FeatureSampling {
    pub fn resolve(self, dim: usize) -> usize {
        match self {
            FeatureSampling::All => dim,
            FeatureSampling::Sqrt => ((dim as f64).sqrt().floor() as usize).max(1),
            FeatureSampling::Count(m) => m.clamp(1, dim),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub bootstrap: bool,
    pub features: FeatureSampling,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: 10, bootstrap: true, features: FeatureSampling::Sqrt, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub max_depth: usize,
}

/// Deepest tree the forest may hold.
pub const MAX_FOREST_DEPTH: usize = 10;

impl RandomForest {
    /// Tree `i` draws its bootstrap sample and feature subsets from its own
    /// ChaCha stream, so the result does not depend on training order of
    /// the trees.
    pub fn fit(samples: &[LabeledSample], cfg: &ForestConfig) -> Result<Self, MlError> {
        Self::fit_with_minimum(samples, cfg, MIN_SAMPLES_PER_CLASS)
    }

    pub(crate) fn fit_with_minimum(samples: &[LabeledSample], cfg: &ForestConfig, min: usize) -> Result<Self, MlError> {
        if cfg.n_trees == 0 {
            return Err(MlError::InvalidConfig("forest needs at least one tree"));
        }
        if cfg.max_depth > MAX_FOREST_DEPTH {
            return Err(MlError::InvalidConfig("forest depth is capped at 10"));
        }
        check_training_set(samples, min)?;
        let (xs, ys) = encode(samples);
        let n = samples.len();
        let m = cfg.features.resolve(FEATURE_DIM);
        let tree_cfg = TreeConfig { max_depth: Some(cfg.max_depth), ..TreeConfig::default() };
        let trees = (0..cfg.n_trees)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(t as u64);
                let idx: Vec<usize> = if cfg.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                Builder::new(&xs, &ys, tree_cfg, Some((&mut rng, m))).build(idx)
            })
            .collect();
        Ok(Self { trees, max_depth: cfg.max_depth })
    }

    /// Mean of the trees' leaf class frequencies.
    pub fn predict_proba(&self, x: &FeatureVector) -> [f64; ExpressionLabel::COUNT] {
        let mut acc = [0.0; ExpressionLabel::COUNT];
        for t in &self.trees {
            let p = t.predict_proba(x);
            acc.iter_mut().zip(p).for_each(|(a, v)| *a += v);
        }
        let n = self.trees.len().max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    pub fn predict(&self, x: &FeatureVector) -> ExpressionLabel {
        argmax_label(&self.predict_proba(x))
    }

    pub fn validate(&self) -> Result<(), MlError> {
        if self.trees.is_empty() {
            return Err(MlError::InvalidModel("forest has no trees"));
        }
        if self.max_depth > MAX_FOREST_DEPTH || self.trees.iter().any(|t| t.depth > self.max_depth) {
            return Err(MlError::InvalidModel("forest tree exceeds depth 10"));
        }
        self.trees.iter().try_for_each(DecisionTree::validate)
    }
}
