//! CART classification tree with Gini impurity.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::index::sample;
use rand::Rng;

use super::logreg::argmax_label;
use super::{check_training_set, FeatureVector, LabeledSample, MlError, FEATURE_DIM, MIN_SAMPLES_PER_CLASS};
use crate::expression::ExpressionLabel;

const K: usize = ExpressionLabel::COUNT;

/// Gini impurity 1 − Σ p_k² of a class histogram; 0 for an empty one.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { max_depth: None, min_samples_split: 2 }
    }
}

/// Tree nodes in a flat arena; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Node {
    /// Class frequencies of the training samples that reached this leaf,
    /// indexed by [`ExpressionLabel::index`].
    Leaf { proba: [f64; K], samples: usize },
    /// Samples with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub depth: usize,
}

pub(crate) struct Builder<'a, R> {
    xs: &'a [[f64; FEATURE_DIM]],
    ys: &'a [usize],
    cfg: TreeConfig,
    /// Random feature subsets of this size at each node, when set.
    sampler: Option<(&'a mut R, usize)>,
    nodes: Vec<Node>,
    depth: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<'a, R: Rng> Builder<'a, R> {
    pub(crate) fn new(
        xs: &'a [[f64; FEATURE_DIM]],
        ys: &'a [usize],
        cfg: TreeConfig,
        sampler: Option<(&'a mut R, usize)>,
    ) -> Self {
        Self { xs, ys, cfg, sampler, nodes: Vec::new(), depth: 0 }
    }

    pub(crate) fn build(mut self, indices: Vec<usize>) -> DecisionTree {
        self.grow(indices, 0);
        DecisionTree { nodes: self.nodes, depth: self.depth }
    }

    fn histogram(&self, idx: &[usize]) -> [usize; K] {
        let mut h = [0usize; K];
        idx.iter().for_each(|&i| h[self.ys[i]] += 1);
        h
    }

    fn best_split_on(&self, idx: &mut [usize], feature: usize, total: &[usize; K]) -> Option<Candidate> {
        let xs = self.xs;
        let ys = self.ys;
        idx.sort_by(|&a, &b| xs[a][feature].total_cmp(&xs[b][feature]).then(ys[a].cmp(&ys[b])));
        let n = idx.len();
        let mut left = [0usize; K];
        let mut best: Option<Candidate> = None;
        for p in 1..n {
            left[ys[idx[p - 1]]] += 1;
            let (a, b) = (xs[idx[p - 1]][feature], xs[idx[p]][feature]);
            if !(a < b) {
                continue;
            }
            let mut right = *total;
            for k in 0..K {
                right[k] -= left[k];
            }
            let impurity = (p as f64 * gini(&left) + (n - p) as f64 * gini(&right)) / n as f64;
            if best.as_ref().is_none_or(|c| impurity < c.impurity) {
                let mid = 0.5 * (a + b);
                let threshold = if mid < b { mid } else { a };
                best = Some(Candidate { feature, threshold, impurity });
            }
        }
        best
    }

    fn feature_order(&mut self) -> Vec<usize> {
        match &mut self.sampler {
            Some((rng, m)) if *m < FEATURE_DIM => {
                let mut chosen: Vec<usize> = sample(*rng, FEATURE_DIM, *m).into_vec();
                chosen.sort_unstable();
                let rest: Vec<usize> = (0..FEATURE_DIM).filter(|f| !chosen.contains(f)).collect();
                chosen.extend(rest);
                chosen
            }
            _ => (0..FEATURE_DIM).collect(),
        }
    }

    fn grow(&mut self, mut idx: Vec<usize>, depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        let hist = self.histogram(&idx);
        let id = self.nodes.len();
        let n = idx.len();
        let leaf = Node::Leaf {
            proba: core::array::from_fn(|k| hist[k] as f64 / n.max(1) as f64),
            samples: n,
        };
        self.nodes.push(leaf);
        let pure = hist.iter().filter(|&&c| c > 0).count() <= 1;
        let at_limit = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || at_limit || n < self.cfg.min_samples_split.max(2) {
            return id;
        }

        let order = self.feature_order();
        let sampled = match &self.sampler {
            Some((_, m)) => (*m).clamp(1, FEATURE_DIM),
            None => FEATURE_DIM,
        };
        let mut best: Option<Candidate> = None;
        for (rank, &f) in order.iter().enumerate() {
            // Features beyond the sampled subset are only consulted when none
            // of the sampled ones can split.
            if rank >= sampled && best.is_some() {
                break;
            }
            if let Some(c) = self.best_split_on(&mut idx, f, &hist) {
                if best.as_ref().is_none_or(|b| c.impurity < b.impurity) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.xs[i][split.feature] <= split.threshold);
        drop(idx);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left: l, right: r };
        id
    }
}

pub(crate) fn encode(samples: &[LabeledSample]) -> (Vec<[f64; FEATURE_DIM]>, Vec<usize>) {
    samples.iter().map(|s| (s.features.as_array(), s.label.index())).unzip()
}

impl DecisionTree {
    pub fn fit(samples: &[LabeledSample], cfg: &TreeConfig) -> Result<Self, MlError> {
        Self::fit_with_minimum(samples, cfg, MIN_SAMPLES_PER_CLASS)
    }

    pub(crate) fn fit_with_minimum(samples: &[LabeledSample], cfg: &TreeConfig, min: usize) -> Result<Self, MlError> {
        check_training_set(samples, min)?;
        let (xs, ys) = encode(samples);
        let builder: Builder<'_, rand_chacha::ChaCha8Rng> = Builder::new(&xs, &ys, *cfg, None);
        Ok(builder.build((0..samples.len()).collect()))
    }

    fn leaf(&self, x: &FeatureVector) -> &Node {
        let v = x.as_array();
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if v[*feature] <= *threshold { *left } else { *right };
                }
                leaf => return leaf,
            }
        }
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> [f64; K] {
        match self.leaf(x) {
            Node::Leaf { proba, .. } => *proba,
            Node::Split { .. } => [0.0; K],
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> ExpressionLabel {
        argmax_label(&self.predict_proba(x))
    }

    /// Child indices in range and pointing forward, so prediction terminates.
    pub fn validate(&self) -> Result<(), MlError> {
        if self.nodes.is_empty() {
            return Err(MlError::InvalidModel("tree has no nodes"));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::Split { feature, threshold, left, right } = n {
                let ok = *feature < FEATURE_DIM
                    && threshold.is_finite()
                    && *left > i
                    && *right > i
                    && *left < self.nodes.len()
                    && *right < self.nodes.len();
                if !ok {
                    return Err(MlError::InvalidModel("tree split is malformed"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use ExpressionLabel::*;

    fn s(a: f64, p: f64, label: ExpressionLabel) -> LabeledSample {
        LabeledSample { features: FeatureVector::new(a, p), label, session: None }
    }

    fn xor(seed: u64, n: usize) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                s(a, b, if (a > 0.0) == (b > 0.0) { Happy } else { Angry })
            })
            .collect()
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5, 0, 0, 0]), 0.0);
        assert!((gini(&[3, 3, 3, 3]) - 0.75).abs() < 1e-15);
        assert!((gini(&[1, 1, 0, 0]) - 0.5).abs() < 1e-15);
        assert_eq!(gini(&[0, 0, 0, 0]), 0.0);
    }

    #[test]
    fn fits_training_data_exactly() {
        let data = xor(1, 300);
        let t = DecisionTree::fit(&data, &TreeConfig::default()).unwrap();
        t.validate().unwrap();
        assert!(data.iter().all(|x| t.predict(&x.features) == x.label));
        let held = xor(2, 300);
        let acc = held.iter().filter(|x| t.predict(&x.features) == x.label).count() as f64 / 300.0;
        assert!(acc > 0.9, "{acc}");
    }

    #[test]
    fn depth_limit() {
        let t = DecisionTree::fit(&xor(3, 300), &TreeConfig { max_depth: Some(2), ..TreeConfig::default() }).unwrap();
        assert!(t.depth <= 2);
        let stump = DecisionTree::fit(&xor(3, 300), &TreeConfig { max_depth: Some(0), ..TreeConfig::default() }).unwrap();
        assert_eq!(stump.nodes.len(), 1);
    }

    #[test]
    fn order_invariant() {
        let data = xor(4, 200);
        let mut rev = data.clone();
        rev.reverse();
        let a = DecisionTree::fit(&data, &TreeConfig::default()).unwrap();
        let b = DecisionTree::fit(&rev, &TreeConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn threshold_separates_adjacent_values() {
        let mut data: Vec<_> = (0..8).map(|_| s(1.0, 0.0, Happy)).collect();
        data.extend((0..8).map(|_| s(f64::from_bits(1.0f64.to_bits() + 1), 0.0, Angry)));
        let t = DecisionTree::fit(&data, &TreeConfig::default()).unwrap();
        assert!(data.iter().all(|x| t.predict(&x.features) == x.label));
    }

    #[test]
    fn malformed_tree_rejected() {
        let t = DecisionTree { nodes: vec![Node::Split { feature: 0, threshold: 0.0, left: 0, right: 0 }], depth: 1 };
        assert!(t.validate().is_err());
    }
}
