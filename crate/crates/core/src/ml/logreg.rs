//! L2-regularized multinomial logistic regression fitted with L-BFGS on
//! standardized features.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{check_training_set, FeatureVector, LabeledSample, MlError, FEATURE_DIM, MIN_SAMPLES_PER_CLASS};
use crate::expression::ExpressionLabel;

/// Per-feature affine map to zero mean and unit variance, fitted on the
/// training set. Constant features keep unit scale.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl Standardizer {
    pub fn fit(xs: &[[f64; FEATURE_DIM]]) -> Self {
        let n = xs.len().max(1) as f64;
        let mut mean = [0.0; FEATURE_DIM];
        let mut std = [0.0; FEATURE_DIM];
        for j in 0..FEATURE_DIM {
            mean[j] = xs.iter().map(|x| x[j]).sum::<f64>() / n;
            let var = xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
            std[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Self { mean, std }
    }

    pub fn transform(&self, x: [f64; FEATURE_DIM]) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for j in 0..FEATURE_DIM {
            out[j] = (x[j] - self.mean[j]) / self.std[j];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LogRegConfig {
    /// L2 strength λ on the weights (not the intercepts).
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the gradient's Euclidean norm falls below this.
    pub tolerance: f64,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { l2: 1.0, max_iter: 500, tolerance: 1e-6, memory: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogisticRegression {
    /// Classes seen in training, in index order; one row of weights each.
    pub classes: Vec<ExpressionLabel>,
    pub weights: Vec<[f64; FEATURE_DIM]>,
    pub intercepts: Vec<f64>,
    pub standardizer: Standardizer,
    pub iterations: usize,
    pub converged: bool,
}

const STRIDE: usize = FEATURE_DIM + 1;

fn logits(theta: &[f64], x: &[f64; FEATURE_DIM], k: usize, out: &mut [f64]) {
    for (c, o) in out.iter_mut().enumerate().take(k) {
        let row = &theta[c * STRIDE..(c + 1) * STRIDE];
        *o = row[FEATURE_DIM] + (0..FEATURE_DIM).map(|j| row[j] * x[j]).sum::<f64>();
    }
}

fn log_softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter_mut().for_each(|v| *v -= lse);
}

/// Objective and gradient for parameters laid out class by class as
/// `[w_0, w_1, …, b]`:
///
/// f(θ) = (1/n) Σ_i −log softmax(W·x_i + b)[y_i] + (λ / 2n)·‖W‖²
///
/// `ys` holds class positions in `0..n_classes`.
pub fn objective_and_gradient(
    theta: &[f64],
    xs: &[[f64; FEATURE_DIM]],
    ys: &[usize],
    n_classes: usize,
    l2: f64,
) -> (f64, Vec<f64>) {
    let n = xs.len() as f64;
    let mut grad = alloc::vec![0.0; theta.len()];
    let mut loss = 0.0;
    let mut z = alloc::vec![0.0; n_classes];
    for (x, &y) in xs.iter().zip(ys) {
        logits(theta, x, n_classes, &mut z);
        log_softmax_in_place(&mut z);
        loss -= z[y];
        for c in 0..n_classes {
            let r = z[c].exp() - if c == y { 1.0 } else { 0.0 };
            let g = &mut grad[c * STRIDE..(c + 1) * STRIDE];
            for j in 0..FEATURE_DIM {
                g[j] += r * x[j];
            }
            g[FEATURE_DIM] += r;
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    let reg = l2 / n;
    for c in 0..n_classes {
        for j in 0..FEATURE_DIM {
            let w = theta[c * STRIDE + j];
            loss += 0.5 * reg * w * w;
            grad[c * STRIDE + j] += reg * w;
        }
    }
    (loss, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Minimum {
    theta: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn lbfgs(mut theta: Vec<f64>, cfg: &LogRegConfig, f: impl Fn(&[f64]) -> (f64, Vec<f64>)) -> Minimum {
    let (mut fx, mut g) = f(&theta);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();
    for iter in 0..cfg.max_iter {
        if norm(&g) < cfg.tolerance {
            return Minimum { theta, iterations: iter, converged: true };
        }
        // Two-loop recursion for d = −H·g.
        let mut q = g.clone();
        let mut alpha = alloc::vec![0.0; s_hist.len()];
        for i in (0..s_hist.len()).rev() {
            alpha[i] = rho[i] * dot(&s_hist[i], &q);
            q.iter_mut().zip(&y_hist[i]).for_each(|(qv, yv)| *qv -= alpha[i] * yv);
        }
        let gamma = match (s_hist.last(), y_hist.last()) {
            (Some(s), Some(y)) => dot(s, y) / dot(y, y),
            _ => 1.0 / norm(&g).max(1.0),
        };
        q.iter_mut().for_each(|v| *v *= gamma);
        for i in 0..s_hist.len() {
            let beta = rho[i] * dot(&y_hist[i], &q);
            q.iter_mut().zip(&s_hist[i]).for_each(|(qv, sv)| *qv += (alpha[i] - beta) * sv);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            s_hist.clear();
            y_hist.clear();
            rho.clear();
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&d).map(|(t, dv)| t + step * dv).collect();
            let (fc, gc) = f(&cand);
            if fc.is_finite() && fc <= fx + 1e-4 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((next, f_next, g_next)) = accepted else {
            return Minimum { theta, iterations: iter, converged: norm(&g) < cfg.tolerance };
        };
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if s_hist.len() == cfg.memory.max(1) {
                s_hist.remove(0);
                y_hist.remove(0);
                rho.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
            rho.push(1.0 / sy);
        }
        theta = next;
        fx = f_next;
        g = g_next;
    }
    let converged = norm(&g) < cfg.tolerance;
    Minimum { theta, iterations: cfg.max_iter, converged }
}

impl LogisticRegression {
    pub fn fit(samples: &[LabeledSample], cfg: &LogRegConfig) -> Result<Self, MlError> {
        Self::fit_with_minimum(samples, cfg, MIN_SAMPLES_PER_CLASS)
    }

    pub(crate) fn fit_with_minimum(samples: &[LabeledSample], cfg: &LogRegConfig, min: usize) -> Result<Self, MlError> {
        if !(cfg.l2.is_finite() && cfg.l2 >= 0.0 && cfg.tolerance > 0.0) {
            return Err(MlError::InvalidConfig("l2 must be non-negative and tolerance positive"));
        }
        let classes = check_training_set(samples, min)?;
        let raw: Vec<[f64; FEATURE_DIM]> = samples.iter().map(|s| s.features.as_array()).collect();
        let standardizer = Standardizer::fit(&raw);
        let xs: Vec<[f64; FEATURE_DIM]> = raw.iter().map(|&x| standardizer.transform(x)).collect();
        let ys: Vec<usize> = samples
            .iter()
            .map(|s| classes.iter().position(|&c| c == s.label).unwrap_or(0))
            .collect();
        let k = classes.len();
        let theta0 = alloc::vec![0.0; k * STRIDE];
        let min = lbfgs(theta0, cfg, |t| objective_and_gradient(t, &xs, &ys, k, cfg.l2));
        let weights = (0..k)
            .map(|c| {
                let mut w = [0.0; FEATURE_DIM];
                w.copy_from_slice(&min.theta[c * STRIDE..c * STRIDE + FEATURE_DIM]);
                w
            })
            .collect();
        let intercepts = (0..k).map(|c| min.theta[c * STRIDE + FEATURE_DIM]).collect();
        Ok(Self { classes, weights, intercepts, standardizer, iterations: min.iterations, converged: min.converged })
    }

    pub fn validate(&self) -> Result<(), MlError> {
        let k = self.classes.len();
        if k < 2 || self.weights.len() != k || self.intercepts.len() != k {
            return Err(MlError::InvalidModel("logistic regression needs one weight row per class"));
        }
        let finite = self.weights.iter().flatten().chain(&self.intercepts).all(|v| v.is_finite());
        if !finite || self.standardizer.std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(MlError::InvalidModel("logistic regression parameters must be finite"));
        }
        Ok(())
    }

    /// Class probabilities indexed by [`ExpressionLabel::index`]; classes
    /// absent from training get 0.
    pub fn predict_proba(&self, x: &FeatureVector) -> [f64; ExpressionLabel::COUNT] {
        let z0 = self.standardizer.transform(x.as_array());
        let mut z: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, b)| b + (0..FEATURE_DIM).map(|j| w[j] * z0[j]).sum::<f64>())
            .collect();
        log_softmax_in_place(&mut z);
        let mut out = [0.0; ExpressionLabel::COUNT];
        for (c, v) in self.classes.iter().zip(z) {
            out[c.index()] = v.exp();
        }
        out
    }

    pub fn predict(&self, x: &FeatureVector) -> ExpressionLabel {
        argmax_label(&self.predict_proba(x))
    }
}

/// Label with the largest probability; ties go to the lower index.
pub(crate) fn argmax_label(p: &[f64; ExpressionLabel::COUNT]) -> ExpressionLabel {
    let mut best = 0;
    for i in 1..p.len() {
        if p[i] > p[best] {
            best = i;
        }
    }
    ExpressionLabel::ALL[best]
}
