use alloc::vec::Vec;

use super::features::unwrap_phase;
use super::spectrum::FrameSpectrum;
use super::DspError;
use crate::math::{median, variance};
use crate::Complex;

/// What "variance" means when ranking bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SelectionMetric {
    /// Mean of |z − z̄|² across frames: joint amplitude and phase variation.
    #[default]
    ComplexVariance,
    /// Variance of the unwrapped phase across frames.
    PhaseVariance,
}

/// Ratio of the best score to the median score below which a selection is
/// reported as low confidence.
pub const LOW_CONFIDENCE_RATIO: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinSelection {
    pub bin: usize,
    pub metric: SelectionMetric,
    pub max_score: f64,
    pub median_score: f64,
    pub low_confidence: bool,
    pub scores: Vec<f64>,
}

fn bin_scores(frames: &[FrameSpectrum], metric: SelectionMetric, n_bins: usize) -> Vec<f64> {
    let mut column: Vec<f64> = Vec::with_capacity(frames.len());
    (0..n_bins)
        .map(|k| match metric {
            SelectionMetric::PhaseVariance => {
                column.clear();
                column.extend(frames.iter().map(|f| f.bins[k].arg()));
                unwrap_phase(&mut column);
                variance(&column)
            }
            SelectionMetric::ComplexVariance => {
                let n = frames.len() as f64;
                let mean = frames.iter().fold(Complex::new(0.0, 0.0), |a, f| a + f.bins[k]) / n;
                frames.iter().map(|f| (f.bins[k] - mean).norm_sqr()).sum::<f64>() / n
            }
        })
        .collect()
}

/// Bin whose values vary most across `frames`. Ties go to the lower bin.
pub fn select_bin(frames: &[FrameSpectrum], metric: SelectionMetric) -> Result<BinSelection, DspError> {
    select_bin_below(frames, metric, usize::MAX)
}

/// [`select_bin`] restricted to bins `0..limit`; the median for the
/// confidence flag is taken over the same bins.
pub fn select_bin_below(
    frames: &[FrameSpectrum],
    metric: SelectionMetric,
    limit: usize,
) -> Result<BinSelection, DspError> {
    if frames.len() < 2 {
        return Err(DspError::TooFewFrames(frames.len()));
    }
    let n_bins = frames[0].len();
    if n_bins == 0 {
        return Err(DspError::BinOutOfRange { bin: 0, bins: 0 });
    }
    if let Some(f) = frames.iter().find(|f| f.len() != n_bins) {
        return Err(DspError::LengthMismatch { left: f.len(), right: n_bins });
    }
    let scores = bin_scores(frames, metric, n_bins.min(limit.max(1)));
    let mut bin = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[bin] {
            bin = k;
        }
    }
    let max_score = scores[bin];
    let median_score = median(&scores);
    Ok(BinSelection {
        bin,
        metric,
        max_score,
        median_score,
        low_confidence: !(max_score >= LOW_CONFIDENCE_RATIO * median_score) || max_score == 0.0,
        scores,
    })
}
