//! Normalized cross-correlation between the transmitted and received signal,
//! used to align speaker and microphone.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::DspError;
use crate::math::mean;

struct Centered {
    values: Vec<f64>,
    energy: f64,
}

fn center(x: &[f64]) -> Result<Centered, DspError> {
    if x.len() < 2 {
        return Err(DspError::TooShort { need: 2, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DspError::NonFinite);
    }
    let m = mean(x);
    let values: Vec<f64> = x.iter().map(|v| v - m).collect();
    let energy: f64 = values.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(DspError::ZeroVariance);
    }
    Ok(Centered { values, energy })
}

fn lagged_dot(tx: &[f64], rx: &[f64], shift: isize) -> f64 {
    // Σ_t rx[t]·tx[t − shift] over indices valid for both.
    let (rx_start, tx_start) = if shift >= 0 { (shift as usize, 0) } else { (0, (-shift) as usize) };
    if rx_start >= rx.len() || tx_start >= tx.len() {
        return 0.0;
    }
    rx[rx_start..].iter().zip(&tx[tx_start..]).map(|(a, b)| a * b).sum()
}

/// Normalized cross-correlation of `rx` against `tx` shifted right by
/// `shift` samples:
///
/// X(n) = Σ_t (r[t] − r̄)(x[t − n] − x̄) / sqrt(Σ_t (r[t] − r̄)² · Σ_t (x[t] − x̄)²)
///
/// The numerator runs over the overlap; the normalization uses both whole
/// buffers, so the value stays in [−1, 1] and reaches ±1 only for an exact
/// (anti-)copy at full overlap.
pub fn xcorr(tx: &[f64], rx: &[f64], shift: isize) -> Result<f64, DspError> {
    let limit = tx.len().max(rx.len());
    if shift.unsigned_abs() > limit {
        return Err(DspError::ShiftOutOfRange { shift, len: limit });
    }
    let t = center(tx)?;
    let r = center(rx)?;
    Ok(lagged_dot(&t.values, &r.values, shift) / (t.energy * r.energy).sqrt())
}

/// Delay of `rx` relative to `tx` maximizing [`xcorr`], scanning every
/// shift with a non-empty overlap. Ties go to the smallest non-negative
/// shift, then to the negative shift closest to zero.
pub fn sync_delay(tx: &[f64], rx: &[f64]) -> Result<isize, DspError> {
    sync_delay_within(tx, rx, tx.len().max(rx.len()))
}

/// [`sync_delay`] restricted to |shift| ≤ `max_lag`.
pub fn sync_delay_within(tx: &[f64], rx: &[f64], max_lag: usize) -> Result<isize, DspError> {
    let t = center(tx)?;
    let r = center(rx)?;
    let norm = (t.energy * r.energy).sqrt();
    let max_pos = max_lag.min(rx.len().saturating_sub(1)) as isize;
    let max_neg = max_lag.min(tx.len().saturating_sub(1)) as isize;

    let mut best_shift = 0isize;
    let mut best = f64::NEG_INFINITY;
    let candidates = (0..=max_pos).chain((1..=max_neg).map(|n| -n));
    for shift in candidates {
        let v = lagged_dot(&t.values, &r.values, shift) / norm;
        if v > best {
            best = v;
            best_shift = shift;
        }
    }
    Ok(best_shift)
}
