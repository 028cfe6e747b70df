//! Analytic signal and dechirp mixing.

use alloc::vec::Vec;

use super::fft::FftPlan;
use super::DspError;
use crate::math::next_pow2;
use crate::Complex;

/// Analytic signal x + j·H{x} by the frequency-domain method: zero-pad to a
/// power of two at least twice the input, zero the negative frequencies,
/// double the positive ones, transform back and truncate.
///
/// The real part reproduces the input up to rounding.
pub fn analytic(x: &[f64]) -> Result<Vec<Complex>, DspError> {
    if x.is_empty() {
        return Err(DspError::TooShort { need: 1, got: 0 });
    }
    let plan = FftPlan::new(next_pow2(2 * x.len()))?;
    analytic_with(&plan, x)
}

pub(crate) fn analytic_with(plan: &FftPlan, x: &[f64]) -> Result<Vec<Complex>, DspError> {
    let n = plan.len();
    if x.len() > n {
        return Err(DspError::FftTooShort { n_fft: n, len: x.len() });
    }
    let mut buf = alloc::vec![Complex::new(0.0, 0.0); n];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    plan.forward(&mut buf)?;
    let half = n / 2;
    for (k, z) in buf.iter_mut().enumerate() {
        if k == 0 || k == half {
            continue;
        } else if k < half {
            *z *= 2.0;
        } else {
            *z = Complex::new(0.0, 0.0);
        }
    }
    plan.inverse(&mut buf)?;
    buf.truncate(x.len());
    Ok(buf)
}

/// Mixed signal r_m[n] = Re[rx[n]·conj(tx[n])]. A path delayed by τ leaves
/// a tone at the beat frequency c·τ.
pub fn dechirp(tx_analytic: &[Complex], rx_analytic: &[Complex]) -> Result<Vec<f64>, DspError> {
    if tx_analytic.len() != rx_analytic.len() {
        return Err(DspError::LengthMismatch {
            left: tx_analytic.len(),
            right: rx_analytic.len(),
        });
    }
    Ok(rx_analytic
        .iter()
        .zip(tx_analytic)
        .map(|(r, t)| (r * t.conj()).re)
        .collect())
}
