//! Linear-phase FIR high-pass, applied with its group delay removed so the
//! output stays sample-aligned with the input.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::fft::FftPlan;
use super::DspError;
use crate::chirp::SampleBuffer;
use crate::math::bessel_i0;
use crate::Complex;

/// Lower edge of the sensing band after filtering, Hz.
pub const DEFAULT_HIGHPASS_CUTOFF: f64 = 15_900.0;

/// Width of the transition band below the cutoff, Hz. The stop band ends at
/// `cutoff − TRANSITION_HZ` (15 kHz for the default cutoff).
const TRANSITION_HZ: f64 = 900.0;
const STOPBAND_ATTENUATION_DB: f64 = 60.0;

#[derive(Debug, Clone)]
pub struct HighpassFilter {
    taps: Vec<f64>,
    cutoff: f64,
    sample_rate: f64,
    plan: FftPlan,
    spectrum: Vec<Complex>,
}

impl HighpassFilter {
    /// Kaiser-windowed sinc design. Frequencies at or above `cutoff` pass;
    /// frequencies at or below `cutoff − 900 Hz` are attenuated by ≥ 60 dB.
    pub fn design(cutoff: f64, sample_rate: f64) -> Result<Self, DspError> {
        if !(cutoff.is_finite() && sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(DspError::InvalidFilter("cutoff and sample rate must be finite"));
        }
        if cutoff >= sample_rate / 2.0 {
            return Err(DspError::InvalidFilter("cutoff must lie below Nyquist"));
        }
        let stop_edge = cutoff - TRANSITION_HZ;
        if stop_edge <= 0.0 {
            return Err(DspError::InvalidFilter("cutoff too low for the transition band"));
        }

        let a = STOPBAND_ATTENUATION_DB;
        let beta = 0.1102 * (a - 8.7);
        let dw = 2.0 * PI * TRANSITION_HZ / sample_rate;
        let mut len = ((a - 8.0) / (2.285 * dw)).ceil() as usize + 1;
        if len.is_multiple_of(2) {
            len += 1;
        }
        let mid = (len / 2) as f64;
        let wc = 2.0 * PI * 0.5 * (stop_edge + cutoff) / sample_rate;
        let i0_beta = bessel_i0(beta);

        let mut taps: Vec<f64> = (0..len)
            .map(|n| {
                let m = n as f64 - mid;
                let ideal = if m == 0.0 { wc / PI } else { (wc * m).sin() / (PI * m) };
                let r = m / mid;
                let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
                -ideal * w
            })
            .collect();
        taps[len / 2] += 1.0;

        let n_fft = (4 * len).next_power_of_two().max(1024);
        let plan = FftPlan::new(n_fft)?;
        let mut spectrum = alloc::vec![Complex::new(0.0, 0.0); n_fft];
        for (s, &t) in spectrum.iter_mut().zip(&taps) {
            s.re = t;
        }
        plan.forward(&mut spectrum)?;

        Ok(Self { taps, cutoff, sample_rate, plan, spectrum })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Group delay of the causal filter, in samples. [`apply`](Self::apply)
    /// removes it.
    pub fn group_delay(&self) -> usize {
        self.taps.len() / 2
    }

    /// Magnitude response at `freq` Hz.
    pub fn gain_at(&self, freq: f64) -> f64 {
        let w = 2.0 * PI * freq / self.sample_rate;
        let z = self.taps.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (n, &h)| {
            let (s, c) = (-w * n as f64).sin_cos();
            acc + Complex::new(c, s) * h
        });
        z.norm()
    }

    /// Zero-phase filtering: y[n] = Σ h[k]·x[n + D − k] with D the group
    /// delay; samples outside the input count as zero.
    pub fn apply(&self, input: &SampleBuffer) -> Result<SampleBuffer, DspError> {
        if (input.sample_rate - self.sample_rate).abs() > 1e-9 {
            return Err(DspError::InvalidFilter("sample rate differs from the design rate"));
        }
        Ok(SampleBuffer::new(self.filter_slice(&input.samples)?, input.sample_rate))
    }

    pub fn filter_slice(&self, x: &[f64]) -> Result<Vec<f64>, DspError> {
        let n = x.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let n_fft = self.plan.len();
        let block = n_fft - self.taps.len() + 1;
        let full_len = n + self.taps.len() - 1;
        let mut full = alloc::vec![0.0; full_len];
        let mut buf = alloc::vec![Complex::new(0.0, 0.0); n_fft];
        for start in (0..n).step_by(block) {
            let end = (start + block).min(n);
            buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            for (b, &v) in buf.iter_mut().zip(&x[start..end]) {
                b.re = v;
            }
            self.plan.forward(&mut buf)?;
            buf.iter_mut().zip(&self.spectrum).for_each(|(b, h)| *b *= h);
            self.plan.inverse(&mut buf)?;
            let out_len = (end - start + self.taps.len() - 1).min(full_len - start);
            for (f, b) in full[start..start + out_len].iter_mut().zip(&buf) {
                *f += b.re;
            }
        }
        let d = self.group_delay();
        Ok(full[d..d + n].to_vec())
    }
}

/// Designs a filter for the buffer's rate and applies it.
pub fn highpass(rx: &SampleBuffer, cutoff: f64) -> Result<SampleBuffer, DspError> {
    HighpassFilter::design(cutoff, rx.sample_rate)?.apply(rx)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 44_100.0;

    fn tone(freq: f64, len: usize) -> SampleBuffer {
        SampleBuffer::new(
            (0..len).map(|n| (2.0 * PI * freq * n as f64 / FS).sin()).collect(),
            FS,
        )
    }

    fn mid_rms(x: &[f64]) -> f64 {
        let m = &x[x.len() / 4..3 * x.len() / 4];
        (m.iter().map(|v| v * v).sum::<f64>() / m.len() as f64).sqrt()
    }

    #[test]
    fn bessel_reference_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_45).abs() < 1e-10);
    }

    #[test]
    fn response_template() {
        let f = HighpassFilter::design(DEFAULT_HIGHPASS_CUTOFF, FS).unwrap();
        for i in 0..=300 {
            let freq = 15_000.0 * i as f64 / 300.0;
            let g = f.gain_at(freq);
            assert!(20.0 * g.log10() <= -40.0, "{freq} Hz: {g}");
        }
        for i in 0..=300 {
            let freq = 16_000.0 + 3_000.0 * i as f64 / 300.0;
            let db = 20.0 * f.gain_at(freq).log10();
            assert!(db.abs() <= 1.0, "{freq} Hz: {db} dB");
        }
    }

    #[test]
    fn low_tone_is_removed() {
        let x = tone(1_000.0, 8_000);
        let y = highpass(&x, DEFAULT_HIGHPASS_CUTOFF).unwrap();
        assert!(mid_rms(&y.samples) <= 0.01 * mid_rms(&x.samples));
    }

    #[test]
    fn band_tone_passes() {
        let x = tone(17_500.0, 8_000);
        let y = highpass(&x, DEFAULT_HIGHPASS_CUTOFF).unwrap();
        let ratio_db = 20.0 * (mid_rms(&y.samples) / mid_rms(&x.samples)).log10();
        assert!(ratio_db.abs() <= 1.0, "{ratio_db}");
    }

    #[test]
    fn output_is_aligned_with_input() {
        let x = tone(17_500.0, 4_000);
        let y = highpass(&x, DEFAULT_HIGHPASS_CUTOFF).unwrap();
        let mid = 1000..3000;
        let err = mid.map(|n| (y.samples[n] - x.samples[n]).abs()).fold(0.0, f64::max);
        assert!(err < 0.01, "{err}");
    }

    #[test]
    fn matches_direct_convolution() {
        let f = HighpassFilter::design(DEFAULT_HIGHPASS_CUTOFF, FS).unwrap();
        let x: Vec<f64> = (0..5000).map(|n| ((n * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let y = f.filter_slice(&x).unwrap();
        let h = f.taps();
        let d = f.group_delay() as isize;
        for n in [0usize, 17, 2500, 4999] {
            let mut acc = 0.0;
            for (k, &hk) in h.iter().enumerate() {
                let idx = n as isize + d - k as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc += hk * x[idx as usize];
                }
            }
            assert!((acc - y[n]).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let y = highpass(&SampleBuffer::zeros(500, FS), DEFAULT_HIGHPASS_CUTOFF).unwrap();
        assert!(y.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_cutoffs() {
        assert!(HighpassFilter::design(22_050.0, FS).is_err());
        assert!(HighpassFilter::design(500.0, FS).is_err());
    }
}
