use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::fft::FftPlan;
use super::DspError;
use crate::Complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Window {
    #[default]
    Rectangular,
    /// Symmetric Hann taper over the chirp-active samples.
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => alloc::vec![1.0; len],
            Window::Hann if len < 2 => alloc::vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumConfig {
    /// Transform length; a power of two no shorter than the input.
    pub n_fft: usize,
    /// Leading samples that carry the chirp; the rest of the frame is
    /// dropped before the transform. `None` keeps the whole input.
    pub active_len: Option<usize>,
    pub window: Window,
    pub sample_rate: f64,
}

/// One-sided spectrum of a dechirped frame: bins 0..=n_fft/2.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpectrum {
    pub bins: Vec<Complex>,
    /// Hz per bin, fs / n_fft.
    pub bin_resolution: f64,
    pub frame_index: usize,
}

impl FrameSpectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_resolution
    }

    /// Index of the largest-magnitude bin; ties go to the lower bin.
    pub fn peak_bin(&self) -> usize {
        let mut best = 0;
        for (i, z) in self.bins.iter().enumerate() {
            if z.norm_sqr() > self.bins[best].norm_sqr() {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SpectrumAnalyzer {
    config: SpectrumConfig,
    plan: FftPlan,
    window: Vec<f64>,
}

impl SpectrumAnalyzer {
    pub(crate) fn new(config: SpectrumConfig, frame_len: usize) -> Result<Self, DspError> {
        if config.n_fft < frame_len {
            return Err(DspError::FftTooShort { n_fft: config.n_fft, len: frame_len });
        }
        if !(config.sample_rate.is_finite() && config.sample_rate > 0.0) {
            return Err(DspError::InvalidConfig("sample rate must be positive"));
        }
        let plan = FftPlan::new(config.n_fft)?;
        let active = config.active_len.unwrap_or(frame_len).min(frame_len);
        Ok(Self { config, plan, window: config.window.coefficients(active) })
    }

    pub(crate) fn analyze(&self, r_m: &[f64], frame_index: usize) -> Result<FrameSpectrum, DspError> {
        let n = self.config.n_fft;
        if r_m.len() > n {
            return Err(DspError::FftTooShort { n_fft: n, len: r_m.len() });
        }
        let active = self.window.len().min(r_m.len());
        let mut buf = alloc::vec![Complex::new(0.0, 0.0); n];
        for ((b, &v), &w) in buf.iter_mut().zip(&r_m[..active]).zip(&self.window) {
            b.re = v * w;
        }
        self.plan.forward(&mut buf)?;
        buf.truncate(n / 2 + 1);
        Ok(FrameSpectrum {
            bins: buf,
            bin_resolution: self.config.sample_rate / n as f64,
            frame_index,
        })
    }
}

/// Windowed transform of the chirp-active portion of a dechirped frame.
pub fn spectrum(
    r_m: &[f64],
    config: &SpectrumConfig,
    frame_index: usize,
) -> Result<FrameSpectrum, DspError> {
    SpectrumAnalyzer::new(*config, r_m.len())?.analyze(r_m, frame_index)
}
