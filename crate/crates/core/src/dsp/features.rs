use alloc::vec::Vec;
use core::f64::consts::PI;

use super::spectrum::FrameSpectrum;
use super::DspError;

/// Amplitude and phase of the selected bin in one frame, plus the absolute
/// change from the previous frame (zero for the first frame).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinFeatures {
    pub frame_index: usize,
    pub bin: usize,
    pub amplitude: f64,
    /// Unwrapped across frames, rad.
    pub phase: f64,
    pub d_amplitude: f64,
    pub d_phase: f64,
}

/// Removes 2π jumps so consecutive values differ by at most π.
pub fn unwrap_phase(phase: &mut [f64]) {
    let two_pi = 2.0 * PI;
    let mut offset = 0.0;
    let mut prev = match phase.first() {
        Some(&p) => p,
        None => return,
    };
    for p in phase.iter_mut().skip(1) {
        let raw = *p;
        let mut d = raw - prev;
        while d > PI {
            d -= two_pi;
            offset -= two_pi;
        }
        while d < -PI {
            d += two_pi;
            offset += two_pi;
        }
        prev = raw;
        *p = raw + offset;
    }
}

pub fn extract_features(frames: &[FrameSpectrum], bin: usize) -> Result<Vec<BinFeatures>, DspError> {
    if let Some(f) = frames.iter().find(|f| bin >= f.len()) {
        return Err(DspError::BinOutOfRange { bin, bins: f.len() });
    }
    let mut phase: Vec<f64> = frames.iter().map(|f| f.bins[bin].arg()).collect();
    unwrap_phase(&mut phase);
    let mut out: Vec<BinFeatures> = Vec::with_capacity(frames.len());
    for (f, &ph) in frames.iter().zip(&phase) {
        let amplitude = f.bins[bin].norm();
        let (d_amplitude, d_phase) = match out.last() {
            Some(prev) => ((amplitude - prev.amplitude).abs(), (ph - prev.phase).abs()),
            None => (0.0, 0.0),
        };
        out.push(BinFeatures { frame_index: f.frame_index, bin, amplitude, phase: ph, d_amplitude, d_phase });
    }
    Ok(out)
}
