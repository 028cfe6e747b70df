//! FMCW transmit signal: linear up-chirps separated by silence, and their
//! 16-bit PCM representation.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChirpError {
    #[error("invalid chirp configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("time {t} s outside the chirp interval [0, {duration}] s")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("frame count must be at least 1")]
    NoFrames,
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
}

/// Parameters of one chirp frame.
///
/// A frame is a chirp sweeping `f_min → f_max` over `duration` seconds
/// followed by `silence` seconds of zeros. The phase restarts at `phi_min` in
/// every frame.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ChirpConfig {
    /// Lower band edge, Hz.
    pub f_min: f64,
    /// Upper band edge, Hz.
    pub f_max: f64,
    /// Chirp duration, s.
    pub duration: f64,
    /// Silent gap after each chirp, s.
    pub silence: f64,
    /// Sample rate, Hz.
    pub sample_rate: f64,
    /// Phase at t = 0, rad.
    pub phi_min: f64,
    /// Peak amplitude of the synthesized chirp, in (0, 1].
    pub gain: f64,
}

impl Default for ChirpConfig {
    fn default() -> Self {
        Self {
            f_min: 16_000.0,
            f_max: 19_000.0,
            duration: 0.040,
            silence: 0.030,
            sample_rate: 44_100.0,
            phi_min: 0.0,
            gain: 1.0,
        }
    }
}

impl ChirpConfig {
    pub fn validate(&self) -> Result<(), ChirpError> {
        let finite = [
            self.f_min,
            self.f_max,
            self.duration,
            self.silence,
            self.sample_rate,
            self.phi_min,
            self.gain,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(ChirpError::InvalidConfig("all parameters must be finite"));
        }
        if self.sample_rate <= 0.0 {
            return Err(ChirpError::InvalidConfig("sample_rate must be positive"));
        }
        if !(0.0 < self.f_min && self.f_min < self.f_max) {
            return Err(ChirpError::InvalidConfig("need 0 < f_min < f_max"));
        }
        if self.f_max > self.sample_rate / 2.0 {
            return Err(ChirpError::InvalidConfig("f_max exceeds the Nyquist frequency"));
        }
        if self.duration <= 0.0 {
            return Err(ChirpError::InvalidConfig("duration must be positive"));
        }
        if self.silence < 0.0 {
            return Err(ChirpError::InvalidConfig("silence must be non-negative"));
        }
        if !(self.gain > 0.0 && self.gain <= 1.0) {
            return Err(ChirpError::InvalidConfig("gain must lie in (0, 1]"));
        }
        let c = self.chirp_rate();
        if !(c.is_finite() && c > 0.0) {
            return Err(ChirpError::InvalidConfig("chirp rate must be finite and positive"));
        }
        if self.chirp_len() == 0 {
            return Err(ChirpError::InvalidConfig("chirp shorter than one sample"));
        }
        Ok(())
    }

    /// Sweep slope c = (f_max − f_min) / T, Hz/s.
    pub fn chirp_rate(&self) -> f64 {
        (self.f_max - self.f_min) / self.duration
    }

    pub fn bandwidth(&self) -> f64 {
        self.f_max - self.f_min
    }

    /// Samples in the chirp, round(T·fs).
    pub fn chirp_len(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    /// Samples in the silent gap, round(T_sil·fs).
    pub fn silence_len(&self) -> usize {
        (self.silence * self.sample_rate).round() as usize
    }

    /// Chirp plus silence.
    pub fn frame_len(&self) -> usize {
        self.chirp_len() + self.silence_len()
    }

    /// Duration of one frame in seconds, measured in whole samples.
    pub fn frame_period(&self) -> f64 {
        self.frame_len() as f64 / self.sample_rate
    }

    fn check_time(&self, t: f64) -> Result<(), ChirpError> {
        if t.is_finite() && (0.0..=self.duration).contains(&t) {
            Ok(())
        } else {
            Err(ChirpError::TimeOutOfRange { t, duration: self.duration })
        }
    }

    /// f(t) = f_min + c·t.
    pub fn instantaneous_frequency(&self, t: f64) -> Result<f64, ChirpError> {
        self.check_time(t)?;
        Ok(self.f_min + self.chirp_rate() * t)
    }

    /// φ(t) = φ_min + 2π(c/2·t² + f_min·t).
    pub fn instantaneous_phase(&self, t: f64) -> Result<f64, ChirpError> {
        self.check_time(t)?;
        Ok(self.phase_unchecked(t))
    }

    fn phase_unchecked(&self, t: f64) -> f64 {
        self.phi_min + 2.0 * PI * (0.5 * self.chirp_rate() * t * t + self.f_min * t)
    }

    /// One chirp, sample n taken at t = n / fs.
    pub fn synthesize_chirp(&self) -> Result<SampleBuffer, ChirpError> {
        self.validate()?;
        let fs = self.sample_rate;
        let samples = (0..self.chirp_len())
            .map(|n| self.gain * self.phase_unchecked(n as f64 / fs).sin())
            .collect();
        Ok(SampleBuffer::new(samples, fs))
    }

    /// One chirp followed by its silent gap.
    pub fn synthesize_frame(&self) -> Result<SampleBuffer, ChirpError> {
        let mut buf = self.synthesize_chirp()?;
        buf.samples.resize(self.frame_len(), 0.0);
        Ok(buf)
    }

    /// `n_frames` consecutive frames, phase reset at the start of each.
    pub fn synthesize_frames(&self, n_frames: usize) -> Result<SampleBuffer, ChirpError> {
        if n_frames == 0 {
            return Err(ChirpError::NoFrames);
        }
        let frame = self.synthesize_frame()?;
        let mut samples = Vec::with_capacity(frame.len() * n_frames);
        for _ in 0..n_frames {
            samples.extend_from_slice(&frame.samples);
        }
        Ok(SampleBuffer::new(samples, self.sample_rate))
    }
}

/// Real-valued mono samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Self {
        Self { samples, sample_rate }
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self::new(alloc::vec![0.0; len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Sum of squares.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    /// Mean square; zero for an empty buffer.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    pub fn rms(&self) -> f64 {
        self.power().sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn check_finite(&self) -> Result<(), ChirpError> {
        match self.samples.iter().position(|s| !s.is_finite()) {
            Some(index) => Err(ChirpError::NonFinite { index }),
            None => Ok(()),
        }
    }

    /// Scales the buffer so its peak is at most 1. Buffers already inside
    /// [−1, 1] are left untouched. Returns the applied gain.
    pub fn normalize_peak(&mut self) -> f64 {
        let peak = self.peak();
        if peak > 1.0 {
            let g = 1.0 / peak;
            self.samples.iter_mut().for_each(|s| *s *= g);
            g
        } else {
            1.0
        }
    }
}

/// Full-scale code for ±1.0. The encoding is symmetric; −32768 is never
/// produced.
pub const PCM16_FULL_SCALE: f64 = 32767.0;

/// Signed 16-bit mono PCM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pcm16Buffer {
    pub codes: Vec<i16>,
    pub sample_rate: u32,
    /// Samples that fell outside [−1, 1] (or were not finite) and were clipped.
    pub clipped: usize,
}

pub fn quantize_pcm16(buf: &SampleBuffer) -> Pcm16Buffer {
    let mut clipped = 0;
    let codes = buf
        .samples
        .iter()
        .map(|&s| {
            let s = if !s.is_finite() {
                clipped += 1;
                0.0
            } else if s.abs() > 1.0 {
                clipped += 1;
                s.signum()
            } else {
                s
            };
            (s * PCM16_FULL_SCALE).round() as i16
        })
        .collect();
    Pcm16Buffer {
        codes,
        sample_rate: buf.sample_rate.round() as u32,
        clipped,
    }
}

pub fn dequantize_pcm16(pcm: &Pcm16Buffer) -> SampleBuffer {
    let samples = pcm
        .codes
        .iter()
        .map(|&c| (f64::from(c) / PCM16_FULL_SCALE).max(-1.0))
        .collect();
    SampleBuffer::new(samples, f64::from(pcm.sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg() -> ChirpConfig {
        ChirpConfig::default()
    }

    #[test]
    fn frequency_at_band_edges_and_midpoint() {
        let c = cfg();
        assert_eq!(c.chirp_rate(), 75_000.0);
        assert_eq!(c.instantaneous_frequency(0.0).unwrap(), 16_000.0);
        assert_relative_eq!(c.instantaneous_frequency(0.040).unwrap(), 19_000.0, epsilon = 1e-9);
        assert_relative_eq!(c.instantaneous_frequency(0.020).unwrap(), 17_500.0, epsilon = 1e-9);
    }

    #[test]
    fn time_outside_chirp_is_rejected() {
        let c = cfg();
        assert!(matches!(c.instantaneous_frequency(-1e-6), Err(ChirpError::TimeOutOfRange { .. })));
        assert!(c.instantaneous_phase(0.0401).is_err());
        assert!(c.instantaneous_phase(f64::NAN).is_err());
    }

    #[test]
    fn phase_values() {
        let mut c = cfg();
        assert_eq!(c.instantaneous_phase(0.0).unwrap(), 0.0);
        // 2π(0.5·75000·1e-6 + 16000·0.001) = 2π·16.0375
        assert_relative_eq!(
            c.instantaneous_phase(0.001).unwrap(),
            2.0 * PI * 16.0375,
            max_relative = 1e-12
        );
        c.phi_min = 1.5;
        assert_eq!(c.instantaneous_phase(0.0).unwrap(), 1.5);
    }

    #[test]
    fn phase_derivative_is_two_pi_f() {
        // Central differences of the analytic phase at seeded times.
        let c = cfg();
        let mut state = 0x2545_f491_4f6c_dd1d_u64;
        for _ in 0..100 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let h = 1e-7;
            let t = h + u * (c.duration - 2.0 * h);
            let d = (c.instantaneous_phase(t + h).unwrap() - c.instantaneous_phase(t - h).unwrap())
                / (2.0 * h);
            let f = c.instantaneous_frequency(t).unwrap();
            assert!(((d - 2.0 * PI * f) / (2.0 * PI * f)).abs() < 1e-6);
        }
    }

    #[test]
    fn chirp_and_frame_lengths() {
        let c = cfg();
        let chirp = c.synthesize_chirp().unwrap();
        assert_eq!(chirp.len(), 1764);
        assert_eq!(chirp.samples[0], 0.0);
        let frame = c.synthesize_frame().unwrap();
        assert_eq!(frame.len(), 3087);
        assert!(frame.samples[1764..].iter().all(|&s| s == 0.0));
        assert_eq!(frame.samples[1764..].len(), 1323);
        assert_eq!(frame.energy(), chirp.energy());
        assert_eq!(c.frame_len(), c.chirp_len() + c.silence_len());
    }

    #[test]
    fn zero_silence_frame_equals_chirp() {
        let c = ChirpConfig { silence: 0.0, ..cfg() };
        assert_eq!(c.synthesize_frame().unwrap(), c.synthesize_chirp().unwrap());
    }

    #[test]
    fn synthesis_is_deterministic() {
        let a = cfg().synthesize_frames(3).unwrap();
        let b = cfg().synthesize_frames(3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3 * 3087);
        assert_eq!(cfg().synthesize_frames(0), Err(ChirpError::NoFrames));
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let bad = [
            ChirpConfig { f_min: 0.0, ..cfg() },
            ChirpConfig { f_max: 15_000.0, ..cfg() },
            ChirpConfig { f_max: 23_000.0, ..cfg() },
            ChirpConfig { duration: 0.0, ..cfg() },
            ChirpConfig { silence: -0.1, ..cfg() },
            ChirpConfig { gain: 1.5, ..cfg() },
            ChirpConfig { sample_rate: f64::NAN, ..cfg() },
        ];
        for b in bad {
            assert!(b.validate().is_err(), "{b:?}");
        }
    }

    #[test]
    fn pcm_fixed_points() {
        let buf = SampleBuffer::new(vec![0.0, 1.0, -1.0, 1.5, f64::NAN], 44_100.0);
        let pcm = quantize_pcm16(&buf);
        assert_eq!(pcm.codes, vec![0, 32767, -32767, 32767, 0]);
        assert_eq!(pcm.clipped, 2);
        let back = dequantize_pcm16(&pcm);
        assert_eq!(back.samples[0], 0.0);
        assert!((back.samples[1] - 1.0).abs() <= 1.0 / 32767.0);
        assert_eq!(back.samples[2], -1.0);
        assert_eq!(
            dequantize_pcm16(&Pcm16Buffer { codes: vec![i16::MIN], sample_rate: 8000, clipped: 0 })
                .samples[0],
            -1.0
        );
    }

    proptest! {
        #[test]
        fn pcm_roundtrip_error_bounded(xs in proptest::collection::vec(-1.0f64..=1.0, 1..512)) {
            let buf = SampleBuffer::new(xs, 44_100.0);
            let pcm = quantize_pcm16(&buf);
            prop_assert_eq!(pcm.clipped, 0);
            let back = dequantize_pcm16(&pcm);
            for (a, b) in buf.samples.iter().zip(&back.samples) {
                prop_assert!((a - b).abs() <= 1.0 / 32767.0);
            }
        }

        #[test]
        fn frequency_is_affine_with_slope_c(t1 in 0.0f64..0.04, t2 in 0.0f64..0.04) {
            let c = cfg();
            let f1 = c.instantaneous_frequency(t1).unwrap();
            let f2 = c.instantaneous_frequency(t2).unwrap();
            prop_assert!((f2 - f1 - c.chirp_rate() * (t2 - t1)).abs() < 1e-8);
        }
    }
}
