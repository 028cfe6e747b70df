use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::features::{extract_features, BinFeatures};
use super::fft::FftPlan;
use super::filter::{HighpassFilter, DEFAULT_HIGHPASS_CUTOFF};
use super::hilbert::{analytic_with, dechirp};
use super::select::{select_bin_below, BinSelection, SelectionMetric};
use super::spectrum::{FrameSpectrum, SpectrumAnalyzer, SpectrumConfig, Window};
use super::template::{cancel_static, Template};
use super::xcorr::sync_delay_within;
use super::DspError;
use crate::channel::round_trip_delay;
use crate::chirp::{ChirpConfig, SampleBuffer};
use crate::math::next_pow2;
use crate::Complex;

/// Default search range for bin selection, m.
pub const DEFAULT_MAX_RANGE_M: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ReceiverConfig {
    pub chirp: ChirpConfig,
    /// Transform length; `None` picks the next power of two ≥ frame length.
    pub n_fft: Option<usize>,
    /// High-pass cutoff in Hz; `None` skips filtering.
    pub highpass_cutoff: Option<f64>,
    pub window: Window,
    pub metric: SelectionMetric,
    /// Length of the bin-selection window at the start of a recording, s.
    pub calibration_s: f64,
    /// Farthest one-way distance, m, whose beat bin is a selection
    /// candidate. `None` searches every bin.
    pub max_range_m: Option<f64>,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            chirp: ChirpConfig::default(),
            n_fft: None,
            highpass_cutoff: Some(DEFAULT_HIGHPASS_CUTOFF),
            window: Window::Hann,
            metric: SelectionMetric::ComplexVariance,
            calibration_s: 4.0,
            max_range_m: Some(DEFAULT_MAX_RANGE_M),
        }
    }
}

impl ReceiverConfig {
    pub fn resolved_n_fft(&self) -> usize {
        self.n_fft.unwrap_or_else(|| next_pow2(self.chirp.frame_len()))
    }

    /// Number of candidate bins for selection.
    pub fn selection_bins(&self) -> usize {
        let n_bins = self.resolved_n_fft() / 2 + 1;
        match self.max_range_m {
            Some(r) => {
                let res = self.chirp.sample_rate / self.resolved_n_fft() as f64;
                let beat = self.chirp.chirp_rate() * round_trip_delay(r);
                ((beat / res).ceil() as usize + 1).min(n_bins)
            }
            None => n_bins,
        }
    }

    /// Frames in the bin-selection window, at least 2.
    pub fn calibration_frames(&self) -> usize {
        ((self.calibration_s / self.chirp.frame_period()).round() as usize).max(2)
    }
}

/// Everything [`Receiver::process`] produces for one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput {
    /// Offset of the first received frame, samples.
    pub sync_delay: isize,
    /// Spectra after static cancellation (or raw spectra without a template).
    pub spectra: Vec<FrameSpectrum>,
    pub selection: BinSelection,
    pub features: Vec<BinFeatures>,
}

/// Receive chain for one chirp configuration: high-pass, synchronization,
/// analytic signal, dechirp and spectrum, with the transmit reference and
/// transform plans prepared once.
#[derive(Debug, Clone)]
pub struct Receiver {
    config: ReceiverConfig,
    tx_frame: Vec<f64>,
    tx_analytic: Vec<Complex>,
    hilbert_plan: FftPlan,
    filter: Option<HighpassFilter>,
    analyzer: SpectrumAnalyzer,
}

impl Receiver {
    pub fn new(config: ReceiverConfig) -> Result<Self, DspError> {
        config.chirp.validate()?;
        if !(config.calibration_s.is_finite() && config.calibration_s > 0.0) {
            return Err(DspError::InvalidConfig("calibration window must be positive"));
        }
        if config.max_range_m.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
            return Err(DspError::InvalidConfig("maximum range must be positive"));
        }
        let fs = config.chirp.sample_rate;
        let tx_frame = config.chirp.synthesize_frame()?.samples;
        let frame_len = tx_frame.len();
        let hilbert_plan = FftPlan::new(next_pow2(2 * frame_len))?;
        let tx_analytic = analytic_with(&hilbert_plan, &tx_frame)?;
        let filter = match config.highpass_cutoff {
            Some(cutoff) => Some(HighpassFilter::design(cutoff, fs)?),
            None => None,
        };
        let analyzer = SpectrumAnalyzer::new(
            SpectrumConfig {
                n_fft: config.resolved_n_fft(),
                active_len: Some(config.chirp.chirp_len()),
                window: config.window,
                sample_rate: fs,
            },
            frame_len,
        )?;
        Ok(Self { config, tx_frame, tx_analytic, hilbert_plan, filter, analyzer })
    }

    pub fn config(&self) -> &ReceiverConfig {
        &self.config
    }

    pub fn frame_len(&self) -> usize {
        self.tx_frame.len()
    }

    pub fn tx_frame(&self) -> &[f64] {
        &self.tx_frame
    }

    fn check_rate(&self, rx: &SampleBuffer) -> Result<(), DspError> {
        if (rx.sample_rate - self.config.chirp.sample_rate).abs() > 1e-9 {
            return Err(DspError::InvalidConfig("recording sample rate differs from the chirp"));
        }
        Ok(())
    }

    /// High-pass stage; a copy of the input when filtering is disabled.
    pub fn highpass(&self, rx: &SampleBuffer) -> Result<SampleBuffer, DspError> {
        self.check_rate(rx)?;
        match &self.filter {
            Some(f) => f.apply(rx),
            None => Ok(rx.clone()),
        }
    }

    /// Offset of the first frame in a (filtered) recording, found by
    /// correlating the transmitted frame against the first frame's worth of
    /// received samples.
    pub fn sync(&self, rx: &[f64]) -> Result<isize, DspError> {
        let l = self.frame_len();
        let mut head: Vec<f64> = rx.iter().take(l).copied().collect();
        head.resize(l, 0.0);
        sync_delay_within(&self.tx_frame, &head, l - 1)
    }

    /// Whole frames available after `offset`.
    pub fn frame_count(&self, rx_len: usize, offset: isize) -> usize {
        let avail = rx_len as isize - offset;
        if avail <= 0 {
            0
        } else {
            avail as usize / self.frame_len()
        }
    }

    /// Analytic signal of frame `m` of a filtered recording.
    pub fn frame_analytic(&self, rx: &[f64], offset: isize, m: usize) -> Result<Vec<Complex>, DspError> {
        let l = self.frame_len();
        let start = offset + (m * l) as isize;
        let segment: Vec<f64> = (0..l as isize)
            .map(|i| {
                let idx = start + i;
                if idx >= 0 && (idx as usize) < rx.len() { rx[idx as usize] } else { 0.0 }
            })
            .collect();
        analytic_with(&self.hilbert_plan, &segment)
    }

    /// Beat signal of one frame's analytic signal against the transmit frame.
    pub fn frame_dechirp(&self, rx_analytic: &[Complex]) -> Result<Vec<f64>, DspError> {
        dechirp(&self.tx_analytic, rx_analytic)
    }

    /// Spectrum of a beat signal, tagged with frame index `m`.
    pub fn beat_spectrum(&self, beat: &[f64], m: usize) -> Result<FrameSpectrum, DspError> {
        self.analyzer.analyze(beat, m)
    }

    /// Spectrum of frame `m` of a filtered recording.
    pub fn frame_spectrum(&self, rx: &[f64], offset: isize, m: usize) -> Result<FrameSpectrum, DspError> {
        let rx_analytic = self.frame_analytic(rx, offset, m)?;
        let r_m = self.frame_dechirp(&rx_analytic)?;
        self.beat_spectrum(&r_m, m)
    }

    /// Spectra of every whole frame in a filtered recording.
    pub fn frame_spectra(&self, rx: &[f64], offset: isize) -> Result<Vec<FrameSpectrum>, DspError> {
        (0..self.frame_count(rx.len(), offset))
            .map(|m| self.frame_spectrum(rx, offset, m))
            .collect()
    }

    /// High-pass, sync, and per-frame spectra. Returns the sync offset too.
    pub fn spectra(&self, rx: &SampleBuffer) -> Result<(isize, Vec<FrameSpectrum>), DspError> {
        let filtered = self.highpass(rx)?;
        let offset = self.sync(&filtered.samples)?;
        Ok((offset, self.frame_spectra(&filtered.samples, offset)?))
    }

    pub fn cancel(&self, spectra: &[FrameSpectrum], template: &Template) -> Result<Vec<FrameSpectrum>, DspError> {
        spectra.iter().map(|f| cancel_static(f, template)).collect()
    }

    /// Bin selection over the calibration window at the start of `spectra`.
    pub fn select(&self, spectra: &[FrameSpectrum]) -> Result<BinSelection, DspError> {
        let n = self.config.calibration_frames().min(spectra.len());
        select_bin_below(&spectra[..n], self.config.metric, self.config.selection_bins())
    }

    /// Full chain for one recording. Without a template the raw spectra are
    /// used for selection and features.
    pub fn process(&self, rx: &SampleBuffer, template: Option<&Template>) -> Result<ReceiverOutput, DspError> {
        let (sync_delay, raw) = self.spectra(rx)?;
        let spectra = match template {
            Some(t) => self.cancel(&raw, t)?,
            None => raw,
        };
        let selection = self.select(&spectra)?;
        let features = extract_features(&spectra, selection.bin)?;
        Ok(ReceiverOutput { sync_delay, spectra, selection, features })
    }

    /// Beat-frequency bin of a path with round-trip delay `delay_s`, relative
    /// to a sync offset of `sync_delay` samples.
    pub fn beat_bin(&self, delay_s: f64, sync_delay: isize) -> usize {
        let fs = self.config.chirp.sample_rate;
        let tau = delay_s - sync_delay as f64 / fs;
        let res = fs / self.config.resolved_n_fft() as f64;
        (self.config.chirp.chirp_rate() * tau / res).round().max(0.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Reflector, Scene};

    fn receiver() -> Receiver {
        Receiver::new(ReceiverConfig::default()).unwrap()
    }

    #[test]
    fn defaults() {
        let cfg = ReceiverConfig::default();
        assert_eq!(cfg.resolved_n_fft(), 4096);
        assert_eq!(cfg.calibration_frames(), 57);
        assert_eq!(ReceiverConfig { calibration_s: 0.01, ..cfg }.calibration_frames(), 2);
        assert!(Receiver::new(ReceiverConfig { calibration_s: 0.0, ..cfg }).is_err());
        assert!(Receiver::new(ReceiverConfig { n_fft: Some(2048), ..cfg }).is_err());
    }

    #[test]
    fn frame_count_and_rate_check() {
        let r = receiver();
        assert_eq!(r.frame_count(3087 * 5, 0), 5);
        assert_eq!(r.frame_count(3087 * 5, 10), 4);
        assert_eq!(r.frame_count(100, 200), 0);
        let wrong = SampleBuffer::zeros(10_000, 48_000.0);
        assert!(matches!(r.highpass(&wrong), Err(DspError::InvalidConfig(_))));
    }

    #[test]
    fn static_path_lands_in_its_beat_bin() {
        let r = Receiver::new(ReceiverConfig { highpass_cutoff: None, ..ReceiverConfig::default() }).unwrap();
        let tx = r.config().chirp.synthesize_frames(4).unwrap();
        let direct = Reflector::fixed(0.0, 0.8);
        let echo = Reflector::fixed(2.0e-3, 0.3);
        let rx = Scene::new(vec![direct.clone(), echo], 0).propagate(&tx).unwrap();
        let (offset, spectra) = r.spectra(&rx).unwrap();
        assert_eq!(offset, 0);
        assert_eq!(spectra.len(), 4);
        let expected = r.beat_bin(2.0e-3, offset);
        assert_eq!(expected, 14);
        let template = Template::from_spectra(&r.spectra(&Scene::new(vec![direct], 0).propagate(&tx).unwrap()).unwrap().1)
            .unwrap();
        let cancelled = r.cancel(&spectra, &template).unwrap();
        assert_eq!(cancelled[2].peak_bin(), expected);
    }

    #[test]
    fn process_is_deterministic() {
        let r = receiver();
        let tx = r.config().chirp.synthesize_frames(8).unwrap();
        let rx = Scene::new(vec![Reflector::fixed(4.0 / 44_100.0, 0.9), Reflector::fixed(1.7e-3, 0.3)], 0).propagate(&tx).unwrap();
        let a = r.process(&rx, None).unwrap();
        assert_eq!(a, r.process(&rx, None).unwrap());
        assert_eq!(a.sync_delay, 4);
        assert_eq!(a.features.len(), 7);
        assert_eq!(a.spectra[0].len(), 2049);
    }
}
