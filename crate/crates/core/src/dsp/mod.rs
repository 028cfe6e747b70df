//! Receive chain: filtering, synchronization, dechirping, spectra, static
//! cancellation, bin selection and feature extraction.

mod features;
pub mod fft;
mod filter;
mod hilbert;
mod receiver;
mod select;
mod spectrum;
mod template;
mod xcorr;

pub use features::{extract_features, unwrap_phase, BinFeatures};
pub use filter::{highpass, HighpassFilter, DEFAULT_HIGHPASS_CUTOFF};
pub use hilbert::{analytic, dechirp};
pub use receiver::{Receiver, ReceiverConfig, ReceiverOutput, DEFAULT_MAX_RANGE_M};
pub use select::{select_bin, select_bin_below, BinSelection, SelectionMetric};
pub use spectrum::{spectrum, FrameSpectrum, SpectrumConfig, Window};
pub use template::{cancel_static, capture_template, Template};
pub use xcorr::{sync_delay, sync_delay_within, xcorr};

use crate::channel::ChannelError;
use crate::chirp::ChirpError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DspError {
    #[error("FFT length {0} is not a power of two")]
    FftLength(usize),
    #[error("FFT length {n_fft} is shorter than the {len}-sample input")]
    FftTooShort { n_fft: usize, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("correlation undefined: input has zero variance")]
    ZeroVariance,
    #[error("shift {shift} outside ±{len}")]
    ShiftOutOfRange { shift: isize, len: usize },
    #[error("need at least 2 frames for bin selection, got {0}")]
    TooFewFrames(usize),
    #[error("bin {bin} out of range for {bins} bins")]
    BinOutOfRange { bin: usize, bins: usize },
    #[error("template must average at least one frame")]
    EmptyTemplate,
    #[error("invalid filter: {0}")]
    InvalidFilter(&'static str),
    #[error("invalid receiver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error(transparent)]
    Chirp(#[from] ChirpError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Minimum separation of two reflectors that land in different beat bins:
/// v / (2·B), in metres.
pub fn range_resolution(bandwidth_hz: f64, speed_of_sound: f64) -> f64 {
    speed_of_sound / (2.0 * bandwidth_hz)
}
