//! Signal chain, channel simulator and classifiers for sensing facial
//! expressions with near-ultrasound FMCW chirps from a single speaker and a
//! single microphone.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, WAV/CSV/JSON
//! handling and the command-line front end live in the `echoface` crate.
//!
//! The receive chain is, in order: [`dsp::highpass`] → [`dsp::sync_delay`] →
//! [`dsp::analytic`] → [`dsp::dechirp`] → [`dsp::spectrum`] →
//! [`dsp::cancel_static`] → [`dsp::select_bin`] → [`dsp::extract_features`].
//! [`dsp::Receiver`] bundles those stages for whole recordings.

#![no_std]
#![warn(missing_debug_implementations)]
#![allow(clippy::too_many_arguments)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod channel;
pub mod chirp;
pub mod dsp;
pub mod engagement;
pub mod expression;
pub mod ml;
pub mod session;
pub mod sus;

mod math;

pub use channel::{Reflector, Scene, Trajectory};
pub use chirp::{ChirpConfig, Pcm16Buffer, SampleBuffer};
pub use expression::ExpressionLabel;

/// Complex sample type used throughout the receive chain.
pub type Complex = num_complex::Complex64;
