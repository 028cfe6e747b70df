//! One module per subcommand.

use anyhow::Result;
use echoface_core::channel::Scene;
use echoface_core::chirp::SampleBuffer;
use echoface_core::dsp::Receiver;
use echoface_core::session::{default_noise, default_room, session_scene, FaceModel, SessionPlan};

use crate::config::Settings;
use crate::wav::as_recorded;

pub mod demo;
pub mod engage;
pub mod learn;
pub mod pipeline;
pub mod simulate;
pub mod sus;
pub mod synth;
pub mod template;

/// How a command ended when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Demo ran to completion but at least one acceptance check failed.
    AcceptanceFailed,
}

/// A simulated session: the scene, the recording with the subject, and an
/// empty-room recording for the template, both as written to disk.
#[derive(Debug, Clone)]
pub struct RecordedSession {
    pub plan: SessionPlan,
    pub scene: Scene,
    pub n_frames: usize,
    pub rx: SampleBuffer,
    pub room: SampleBuffer,
}

/// Frames to record of the empty room: the calibration window plus one,
/// since synchronization may drop a trailing partial frame.
pub fn room_frames(receiver: &Receiver) -> usize {
    receiver.config().calibration_frames() + 1
}

pub fn record_session(settings: &Settings, receiver: &Receiver, plan: SessionPlan) -> Result<RecordedSession> {
    let scene = session_scene(&plan, &FaceModel::default(), &default_room(), Some(default_noise()))?;
    let n_frames = plan.frame_count(&settings.chirp);
    let tx = settings.chirp.synthesize_frames(n_frames)?;
    let rx = as_recorded(&scene.propagate(&tx)?);
    let room_tx = settings.chirp.synthesize_frames(room_frames(receiver))?;
    let room = as_recorded(&scene.without_subject().propagate(&room_tx)?);
    Ok(RecordedSession { plan, scene, n_frames, rx, room })
}
