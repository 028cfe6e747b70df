use anyhow::{ensure, Result};
use echoface_core::channel::Scene;
use echoface_core::dsp::Receiver;
use echoface_core::session::{frame_truth, FrameTruth, SessionPlan};
use serde::{Deserialize, Serialize};

use super::{record_session, room_frames, Outcome};
use crate::config::Settings;
use crate::formats::{self, LabelRow};
use crate::wav::{self, as_recorded, RECORDING_GAIN};

/// Frames simulated from a scene file when `--frames` is not given.
pub const DEFAULT_SCENE_FRAMES: usize = 100;

/// Ground truth for a simulated recording, one entry per transmitted frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub sample_rate: f64,
    pub frame_len: usize,
    pub frame_period_s: f64,
    /// Scale applied before quantization to 16 bits.
    pub recording_gain: f64,
    pub reflectors: Vec<String>,
    pub plan: Option<SessionPlan>,
    pub frames: Vec<FrameTruth>,
}

/// Writes `rx.wav`, `room.wav`, `truth.json`, `scene.json` and, for
/// simulated sessions, `labels.csv`.
///
/// With `--scene` the file's scene is propagated as is. Otherwise session
/// `session` of the configured plan is simulated in the default room.
pub fn run(settings: &Settings, frames: Option<usize>, session: u32) -> Result<Outcome> {
    let receiver = Receiver::new(settings.receiver_config())?;
    let out = settings.out_dir()?;
    let (scene, plan, n_frames, rx, room) = match &settings.scene {
        Some(path) => {
            let mut scene: Scene = formats::read_json(path, formats::SCENE)?;
            if let Some(seed) = settings.seed {
                scene.seed = seed;
            }
            let n = frames.unwrap_or(DEFAULT_SCENE_FRAMES);
            ensure!(n > 0, "--frames must be at least 1");
            let rx = as_recorded(&scene.propagate(&settings.chirp.synthesize_frames(n)?)?);
            let room_tx = settings.chirp.synthesize_frames(room_frames(&receiver))?;
            let room = as_recorded(&scene.without_subject().propagate(&room_tx)?);
            (scene, None, n, rx, room)
        }
        None => {
            ensure!(frames.is_none(), "--frames applies to --scene simulations; session length follows the plan");
            let plan = settings.session.plan(settings.seed()?, session);
            let r = record_session(settings, &receiver, plan)?;
            (r.scene, Some(r.plan), r.n_frames, r.rx, r.room)
        }
    };

    wav::write_samples(&out.join("rx.wav"), &rx)?;
    wav::write_samples(&out.join("room.wav"), &room)?;
    let truth_frames = match &plan {
        Some(p) => frame_truth(p, &scene, &settings.chirp, n_frames),
        None => {
            let empty = SessionPlan { rest_s: 0.0, ramp_s: 0.0, blocks: Vec::new(), seed: scene.seed };
            frame_truth(&empty, &scene, &settings.chirp, n_frames)
        }
    };
    if plan.is_some() {
        let labels: Vec<LabelRow> = truth_frames
            .iter()
            .filter_map(|f| f.label.map(|label| LabelRow { frame_index: f.frame_index, label }))
            .collect();
        formats::write_labels(&out.join("labels.csv"), &labels)?;
    }
    let truth = Truth {
        sample_rate: settings.chirp.sample_rate,
        frame_len: settings.chirp.frame_len(),
        frame_period_s: settings.chirp.frame_period(),
        recording_gain: RECORDING_GAIN,
        reflectors: scene.reflectors.iter().map(|r| r.name.clone()).collect(),
        plan,
        frames: truth_frames,
    };
    formats::write_json(&out.join("truth.json"), formats::TRUTH, &truth)?;
    formats::write_json(&out.join("scene.json"), formats::SCENE, &scene)?;
    println!("simulated {n_frames} frames ({} samples) into {}", rx.len(), out.display());
    Ok(Outcome::Success)
}
