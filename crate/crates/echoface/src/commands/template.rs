use std::path::Path;

use anyhow::{bail, Context, Result};
use echoface_core::channel::Scene;
use echoface_core::dsp::{Receiver, Template};

use super::{room_frames, Outcome};
use crate::config::Settings;
use crate::formats;
use crate::wav::{self, as_recorded};

/// Averages the spectra of an empty-room recording into `template.json`.
/// Without `--input`, the static part of `--scene` is simulated instead.
pub fn run(settings: &Settings, input: Option<&Path>) -> Result<Outcome> {
    let receiver = Receiver::new(settings.receiver_config())?;
    let rx = match (input, &settings.scene) {
        (Some(path), _) => wav::read_samples(path)?,
        (None, Some(scene_path)) => {
            let scene: Scene = formats::read_json(scene_path, formats::SCENE)?;
            let tx = settings.chirp.synthesize_frames(room_frames(&receiver))?;
            as_recorded(&scene.without_subject().propagate(&tx)?)
        }
        (None, None) => bail!("template needs an empty-room recording (--input) or a scene (--scene)"),
    };
    let (_, spectra) = receiver.spectra(&rx)?;
    let template = Template::from_spectra(&spectra).context("recording holds no whole frame")?;
    let path = settings.out_dir()?.join("template.json");
    formats::write_json(&path, formats::TEMPLATE, &template)?;
    println!("template from {} frames, {} bins: {}", template.frames_averaged, template.len(), path.display());
    Ok(Outcome::Success)
}
