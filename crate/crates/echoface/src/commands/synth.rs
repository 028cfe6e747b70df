use anyhow::{ensure, Result};

use super::Outcome;
use crate::config::Settings;
use crate::wav;

/// Writes `frames` transmit frames to `chirp.wav` in the output directory.
pub fn run(settings: &Settings, frames: usize) -> Result<Outcome> {
    ensure!(frames > 0, "--frames must be at least 1");
    let buf = settings.chirp.synthesize_frames(frames)?;
    let path = settings.out_dir()?.join("chirp.wav");
    wav::write_samples(&path, &buf)?;
    println!("frames: {frames}");
    println!("samples: {} ({} per frame)", buf.len(), settings.chirp.frame_len());
    println!("chirp rate: {} Hz/s", settings.chirp.chirp_rate());
    println!("wrote {}", path.display());
    Ok(Outcome::Success)
}
