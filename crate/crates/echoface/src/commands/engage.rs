use std::path::Path;

use anyhow::{ensure, Result};
use echoface_core::engagement::{EngagementReport, GenreId, SessionStats};
use echoface_core::ExpressionLabel;

use super::Outcome;
use crate::config::Settings;
use crate::formats;

/// Engagement report for a predicted label stream. The stream is ordered by
/// frame index. Without `length_min` the session length is the number of
/// predictions times the frame period.
pub fn report(
    labels: &[(usize, ExpressionLabel)],
    genre: GenreId,
    length_min: Option<f64>,
    frame_period_s: f64,
) -> Result<EngagementReport> {
    ensure!(!labels.is_empty(), "no predictions to score");
    let mut sorted = labels.to_vec();
    sorted.sort_by_key(|(i, _)| *i);
    ensure!(sorted.windows(2).all(|w| w[0].0 != w[1].0), "duplicate frame index in predictions");
    let stream: Vec<ExpressionLabel> = sorted.iter().map(|(_, l)| *l).collect();
    let length = length_min.unwrap_or(stream.len() as f64 * frame_period_s / 60.0);
    let stats = SessionStats::from_labels(&stream, length)?;
    Ok(EngagementReport::new(&stats, genre)?)
}

pub fn run(settings: &Settings, predictions: &Path, genre: Option<GenreId>, length_min: Option<f64>) -> Result<Outcome> {
    let Some(genre) = genre else {
        anyhow::bail!("engage needs --genre");
    };
    let rows = formats::read_predictions(predictions)?;
    let labels: Vec<(usize, ExpressionLabel)> = rows.iter().map(|r| (r.frame_index, r.label)).collect();
    let r = report(&labels, genre, length_min, settings.chirp.frame_period())?;
    let path = settings.out_dir()?.join("engagement.json");
    formats::write_json(&path, formats::ENGAGEMENT, &r)?;
    let indicator = match r.indicator {
        Some(true) => "engaged",
        Some(false) => "not engaged",
        None => "n/a",
    };
    let score = r.score.map_or("n/a".to_string(), |s| format!("{s:.2}"));
    println!("genre {}: {indicator} (rule {}), score {score}", genre.as_str(), r.rule.number());
    println!("wrote {}", path.display());
    Ok(Outcome::Success)
}
