use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Result};
use echoface_core::channel::SPEED_OF_SOUND;
use echoface_core::chirp::SampleBuffer;
use echoface_core::dsp::{extract_features, BinFeatures, BinSelection, FrameSpectrum, Receiver, SelectionMetric, Template};
use serde::{Deserialize, Serialize};

use super::Outcome;
use crate::config::Settings;
use crate::formats::{self, FeatureRow};
use crate::wav;

/// Output of the receive chain for one recording.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub sync_delay: isize,
    pub spectra: Vec<FrameSpectrum>,
    pub selection: BinSelection,
    pub features: Vec<BinFeatures>,
}

/// Wall-clock time spent in each stage, summed over frames.
#[derive(Debug, Clone, Default)]
pub struct StageTimes(pub Vec<(&'static str, Duration)>);

impl StageTimes {
    fn add(&mut self, stage: &'static str, d: Duration) {
        match self.0.iter_mut().find(|(s, _)| *s == stage) {
            Some((_, total)) => *total += d,
            None => self.0.push((stage, d)),
        }
    }

    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.add(stage, start.elapsed());
        out
    }
}

/// Runs every stage of the receive chain with per-stage timing.
pub fn run_chain(receiver: &Receiver, rx: &SampleBuffer, template: Option<&Template>) -> Result<(ChainOutput, StageTimes)> {
    let mut t = StageTimes::default();
    let filtered = t.time("highpass", || receiver.highpass(rx))?;
    let sync_delay = t.time("sync", || receiver.sync(&filtered.samples))?;
    let n = receiver.frame_count(filtered.len(), sync_delay);
    ensure!(n >= 2, "recording holds {n} whole frame(s) after synchronization; at least 2 are needed");
    let mut spectra = Vec::with_capacity(n);
    for m in 0..n {
        let a = t.time("analytic", || receiver.frame_analytic(&filtered.samples, sync_delay, m))?;
        let r = t.time("dechirp", || receiver.frame_dechirp(&a))?;
        spectra.push(t.time("spectrum", || receiver.beat_spectrum(&r, m))?);
    }
    if let Some(tpl) = template {
        spectra = t.time("cancel", || receiver.cancel(&spectra, tpl))?;
    }
    let selection = t.time("select_bin", || receiver.select(&spectra))?;
    let features = t.time("extract_features", || extract_features(&spectra, selection.bin))?;
    Ok((ChainOutput { sync_delay, spectra, selection, features }, t))
}

/// Summary written next to the features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub sync_delay: isize,
    pub frames: usize,
    pub bins: usize,
    pub calibration_frames: usize,
    pub cancelled: bool,
    pub metric: SelectionMetric,
    pub bin: usize,
    pub bin_frequency_hz: f64,
    /// Round-trip delay the selected bin corresponds to, s.
    pub path_delay_s: f64,
    /// One-way distance for that delay, m.
    pub distance_m: f64,
    pub max_score: f64,
    pub median_score: f64,
    pub low_confidence: bool,
    /// Score of every candidate bin.
    pub scores: Vec<f64>,
}

impl SelectionReport {
    pub fn new(receiver: &Receiver, out: &ChainOutput, cancelled: bool) -> Self {
        let chirp = &receiver.config().chirp;
        let res = out.spectra[0].bin_resolution;
        let freq = out.selection.bin as f64 * res;
        let path_delay_s = freq / chirp.chirp_rate() + out.sync_delay as f64 / chirp.sample_rate;
        Self {
            sync_delay: out.sync_delay,
            frames: out.spectra.len(),
            bins: out.spectra[0].len(),
            calibration_frames: receiver.config().calibration_frames().min(out.spectra.len()),
            cancelled,
            metric: out.selection.metric,
            bin: out.selection.bin,
            bin_frequency_hz: freq,
            path_delay_s,
            distance_m: path_delay_s * SPEED_OF_SOUND / 2.0,
            max_score: out.selection.max_score,
            median_score: out.selection.median_score,
            low_confidence: out.selection.low_confidence,
            scores: out.selection.scores.clone(),
        }
    }
}

/// Feature rows with frame start times in the recording.
pub fn feature_rows(receiver: &Receiver, out: &ChainOutput) -> Vec<FeatureRow> {
    let fs = receiver.config().chirp.sample_rate;
    let l = receiver.frame_len() as f64;
    out.features
        .iter()
        .map(|f| FeatureRow::from_features(f, (out.sync_delay as f64 + f.frame_index as f64 * l) / fs))
        .collect()
}

pub fn load_template(path: &Path, receiver: &Receiver) -> Result<Template> {
    let template: Template = formats::read_json(path, formats::TEMPLATE)?;
    template.validate()?;
    let bins = receiver.config().resolved_n_fft() / 2 + 1;
    ensure!(
        template.len() == bins,
        "{}: template has {} bins but the receiver produces {bins}; was it built with another --n-fft?",
        path.display(),
        template.len()
    );
    Ok(template)
}

/// Writes `features.csv` and `selection.json` for one recording.
pub fn run(settings: &Settings, input: &Path, template: Option<&Path>) -> Result<Outcome> {
    let receiver = Receiver::new(settings.receiver_config())?;
    let cancel = settings.pipeline.cancel;
    let template = match (cancel, template) {
        (true, Some(p)) => Some(load_template(p, &receiver)?),
        (true, None) => bail!("static cancellation is enabled but no --template was given (use --no-cancel to skip it)"),
        (false, _) => None,
    };
    let rx = wav::read_samples(input)?;
    let (out, times) = run_chain(&receiver, &rx, template.as_ref())?;
    for (stage, d) in &times.0 {
        log::info!("{stage:>16}: {:>9.3} ms", d.as_secs_f64() * 1e3);
    }
    let total: Duration = times.0.iter().map(|(_, d)| *d).sum();
    log::info!(
        "{:>16}: {:>9.3} ms ({:.3} ms per frame)",
        "total",
        total.as_secs_f64() * 1e3,
        total.as_secs_f64() * 1e3 / out.spectra.len() as f64
    );

    let dir = settings.out_dir()?;
    formats::write_features(&dir.join("features.csv"), &feature_rows(&receiver, &out))?;
    let report = SelectionReport::new(&receiver, &out, cancel);
    formats::write_json(&dir.join("selection.json"), formats::SELECTION, &report)?;
    println!(
        "sync {} samples, {} frames, bin {} ({:.1} Hz, {:.3} m){}",
        report.sync_delay,
        report.frames,
        report.bin,
        report.bin_frequency_hz,
        report.distance_m,
        if report.low_confidence { ", low confidence" } else { "" }
    );
    Ok(Outcome::Success)
}
