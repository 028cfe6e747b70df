//! JSON and CSV file formats.
//!
//! JSON files carry a `format` tag and a `format_version` next to their
//! payload. CSV files start with a fixed header row.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use echoface_core::dsp::BinFeatures;
use echoface_core::ml::{EnsembleModel, FeatureVector, LabeledSample, MODEL_VERSION};
use echoface_core::sus::{Respondent, SusResponse};
use echoface_core::ExpressionLabel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

pub const SCENE: &str = "echoface.scene";
pub const TEMPLATE: &str = "echoface.template";
pub const MODEL: &str = "echoface.model";
pub const TRUTH: &str = "echoface.truth";
pub const SELECTION: &str = "echoface.selection";
pub const METRICS: &str = "echoface.metrics";
pub const ENGAGEMENT: &str = "echoface.engagement";
pub const SUS_SUMMARY: &str = "echoface.sus_summary";
pub const REPORT: &str = "echoface.report";

#[derive(Serialize)]
struct TaggedOut<'a, T> {
    format: &'a str,
    format_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Deserialize)]
struct TaggedIn<T> {
    format: String,
    format_version: u32,
    #[serde(flatten)]
    body: T,
}

pub fn to_json_string<T: Serialize>(format: &str, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&TaggedOut { format, format_version: FORMAT_VERSION, body })?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, format: &str, body: &T) -> Result<()> {
    let s = to_json_string(format, body)?;
    std::fs::write(path, s).with_context(|| format!("cannot write {}", path.display()))
}

pub fn from_json_str<T: DeserializeOwned>(s: &str, format: &str) -> Result<T> {
    let tagged: TaggedIn<T> = serde_json::from_str(s)?;
    ensure!(tagged.format == format, "expected a {format} file, found {}", tagged.format);
    ensure!(
        tagged.format_version <= FORMAT_VERSION,
        "{format} version {} is newer than supported version {FORMAT_VERSION}",
        tagged.format_version
    );
    Ok(tagged.body)
}

pub fn read_json<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    let s = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    from_json_str(&s, format).with_context(|| format!("{}", path.display()))
}

/// Loads a model and rejects unknown versions or malformed members.
pub fn read_model(path: &Path) -> Result<EnsembleModel> {
    let model: EnsembleModel = read_json(path, MODEL)?;
    ensure!(
        model.version == MODEL_VERSION,
        "{}: model version {} is not supported (expected {MODEL_VERSION})",
        path.display(),
        model.version
    );
    model.validate().with_context(|| format!("{}", path.display()))?;
    Ok(model)
}

pub const FEATURE_HEADER: [&str; 7] =
    ["frame_index", "time_s", "bin_index", "amplitude", "phase", "d_amplitude", "d_phase"];

/// One row of a feature CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub frame_index: usize,
    /// Frame start within the recording, s.
    pub time_s: f64,
    pub bin_index: usize,
    pub amplitude: f64,
    pub phase: f64,
    pub d_amplitude: f64,
    pub d_phase: f64,
}

impl FeatureRow {
    pub fn from_features(f: &BinFeatures, time_s: f64) -> Self {
        Self {
            frame_index: f.frame_index,
            time_s,
            bin_index: f.bin,
            amplitude: f.amplitude,
            phase: f.phase,
            d_amplitude: f.d_amplitude,
            d_phase: f.d_phase,
        }
    }

    pub fn vector(&self) -> FeatureVector {
        FeatureVector::new(self.amplitude, self.phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub frame_index: usize,
    pub label: ExpressionLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub frame_index: usize,
    pub label: ExpressionLabel,
    pub logistic_regression: ExpressionLabel,
    pub decision_tree: ExpressionLabel,
    pub random_forest: ExpressionLabel,
}

/// One questionnaire: ten answers on a 1 to 5 scale plus optional
/// demographics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SusRow {
    pub q1: u8,
    pub q2: u8,
    pub q3: u8,
    pub q4: u8,
    pub q5: u8,
    pub q6: u8,
    pub q7: u8,
    pub q8: u8,
    pub q9: u8,
    pub q10: u8,
    #[serde(default)]
    pub age: Option<String>,
    #[serde(default)]
    pub gender: Option<String>,
    #[serde(default)]
    pub profession: Option<String>,
    #[serde(default)]
    pub country: Option<String>,
}

impl SusRow {
    pub fn answers(&self) -> [u8; 10] {
        [self.q1, self.q2, self.q3, self.q4, self.q5, self.q6, self.q7, self.q8, self.q9, self.q10]
    }

    pub fn parse(&self) -> Result<(SusResponse, Respondent)> {
        let response = SusResponse::new(self.answers())?;
        let who = Respondent {
            age: self.age.clone(),
            gender: self.gender.clone(),
            profession: self.profession.clone(),
            country: self.country.clone(),
        };
        Ok((response, who))
    }
}

pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows, requiring the header to be exactly `header`.
pub fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        bail!("{}: expected header {}, found {}", path.display(), header.join(","), found.join(","));
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("{}: row {}", path.display(), i + 1)))
        .collect()
}

pub const LABEL_HEADER: [&str; 2] = ["frame_index", "label"];
pub const PREDICTION_HEADER: [&str; 5] =
    ["frame_index", "label", "logistic_regression", "decision_tree", "random_forest"];
pub const SUS_HEADER: [&str; 14] =
    ["q1", "q2", "q3", "q4", "q5", "q6", "q7", "q8", "q9", "q10", "age", "gender", "profession", "country"];

pub fn write_features(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    write_csv(path, &FEATURE_HEADER, rows)
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRow>> {
    read_csv(path, &FEATURE_HEADER)
}

pub fn write_labels(path: &Path, rows: &[LabelRow]) -> Result<()> {
    write_csv(path, &LABEL_HEADER, rows)
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    read_csv(path, &LABEL_HEADER)
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    write_csv(path, &PREDICTION_HEADER, rows)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    read_csv(path, &PREDICTION_HEADER)
}

/// SUS responses. The demographic columns may be omitted entirely.
pub fn read_sus(path: &Path) -> Result<Vec<SusRow>> {
    match read_csv(path, &SUS_HEADER) {
        Ok(rows) => Ok(rows),
        Err(full) => read_csv(path, &SUS_HEADER[..10]).map_err(|_| full),
    }
}

/// Joins labels to features by frame index. Every label must name a frame
/// present in the features, except for the frame right after the last one,
/// which synchronization drops when the recording ends mid-frame. Unlabeled
/// frames are skipped.
pub fn align(features: &[FeatureRow], labels: &[LabelRow], session: u32) -> Result<Vec<LabeledSample>> {
    let mut by_frame: BTreeMap<usize, &FeatureRow> = BTreeMap::new();
    for f in features {
        ensure!(by_frame.insert(f.frame_index, f).is_none(), "duplicate feature row for frame {}", f.frame_index);
    }
    let cut = by_frame.keys().next_back().map(|last| last + 1);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(labels.len());
    for l in labels {
        ensure!(seen.insert(l.frame_index), "duplicate label for frame {}", l.frame_index);
        match by_frame.get(&l.frame_index) {
            Some(f) => out.push(LabeledSample { features: f.vector(), label: l.label, session: Some(session) }),
            None if Some(l.frame_index) == cut => {}
            None => bail!("label/feature misalignment: frame {} has a label but no features", l.frame_index),
        }
    }
    Ok(out)
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
