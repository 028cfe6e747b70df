//! `train`, `predict` and `eval`.

use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use echoface_core::ml::{
    apply_feature_mode, evaluate, split, EnsembleModel, FeatureMode, FeatureVector, LabeledSample, Metrics,
    SplitMode, TrainConfig,
};
use echoface_core::ExpressionLabel;
use serde::{Deserialize, Serialize};

use super::Outcome;
use crate::config::Settings;
use crate::formats::{self, FeatureRow, PredictionRow};

/// Pairs feature and label files; the i-th pair becomes session i.
pub fn load_dataset(features: &[PathBuf], labels: &[PathBuf], mode: FeatureMode) -> Result<Vec<LabeledSample>> {
    ensure!(!features.is_empty(), "no --features files given");
    ensure!(
        features.len() == labels.len(),
        "label/feature misalignment: {} feature files but {} label files",
        features.len(),
        labels.len()
    );
    let mut all = Vec::new();
    for (i, (f, l)) in features.iter().zip(labels).enumerate() {
        let rows = formats::read_features(f)?;
        let label_rows = formats::read_labels(l)?;
        let samples = formats::align(&rows, &label_rows, i as u32)
            .with_context(|| format!("{} with {}", f.display(), l.display()))?;
        all.extend(apply_feature_mode(&samples, mode)?);
    }
    Ok(all)
}

/// Training options with the forest seeded from the run's seed.
pub fn train_config(settings: &Settings, seed: u64) -> TrainConfig {
    let mut cfg = settings.train;
    cfg.forest.seed = seed;
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub session: Option<u32>,
    pub train: usize,
    pub test: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberMetrics {
    pub logistic_regression: Metrics,
    pub decision_tree: Metrics,
    pub random_forest: Metrics,
}

/// Held-out evaluation pooled over the folds of one split mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub split: Option<SplitMode>,
    pub samples: usize,
    pub folds: Vec<FoldSummary>,
    pub ensemble: Metrics,
    pub members: MemberMetrics,
}

/// Per-sample held-out predictions behind an [`Evaluation`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOut {
    pub index: Vec<usize>,
    pub predicted: Vec<ExpressionLabel>,
}

fn score(
    split_mode: Option<SplitMode>,
    samples: usize,
    folds: Vec<FoldSummary>,
    truth: &[ExpressionLabel],
    votes: &[[ExpressionLabel; 3]],
    predicted: &[ExpressionLabel],
) -> Result<Evaluation> {
    let member = |k: usize| evaluate(truth, &votes.iter().map(|v| v[k]).collect::<Vec<_>>());
    Ok(Evaluation {
        split: split_mode,
        samples,
        folds,
        ensemble: evaluate(truth, predicted)?,
        members: MemberMetrics { logistic_regression: member(0)?, decision_tree: member(1)?, random_forest: member(2)? },
    })
}

/// Trains on each fold's training part and predicts its test part.
pub fn cross_validate(
    samples: &[LabeledSample],
    mode: SplitMode,
    seed: u64,
    cfg: &TrainConfig,
) -> Result<(Evaluation, HeldOut)> {
    let folds = split(samples, mode, seed)?;
    let (mut truth, mut votes, mut predicted, mut index) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut summaries = Vec::new();
    for fold in &folds {
        let train: Vec<LabeledSample> = fold.train.iter().map(|&i| samples[i]).collect();
        let model = EnsembleModel::train(&train, cfg)
            .with_context(|| format!("training fold {}", fold.session.map_or("all".into(), |s| s.to_string())))?;
        let mut correct = 0;
        for &i in &fold.test {
            let p = model.predict(&samples[i].features)?;
            correct += usize::from(p == samples[i].label);
            truth.push(samples[i].label);
            votes.push(model.member_predictions(&samples[i].features));
            predicted.push(p);
            index.push(i);
        }
        summaries.push(FoldSummary {
            session: fold.session,
            train: fold.train.len(),
            test: fold.test.len(),
            accuracy: correct as f64 / fold.test.len().max(1) as f64,
        });
    }
    let eval = score(Some(mode), samples.len(), summaries, &truth, &votes, &predicted)?;
    Ok((eval, HeldOut { index, predicted }))
}

/// Scores a fixed model on `samples`.
pub fn evaluate_model(model: &EnsembleModel, samples: &[LabeledSample]) -> Result<Evaluation> {
    let truth: Vec<ExpressionLabel> = samples.iter().map(|s| s.label).collect();
    let votes: Vec<[ExpressionLabel; 3]> = samples.iter().map(|s| model.member_predictions(&s.features)).collect();
    let predicted = samples.iter().map(|s| model.predict(&s.features)).collect::<Result<Vec<_>, _>>()?;
    let fold = FoldSummary {
        session: None,
        train: 0,
        test: samples.len(),
        accuracy: truth.iter().zip(&predicted).filter(|(t, p)| t == p).count() as f64 / samples.len() as f64,
    };
    score(None, samples.len(), vec![fold], &truth, &votes, &predicted)
}

pub const CONFUSION_HEADER: [&str; 5] = ["truth", "happy", "sad_neutral", "angry", "surprise"];

/// Confusion matrix as CSV: one row per true class, one column per
/// predicted class.
pub fn confusion_csv(m: &Metrics) -> String {
    let mut s = CONFUSION_HEADER.join(",");
    s.push('\n');
    for (t, row) in m.confusion.iter().enumerate() {
        s.push_str(ExpressionLabel::ALL[t].as_str());
        for c in row {
            s.push_str(&format!(",{c}"));
        }
        s.push('\n');
    }
    s
}

/// Predictions for every feature row. In windowed mode each run of `w`
/// rows shares the prediction for its mean; a short final run uses the
/// mean of what is there.
pub fn predict_rows(model: &EnsembleModel, rows: &[FeatureRow], mode: FeatureMode) -> Result<Vec<PredictionRow>> {
    let width = match mode {
        FeatureMode::PerChirp => 1,
        FeatureMode::Windowed(0) => anyhow::bail!("window must hold at least one chirp"),
        FeatureMode::Windowed(w) => w,
    };
    let mut out = Vec::with_capacity(rows.len());
    for chunk in rows.chunks(width) {
        let n = chunk.len() as f64;
        let x = FeatureVector::new(
            chunk.iter().map(|r| r.amplitude).sum::<f64>() / n,
            chunk.iter().map(|r| r.phase).sum::<f64>() / n,
        );
        let [lr, dt, rf] = model.member_predictions(&x);
        let label = model.predict(&x)?;
        out.extend(chunk.iter().map(|r| PredictionRow {
            frame_index: r.frame_index,
            label,
            logistic_regression: lr,
            decision_tree: dt,
            random_forest: rf,
        }));
    }
    Ok(out)
}

pub fn run_train(settings: &Settings, features: &[PathBuf], labels: &[PathBuf]) -> Result<Outcome> {
    let seed = settings.seed()?;
    let samples = load_dataset(features, labels, settings.pipeline.feature_mode)?;
    let model = EnsembleModel::train(&samples, &train_config(settings, seed))?;
    let fit = evaluate_model(&model, &samples)?;
    let path = settings.out_dir()?.join("model.json");
    formats::write_json(&path, formats::MODEL, &model)?;
    println!("trained on {} samples, training accuracy {:.4}", samples.len(), fit.ensemble.accuracy);
    println!("wrote {}", path.display());
    Ok(Outcome::Success)
}

pub fn run_predict(settings: &Settings, model: &Path, features: &Path) -> Result<Outcome> {
    let model = formats::read_model(model)?;
    let rows = formats::read_features(features)?;
    ensure!(!rows.is_empty(), "{} has no feature rows", features.display());
    let preds = predict_rows(&model, &rows, settings.pipeline.feature_mode)?;
    let path = settings.out_dir()?.join("predictions.csv");
    formats::write_predictions(&path, &preds)?;
    println!("{} predictions written to {}", preds.len(), path.display());
    Ok(Outcome::Success)
}

/// With `model`, scores it on the given data. Otherwise cross-validates
/// with the configured split mode.
pub fn run_eval(settings: &Settings, features: &[PathBuf], labels: &[PathBuf], model: Option<&Path>) -> Result<Outcome> {
    let samples = load_dataset(features, labels, settings.pipeline.feature_mode)?;
    let eval = match model {
        Some(m) => evaluate_model(&formats::read_model(m)?, &samples)?,
        None => {
            let seed = settings.seed()?;
            cross_validate(&samples, settings.split, seed, &train_config(settings, seed))?.0
        }
    };
    let dir = settings.out_dir()?;
    formats::write_json(&dir.join("metrics.json"), formats::METRICS, &eval)?;
    formats::write_text(&dir.join("confusion.csv"), &confusion_csv(&eval.ensemble))?;
    println!("accuracy {:.4} over {} held-out samples", eval.ensemble.accuracy, eval.ensemble.total);
    Ok(Outcome::Success)
}
