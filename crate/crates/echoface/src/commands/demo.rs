//! End-to-end run on simulated sessions: record, process, classify,
//! evaluate and score engagement, then write a report directory.

use std::time::Instant;

use anyhow::{Context, Result};
use echoface_core::chirp::ChirpConfig;
use echoface_core::dsp::{Receiver, Template};
use echoface_core::engagement::{EngagementReport, GenreId};
use echoface_core::ml::{apply_feature_mode, EnsembleModel, FeatureMode, LabeledSample, SplitMode, TrainConfig};
use echoface_core::session::FaceModel;
use echoface_core::ExpressionLabel;
use serde::{Deserialize, Serialize};

use super::learn::{confusion_csv, cross_validate, predict_rows, train_config, Evaluation};
use super::pipeline::{feature_rows, run_chain};
use super::{engage, record_session, Outcome};
use crate::config::{session_seed, PipelineOptions, SessionSpec, Settings, DEMO_SEED};
use crate::formats::{self, FeatureRow};

/// Held-out accuracy the demo must reach.
pub const MIN_ACCURACY: f64 = 0.90;

/// Settings that determine the demo's output. Paths are left out so the
/// report does not depend on where it is written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub seed: u64,
    pub chirp: ChirpConfig,
    pub session: SessionSpec,
    pub pipeline: PipelineOptions,
    pub split: SplitMode,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session: u32,
    pub seed: u64,
    pub frames: usize,
    pub labeled_frames: usize,
    pub sync_delay: isize,
    pub bin: usize,
    /// Beat bin of the face at rest.
    pub oracle_bin: usize,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub config: DemoConfig,
    pub sessions: Vec<SessionSummary>,
    pub split: SplitMode,
    pub accuracy: f64,
    pub test_samples: usize,
    pub confusion: [[usize; 4]; 4],
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvaluations {
    pub overall: Evaluation,
    pub inter_session: Evaluation,
    pub intra_session: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEngagement {
    pub session: u32,
    pub reports: Vec<EngagementReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementSet {
    pub sessions: Vec<SessionEngagement>,
}

#[derive(Debug, Clone, Serialize)]
struct TraceRow {
    session: u32,
    frame_index: usize,
    time_s: f64,
    label: Option<ExpressionLabel>,
    amplitude: f64,
    phase: f64,
    d_amplitude: f64,
    d_phase: f64,
}

#[derive(Debug, Clone, Serialize)]
struct HeldOutRow {
    session: u32,
    sample: usize,
    truth: ExpressionLabel,
    predicted: ExpressionLabel,
}

#[derive(Debug, Clone, Serialize)]
struct ScoreRow {
    session: u32,
    genre: GenreId,
    indicator: Option<bool>,
    rule: u8,
    score: Option<f64>,
}

struct ProcessedSession {
    summary: SessionSummary,
    rows: Vec<FeatureRow>,
    labels: Vec<Option<ExpressionLabel>>,
}

fn process_session(settings: &Settings, receiver: &Receiver, seed: u64, index: u32) -> Result<ProcessedSession> {
    let plan = settings.session.plan(seed, index);
    let rec = record_session(settings, receiver, plan)?;
    let template = if settings.pipeline.cancel {
        let (_, spectra) = receiver.spectra(&rec.room)?;
        Some(Template::from_spectra(&spectra)?)
    } else {
        None
    };
    let (out, _) = run_chain(receiver, &rec.rx, template.as_ref())?;
    let rows = feature_rows(receiver, &out);
    let period = settings.chirp.frame_period();
    let labels: Vec<Option<ExpressionLabel>> = rows
        .iter()
        .map(|r| {
            let t = r.frame_index as f64 * period;
            rec.plan.label_for_span(t, t + period)
        })
        .collect();
    let summary = SessionSummary {
        session: index,
        seed: rec.plan.seed,
        frames: rows.len(),
        labeled_frames: labels.iter().flatten().count(),
        sync_delay: out.sync_delay,
        bin: out.selection.bin,
        oracle_bin: receiver.beat_bin(FaceModel::default().rest_delay, out.sync_delay),
        low_confidence: out.selection.low_confidence,
    };
    Ok(ProcessedSession { summary, rows, labels })
}

fn labeled(s: &ProcessedSession, mode: FeatureMode) -> Result<Vec<LabeledSample>> {
    let samples: Vec<LabeledSample> = s
        .rows
        .iter()
        .zip(&s.labels)
        .filter_map(|(r, l)| l.map(|label| LabeledSample { features: r.vector(), label, session: Some(s.summary.session) }))
        .collect();
    Ok(apply_feature_mode(&samples, mode)?)
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail }
}

pub fn run(settings: &Settings) -> Result<Outcome> {
    let seed = settings.seed.unwrap_or(DEMO_SEED);
    let receiver = Receiver::new(settings.receiver_config())?;
    let started = Instant::now();

    let mut sessions = Vec::new();
    for i in 0..settings.session.sessions {
        let s = process_session(settings, &receiver, seed, i).with_context(|| format!("session {i}"))?;
        log::info!("session {i}: {} frames, bin {} ({:.1?})", s.summary.frames, s.summary.bin, started.elapsed());
        sessions.push(s);
    }

    let mode = settings.pipeline.feature_mode;
    let per_session: Vec<Vec<LabeledSample>> = sessions.iter().map(|s| labeled(s, mode)).collect::<Result<_>>()?;
    let samples: Vec<LabeledSample> = per_session.iter().flatten().copied().collect();
    let cfg = train_config(settings, seed);
    let cv = |m: SplitMode| cross_validate(&samples, m, session_seed(seed, u32::MAX), &cfg);
    let (overall, overall_held) = cv(SplitMode::Overall)?;
    let (inter, inter_held) = cv(SplitMode::InterSession)?;
    let (intra, intra_held) = cv(SplitMode::IntraSession)?;
    log::info!("cross-validation done ({:.1?})", started.elapsed());
    let (primary, held) = match settings.split {
        SplitMode::Overall => (&overall, &overall_held),
        SplitMode::InterSession => (&inter, &inter_held),
        SplitMode::IntraSession => (&intra, &intra_held),
    };

    // Engagement on every frame of each session, predicted by a model that
    // never saw that session.
    let mut engagement = Vec::new();
    let mut score_rows = Vec::new();
    for s in &sessions {
        let id = s.summary.session;
        let train: Vec<LabeledSample> = samples.iter().filter(|x| x.session != Some(id)).copied().collect();
        let model = EnsembleModel::train(&train, &cfg).with_context(|| format!("engagement model for session {id}"))?;
        let preds = predict_rows(&model, &s.rows, mode)?;
        let stream: Vec<(usize, ExpressionLabel)> = preds.iter().map(|p| (p.frame_index, p.label)).collect();
        let mut reports = Vec::new();
        for genre in GenreId::ALL {
            let r = engage::report(&stream, genre, None, settings.chirp.frame_period())?;
            score_rows.push(ScoreRow { session: id, genre, indicator: r.indicator, rule: r.rule.number(), score: r.score });
            reports.push(r);
        }
        engagement.push(SessionEngagement { session: id, reports });
    }

    let confusion_total: usize = primary.ensemble.confusion.iter().flatten().sum();
    let test_samples = held.index.len();
    let bins_ok = sessions
        .iter()
        .all(|s| s.summary.bin.abs_diff(s.summary.oracle_bin) <= 1 && !s.summary.low_confidence);
    let checks = vec![
        check(
            "accuracy",
            primary.ensemble.accuracy >= MIN_ACCURACY,
            format!("{:.4} held-out accuracy ({:?} split), need {MIN_ACCURACY}", primary.ensemble.accuracy, settings.split),
        ),
        check(
            "confusion_total",
            confusion_total == test_samples && test_samples > 0,
            format!("confusion matrix sums to {confusion_total}, test set has {test_samples}"),
        ),
        check(
            "bin_selection",
            bins_ok,
            sessions
                .iter()
                .map(|s| format!("s{}: {} vs {}", s.summary.session, s.summary.bin, s.summary.oracle_bin))
                .collect::<Vec<_>>()
                .join(", "),
        ),
    ];
    let passed = checks.iter().all(|c| c.passed);
    let report = DemoReport {
        config: DemoConfig {
            seed,
            chirp: settings.chirp,
            session: settings.session.clone(),
            pipeline: settings.pipeline.clone(),
            split: settings.split,
            train: settings.train,
        },
        sessions: sessions.iter().map(|s| s.summary.clone()).collect(),
        split: settings.split,
        accuracy: primary.ensemble.accuracy,
        test_samples,
        confusion: primary.ensemble.confusion,
        checks,
        passed,
    };

    let dir = settings.out_dir()?;
    formats::write_json(&dir.join("report.json"), formats::REPORT, &report)?;
    let evals = SplitEvaluations { overall: overall.clone(), inter_session: inter.clone(), intra_session: intra.clone() };
    formats::write_json(&dir.join("metrics.json"), formats::METRICS, &evals)?;
    formats::write_text(&dir.join("confusion.csv"), &confusion_csv(&primary.ensemble))?;
    formats::write_json(&dir.join("engagement.json"), formats::ENGAGEMENT, &EngagementSet { sessions: engagement })?;
    formats::write_csv(&dir.join("engagement_scores.csv"), &["session", "genre", "indicator", "rule", "score"], &score_rows)?;

    let held_rows: Vec<HeldOutRow> = held
        .index
        .iter()
        .zip(&held.predicted)
        .map(|(&i, &p)| HeldOutRow {
            session: samples[i].session.unwrap_or(0),
            sample: i,
            truth: samples[i].label,
            predicted: p,
        })
        .collect();
    formats::write_csv(&dir.join("predictions.csv"), &["session", "sample", "truth", "predicted"], &held_rows)?;

    let traces: Vec<TraceRow> = sessions
        .iter()
        .flat_map(|s| {
            s.rows.iter().zip(&s.labels).map(move |(r, l)| TraceRow {
                session: s.summary.session,
                frame_index: r.frame_index,
                time_s: r.time_s,
                label: *l,
                amplitude: r.amplitude,
                phase: r.phase,
                d_amplitude: r.d_amplitude,
                d_phase: r.d_phase,
            })
        })
        .collect();
    formats::write_csv(
        &dir.join("traces.csv"),
        &["session", "frame_index", "time_s", "label", "amplitude", "phase", "d_amplitude", "d_phase"],
        &traces,
    )?;

    println!("confusion matrix ({:?} split, rows = truth):", settings.split);
    print!("{}", confusion_csv(&primary.ensemble));
    println!(
        "accuracy: overall {:.4}, inter-session {:.4}, intra-session {:.4}",
        overall.ensemble.accuracy, inter.ensemble.accuracy, intra.ensemble.accuracy
    );
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("report written to {}", dir.display());
    log::info!("demo finished in {:.1?}", started.elapsed());
    Ok(if passed { Outcome::Success } else { Outcome::AcceptanceFailed })
}
