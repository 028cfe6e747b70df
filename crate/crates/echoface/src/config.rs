//! Experiment configuration: a JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use echoface_core::chirp::ChirpConfig;
use echoface_core::dsp::{ReceiverConfig, SelectionMetric, Window, DEFAULT_MAX_RANGE_M};
use echoface_core::ml::{FeatureMode, SplitMode, TrainConfig};
use echoface_core::session::SessionPlan;
use echoface_core::ExpressionLabel;
use serde::{Deserialize, Serialize};

/// Seed used by `demo` when neither the flags nor the config name one.
pub const DEMO_SEED: u64 = 20_240_611;

/// Sessions to simulate: each holds `repeats` blocks of every expression
/// in a seeded random order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSpec {
    pub expressions: Vec<ExpressionLabel>,
    pub repeats: usize,
    pub block_s: f64,
    pub sessions: u32,
}

impl Default for SessionSpec {
    fn default() -> Self {
        Self { expressions: ExpressionLabel::ALL.to_vec(), repeats: 2, block_s: 6.0, sessions: 6 }
    }
}

impl SessionSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.expressions.is_empty(), "session plan needs at least one expression");
        ensure!(self.repeats > 0, "session plan needs at least one repeat");
        ensure!(self.sessions > 0, "at least one session is required");
        ensure!(self.block_s.is_finite() && self.block_s > 1.0, "blocks must last longer than the 1 s transition");
        Ok(())
    }

    /// Plan of session `index`; every session gets its own seed.
    pub fn plan(&self, seed: u64, index: u32) -> SessionPlan {
        SessionPlan::shuffled(&self.expressions, self.repeats, self.block_s, session_seed(seed, index))
    }
}

pub fn session_seed(seed: u64, index: u32) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(u64::from(index))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    pub n_fft: Option<usize>,
    pub calib_sec: f64,
    pub window: Window,
    pub cancel: bool,
    pub metric: SelectionMetric,
    pub max_range_m: Option<f64>,
    pub feature_mode: FeatureMode,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        let r = ReceiverConfig::default();
        Self {
            n_fft: r.n_fft,
            calib_sec: r.calibration_s,
            window: r.window,
            cancel: true,
            metric: r.metric,
            max_range_m: Some(DEFAULT_MAX_RANGE_M),
            feature_mode: FeatureMode::PerChirp,
        }
    }
}

/// Contents of a `--config` file. `seed` is the only required field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub chirp: ChirpConfig,
    #[serde(default)]
    pub scene: Option<PathBuf>,
    #[serde(default)]
    pub session: SessionSpec,
    #[serde(default)]
    pub pipeline: PipelineOptions,
    #[serde(default)]
    pub split: SplitMode,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// Flag values that override the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub scene: Option<PathBuf>,
    pub split: Option<SplitMode>,
    pub n_fft: Option<usize>,
    pub no_cancel: bool,
    pub calib_sec: Option<f64>,
}

/// Configuration after merging the file and the flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub seed: Option<u64>,
    pub chirp: ChirpConfig,
    pub scene: Option<PathBuf>,
    pub session: SessionSpec,
    pub pipeline: PipelineOptions,
    pub split: SplitMode,
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl Settings {
    /// Reads `config` (if any), applies `overrides` and validates. Relative
    /// paths inside the file resolve against the file's directory.
    pub fn load(config: Option<&Path>, overrides: Overrides) -> Result<Self> {
        let (file, base) = match config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
                let cfg: ExperimentConfig =
                    serde_json::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?;
                (Some(cfg), p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (None, PathBuf::new()),
        };
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let mut s = match file {
            Some(c) => Settings {
                seed: Some(c.seed),
                chirp: c.chirp,
                scene: c.scene.map(resolve),
                session: c.session,
                pipeline: c.pipeline,
                split: c.split,
                train: c.train,
                out: c.out.map(resolve).unwrap_or_else(|| PathBuf::from("out")),
            },
            None => Settings {
                seed: None,
                chirp: ChirpConfig::default(),
                scene: None,
                session: SessionSpec::default(),
                pipeline: PipelineOptions::default(),
                split: SplitMode::default(),
                train: TrainConfig::default(),
                out: PathBuf::from("out"),
            },
        };
        let o = overrides;
        s.seed = o.seed.or(s.seed);
        s.out = o.out.unwrap_or(s.out);
        s.scene = o.scene.or(s.scene);
        s.split = o.split.unwrap_or(s.split);
        if o.n_fft.is_some() {
            s.pipeline.n_fft = o.n_fft;
        }
        if o.no_cancel {
            s.pipeline.cancel = false;
        }
        if let Some(c) = o.calib_sec {
            s.pipeline.calib_sec = c;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.chirp.validate()?;
        self.session.validate()?;
        if let Some(n) = self.pipeline.n_fft {
            ensure!(n.is_power_of_two(), "--n-fft must be a power of two, got {n}");
            ensure!(n >= self.chirp.chirp_len(), "--n-fft {n} is shorter than the {}-sample chirp", self.chirp.chirp_len());
        }
        ensure!(
            self.pipeline.calib_sec.is_finite() && self.pipeline.calib_sec > 0.0,
            "--calib-sec must be positive"
        );
        if let Some(scene) = &self.scene {
            ensure!(scene.is_file(), "scene file {} does not exist", scene.display());
        }
        echoface_core::dsp::Receiver::new(self.receiver_config())?;
        Ok(())
    }

    pub fn seed(&self) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None => bail!("a seed is required: pass --seed or set \"seed\" in the config file"),
        }
    }

    pub fn receiver_config(&self) -> ReceiverConfig {
        ReceiverConfig {
            chirp: self.chirp,
            n_fft: self.pipeline.n_fft,
            window: self.pipeline.window,
            metric: self.pipeline.metric,
            calibration_s: self.pipeline.calib_sec,
            max_range_m: self.pipeline.max_range_m,
            ..ReceiverConfig::default()
        }
    }

    /// Output directory, created if missing.
    pub fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("cannot create {}", self.out.display()))?;
        Ok(&self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("c.json");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), r#"{"seed": 5, "split": "inter", "pipeline": {"calib_sec": 2.0}, "out": "res"}"#);
        let s = Settings::load(Some(&p), Overrides::default()).unwrap();
        assert_eq!(s.seed().unwrap(), 5);
        assert_eq!(s.split, SplitMode::InterSession);
        assert_eq!(s.pipeline.calib_sec, 2.0);
        assert_eq!(s.out, dir.path().join("res"));
        let o = Overrides { seed: Some(9), calib_sec: Some(3.0), no_cancel: true, ..Overrides::default() };
        let s = Settings::load(Some(&p), o).unwrap();
        assert_eq!(s.seed, Some(9));
        assert_eq!(s.pipeline.calib_sec, 3.0);
        assert!(!s.pipeline.cancel);
    }

    #[test]
    fn seed_is_mandatory_in_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), r#"{"split": "overall"}"#);
        assert!(Settings::load(Some(&p), Overrides::default()).is_err());
        let no_file = Settings::load(None, Overrides::default()).unwrap();
        assert!(no_file.seed().is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), r#"{"seed": 1, "bogus": 3}"#);
        assert!(Settings::load(Some(&p), Overrides::default()).is_err());
        let bad_fft = Overrides { n_fft: Some(1000), ..Overrides::default() };
        assert!(Settings::load(None, bad_fft).is_err());
        let short_fft = Overrides { n_fft: Some(1024), ..Overrides::default() };
        assert!(Settings::load(None, short_fft).is_err());
        let calib = Overrides { calib_sec: Some(-1.0), ..Overrides::default() };
        assert!(Settings::load(None, calib).is_err());
        let scene = Overrides { scene: Some(dir.path().join("missing.json")), ..Overrides::default() };
        assert!(Settings::load(None, scene).is_err());
    }

    #[test]
    fn sessions_have_distinct_plans() {
        let spec = SessionSpec::default();
        let a = spec.plan(1, 0);
        let b = spec.plan(1, 1);
        assert_ne!(a.blocks, b.blocks);
        assert_eq!(a.blocks.len(), 8);
        assert_eq!(spec.plan(1, 0), a);
    }
}
