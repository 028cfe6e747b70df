//! Argument parsing and exit-code mapping.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use echoface_core::engagement::GenreId;
use echoface_core::ml::SplitMode;
use echoface_core::sus::GroupBy;

use crate::commands::{self, Outcome};
use crate::config::{Overrides, Settings};

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_ACCEPTANCE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "echoface", version, about = "Acoustic FMCW facial-expression sensing")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Scene description (JSON) to simulate.
    #[arg(long, global = true)]
    pub scene: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub split: Option<SplitArg>,
    #[arg(long, global = true, value_enum)]
    pub genre: Option<GenreArg>,
    /// Session length in minutes for engagement scoring.
    #[arg(long = "length-min", global = true)]
    pub length_min: Option<f64>,
    #[arg(long = "n-fft", global = true)]
    pub n_fft: Option<usize>,
    /// Skip static-path cancellation.
    #[arg(long = "no-cancel", global = true)]
    pub no_cancel: bool,
    /// Calibration window for bin selection, seconds.
    #[arg(long = "calib-sec", global = true)]
    pub calib_sec: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Overall,
    Inter,
    Intra,
}

impl From<SplitArg> for SplitMode {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Overall => SplitMode::Overall,
            SplitArg::Inter => SplitMode::InterSession,
            SplitArg::Intra => SplitMode::IntraSession,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenreArg {
    Comedy,
    Tragedy,
    Anger,
    Horror,
    Mixed,
}

impl From<GenreArg> for GenreId {
    fn from(g: GenreArg) -> Self {
        match g {
            GenreArg::Comedy => GenreId::Comedy,
            GenreArg::Tragedy => GenreId::Tragedy,
            GenreArg::Anger => GenreId::Anger,
            GenreArg::Horror => GenreId::Horror,
            GenreArg::Mixed => GenreId::Mixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Age,
    Gender,
    Profession,
    Country,
}

impl From<GroupArg> for GroupBy {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Age => GroupBy::Age,
            GroupArg::Gender => GroupBy::Gender,
            GroupArg::Profession => GroupBy::Profession,
            GroupArg::Country => GroupBy::Country,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the transmit signal as chirp.wav.
    Synth {
        #[arg(long, default_value_t = 57)]
        frames: usize,
    },
    /// Simulate a recording from --scene, or a labelled session without it.
    Simulate {
        /// Frames to simulate (scene mode only).
        #[arg(long)]
        frames: Option<usize>,
        /// Session index (session mode only).
        #[arg(long, default_value_t = 0)]
        session: u32,
    },
    /// Build a static-path template from an empty-room recording.
    Template {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the receive chain on a recording and write per-chirp features.
    Pipeline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Train the ensemble on feature/label file pairs.
    Train {
        #[arg(long, num_args = 1.., required = true)]
        features: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        labels: Vec<PathBuf>,
    },
    /// Predict an expression for every feature row.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Score a model, or cross-validate when no model is given.
    Eval {
        #[arg(long, num_args = 1.., required = true)]
        features: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        labels: Vec<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Engagement indicator and score for a prediction stream.
    Engage {
        #[arg(long)]
        predictions: PathBuf,
    },
    /// System Usability Scale scores from a questionnaire CSV.
    Sus {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "group-by", value_enum)]
        group_by: Option<GroupArg>,
    },
    /// Simulate sessions end to end and check the results.
    Demo,
}

fn execute(cli: Cli) -> Result<Outcome> {
    let g = cli.global;
    let overrides = Overrides {
        seed: g.seed,
        out: g.out,
        scene: g.scene,
        split: g.split.map(Into::into),
        n_fft: g.n_fft,
        no_cancel: g.no_cancel,
        calib_sec: g.calib_sec,
    };
    if let Some(l) = g.length_min {
        anyhow::ensure!(l.is_finite() && l > 0.0, "--length-min must be positive");
    }
    let settings = Settings::load(g.config.as_deref(), overrides)?;
    match cli.command {
        Command::Synth { frames } => commands::synth::run(&settings, frames),
        Command::Simulate { frames, session } => commands::simulate::run(&settings, frames, session),
        Command::Template { input } => commands::template::run(&settings, input.as_deref()),
        Command::Pipeline { input, template } => commands::pipeline::run(&settings, &input, template.as_deref()),
        Command::Train { features, labels } => commands::learn::run_train(&settings, &features, &labels),
        Command::Predict { model, features } => commands::learn::run_predict(&settings, &model, &features),
        Command::Eval { features, labels, model } => {
            commands::learn::run_eval(&settings, &features, &labels, model.as_deref())
        }
        Command::Engage { predictions } => {
            commands::engage::run(&settings, &predictions, g.genre.map(Into::into), g.length_min)
        }
        Command::Sus { input, group_by } => commands::sus::run(&settings, &input, group_by.map(Into::into)),
        Command::Demo => commands::demo::run(&settings),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_SUCCESS };
        }
    };
    match execute(cli) {
        Ok(Outcome::Success) => EXIT_SUCCESS,
        Ok(Outcome::AcceptanceFailed) => EXIT_ACCEPTANCE,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_VALIDATION
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse_after_the_subcommand() {
        let cli = Cli::try_parse_from([
            "echoface", "demo", "--seed", "7", "--split", "inter", "--n-fft", "8192", "--no-cancel", "--calib-sec", "2",
        ])
        .unwrap();
        assert_eq!(cli.global.seed, Some(7));
        assert_eq!(cli.global.split, Some(SplitArg::Inter));
        assert_eq!(cli.global.n_fft, Some(8192));
        assert!(cli.global.no_cancel);
        assert_eq!(cli.global.calib_sec, Some(2.0));
    }

    #[test]
    fn unknown_genre_is_a_validation_error() {
        assert_eq!(main(["echoface", "engage", "--predictions", "p.csv", "--genre", "western"]), EXIT_VALIDATION);
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(main(["echoface", "--help"]), EXIT_SUCCESS);
    }

    #[test]
    fn split_names_map_to_modes() {
        assert_eq!(SplitMode::from(SplitArg::Intra), SplitMode::IntraSession);
        assert_eq!(GenreId::from(GenreArg::Mixed), GenreId::Mixed);
    }
}
