//! `tresillo` — batch CLI over the rhythm analysis toolkit.
//!
//! Exit codes are a stable contract: 0 success, 2 parse/format
//! problems, 3 meter or empty-rhythm exclusions, 4 fit failure, 5
//! insufficient validation data, 6 an empty (fully excluded) corpus.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_PARSE: u8 = 2;
pub const EXIT_METER: u8 = 3;
pub const EXIT_FIT: u8 = 4;
pub const EXIT_INSUFFICIENT: u8 = 5;
pub const EXIT_EMPTY_CORPUS: u8 = 6;

/// A command failure carrying the exit code to report.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

pub type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "tresillo",
    version,
    about = "Trace tresillo rhythm use in MIDI song corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceArg {
    /// Synthetic tresillo template.
    Template,
    /// Centroid of the tresillo-labeled songs.
    Centroid,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    /// Plain cosine similarity.
    C,
    /// Parameterized cosine similarity.
    Cstar,
}

/// Optimizer knobs; precedence is flag, then TRESILLO_SEED (seed
/// only), then --fit-config file, then the built-in defaults
/// (5000 / 1e-8 / 5 / 42).
#[derive(Args, Clone)]
pub struct FitFlags {
    /// Nelder-Mead iteration cap per restart.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Convergence threshold on the simplex objective spread.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Extra optimizer starts from perturbed unit scalings.
    #[arg(long)]
    restarts: Option<usize>,
    /// Seed for every random draw.
    #[arg(long, env = "TRESILLO_SEED")]
    seed: Option<u64>,
    /// JSON file holding any subset of the fit fields.
    #[arg(long)]
    fit_config: Option<PathBuf>,
}

impl FitFlags {
    pub fn resolve(&self) -> Result<tresillo_core::model::FitConfig, CliError> {
        let mut config = match &self.fit_config {
            Some(path) => tresillo_core::model::FitConfig::from_json_file(path)
                .map_err(|e| CliError::new(EXIT_PARSE, e.to_string()))?,
            None => tresillo_core::model::FitConfig::default(),
        };
        if let Some(v) = self.max_iterations {
            config.max_iterations = v;
        }
        if let Some(v) = self.tolerance {
            config.tolerance = v;
        }
        if let Some(v) = self.restarts {
            config.restarts = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the structure of one MIDI file.
    Inspect { midi: PathBuf },
    /// Print a song's rhythm vector (resolution 16) or raw onset
    /// histogram (resolution 128) as JSON.
    Vector {
        midi: PathBuf,
        #[arg(long, default_value_t = 16, value_parser = parse_resolution)]
        resolution: usize,
    },
    /// Learn the 16 scaling factors from labeled validation folders.
    Fit {
        /// Folder of MIDI files labeled as containing the tresillo.
        #[arg(long)]
        tresillo_dir: PathBuf,
        /// Folder of MIDI files labeled as not containing it.
        #[arg(long)]
        non_tresillo_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = ReferenceArg::Template)]
        reference: ReferenceArg,
        /// Output path for the learned scaling factors.
        #[arg(long, default_value = "fitted.theta.json")]
        out: PathBuf,
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Evaluate all four similarity models on labeled folders.
    Evaluate {
        #[arg(long)]
        tresillo_dir: PathBuf,
        #[arg(long)]
        non_tresillo_dir: PathBuf,
        /// Pre-fitted theta file to use for the parameterized model
        /// with the given --reference; fitted fresh when absent.
        #[arg(long, requires = "reference")]
        theta: Option<PathBuf>,
        #[arg(long, value_enum)]
        reference: Option<ReferenceArg>,
        /// Bootstrap draws per confidence interval.
        #[arg(long, default_value_t = 1000)]
        draws: u32,
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Score a chart manifest and write weekly and rolling trends.
    Trend {
        #[arg(long)]
        manifest: PathBuf,
        /// Learned scaling factors (.theta.json) for the C* measure.
        #[arg(long)]
        theta: PathBuf,
        /// Rolling window in weeks.
        #[arg(long, default_value_t = 52, value_parser = clap::value_parser!(u64).range(1..))]
        window: u64,
        /// Which measure feeds the weekly aggregation.
        #[arg(long, value_enum, default_value_t = MeasureArg::C)]
        model: MeasureArg,
        #[arg(long, env = "TRESILLO_SEED", default_value_t = 42)]
        seed: u64,
        /// Bootstrap draws per weekly confidence interval.
        #[arg(long, default_value_t = 1000)]
        draws: u32,
        #[arg(long)]
        out_scores: PathBuf,
        #[arg(long)]
        out_trend: PathBuf,
        /// Rolling-mean CSV; defaults to the trend path with a
        /// `.rolling.csv` suffix.
        #[arg(long)]
        out_rolling: Option<PathBuf>,
    },
    /// Render a weekly trend CSV as a standalone SVG chart.
    Plot {
        #[arg(long)]
        trend: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(100..))]
        width: u32,
        #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u32).range(100..))]
        height: u32,
        #[arg(long, default_value = "Tresillo similarity over time")]
        title: String,
        /// Draw only the mean line, without the confidence band.
        #[arg(long)]
        no_band: bool,
    },
}

fn parse_resolution(text: &str) -> Result<usize, String> {
    match text {
        "16" => Ok(16),
        "128" => Ok(128),
        other => Err(format!("resolution must be 16 or 128, got {other}")),
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Inspect { midi } => commands::inspect(&midi),
        Command::Vector { midi, resolution } => commands::vector(&midi, resolution),
        Command::Fit {
            tresillo_dir,
            non_tresillo_dir,
            reference,
            out,
            fit,
        } => commands::fit(
            &tresillo_dir,
            &non_tresillo_dir,
            reference.into(),
            &out,
            fit.resolve()?,
        ),
        Command::Evaluate {
            tresillo_dir,
            non_tresillo_dir,
            theta,
            reference,
            draws,
            fit,
        } => commands::evaluate(
            &tresillo_dir,
            &non_tresillo_dir,
            theta.as_deref(),
            reference.map(Into::into),
            draws,
            fit.resolve()?,
        ),
        Command::Trend {
            manifest,
            theta,
            window,
            model,
            seed,
            draws,
            out_scores,
            out_trend,
            out_rolling,
        } => commands::trend(&commands::TrendArgs {
            manifest,
            theta,
            window: window as usize,
            measure: model.into(),
            seed,
            draws,
            out_scores,
            out_trend,
            out_rolling,
        }),
        Command::Plot {
            trend,
            out,
            width,
            height,
            title,
            no_band,
        } => commands::plot(
            &trend,
            &out,
            &svg::PlotSpec {
                width_px: width,
                height_px: height,
                title,
                band: !no_band,
            },
        ),
    }
}

impl From<ReferenceArg> for tresillo_core::model::ReferenceKind {
    fn from(value: ReferenceArg) -> Self {
        match value {
            ReferenceArg::Template => tresillo_core::model::ReferenceKind::Template,
            ReferenceArg::Centroid => tresillo_core::model::ReferenceKind::Centroid,
        }
    }
}

impl From<MeasureArg> for tresillo_core::pipeline::Measure {
    fn from(value: MeasureArg) -> Self {
        match value {
            MeasureArg::C => tresillo_core::pipeline::Measure::C,
            MeasureArg::Cstar => tresillo_core::pipeline::Measure::CStar,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("{}", error.message);
            ExitCode::from(error.code)
        }
    }
}
