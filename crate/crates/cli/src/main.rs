//! `horolab`: run the numerics from the command line and write JSON reports.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use horolab_core::error::HoroError;

/// Exit code for numeric failures and failed checks.
const EXIT_NUMERIC: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "horolab",
    version,
    about = "Horocycle flows on Z^d-covers: numerics and harnesses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Raw per-sample rows as CSV.
    #[arg(long)]
    pub csv: Option<std::path::PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Cover {
    /// Z-cover from the character a1 -> 1.
    Z,
    /// Z^2-cover from a1 -> e1, a2 -> e2.
    Z2,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Distance,
    Area,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Geodesic deck coordinates and horocycle Birkhoff integrals.
    Flow {
        #[arg(long, value_enum, default_value_t = Cover::Z)]
        cover: Cover,
        #[arg(long = "T", default_value_t = 100.0)]
        t: f64,
        /// Horocycle step for the Birkhoff integral.
        #[arg(long, default_value_t = horolab_core::flows::HOROCYCLE_STEP)]
        dt: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Variance growth of the deck coordinate along geodesics.
    Clt {
        #[arg(long, value_enum, default_value_t = Cover::Z)]
        cover: Cover,
        #[arg(long = "T", default_value_t = 2000.0)]
        t: f64,
        /// Number of equally spaced fit times in (0, T].
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Window property I: fitted r for a given eta.
    Window1 {
        /// Shift model name or file, or `geometric` for the octagon Z-cover.
        #[arg(long, default_value = "full2-cosh")]
        model: String,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Window property II: fitted c for a given delta.
    Window2 {
        #[arg(long, default_value = "full2-cosh")]
        model: String,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Occupation times against the asymptotic formula.
    Keylemma {
        #[arg(long, default_value = "full2-cosh")]
        model: String,
        /// Values of ln T.
        #[arg(long = "log-T", value_delimiter = ',', default_value = "6")]
        log_t: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Sup-norm bound on xi / ln T for counted samples.
        #[arg(long = "box", default_value_t = 0.1)]
        box_radius: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Pressure function, covariance and Legendre dual at the origin.
    Pressure {
        #[arg(long, default_value = "full2-cosh")]
        model: String,
        /// Axis grid `lo:hi:step`.
        #[arg(
            long = "u-grid",
            default_value = "-1:1:0.05",
            allow_hyphen_values = true
        )]
        u_grid: String,
        #[command(flatten)]
        common: Common,
    },
    /// Random checks of the (C, alpha)-good bound.
    Good {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Commensurability indices and joining projection distances.
    Joining {
        /// Built-in subgroup name or JSON file.
        #[arg(long, default_value = "kerphi")]
        spec1: String,
        #[arg(long, default_value = "kerphi")]
        spec2: String,
        /// Word in the octagon generators, e.g. "a1 b1".
        #[arg(long, default_value = "")]
        g0: String,
        /// Horocycle translation of the second factor.
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long = "T", default_value_t = 1e4)]
        t: f64,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, default_value_t = 64)]
        cells: usize,
        /// Monte Carlo points for the cell volumes.
        #[arg(long, default_value_t = 1_000_000)]
        volume_samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Cell coverage of a subgroup orbit in the compact quotient.
    Orbit {
        #[arg(long, default_value = "kerphi")]
        spec: String,
        #[arg(long = "L", default_value_t = 6)]
        l: usize,
        #[arg(long, default_value_t = 64)]
        cells: usize,
        #[arg(long, value_enum, default_value_t = Spacing::Area)]
        spacing: Spacing,
        #[arg(long, default_value_t = horolab_core::rigidity::orbit::DEFAULT_MAX_WORDS)]
        max_words: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
pub struct WindowArgs {
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Smallest ln T of the grid.
    #[arg(long = "log-T-min")]
    pub log_t_min: Option<f64>,
    /// Largest ln T of the grid (e^8 symbolic, ln 10^4 geometric by default).
    #[arg(long = "log-T-max")]
    pub log_t_max: Option<f64>,
    #[arg(long = "log-T-step", default_value_t = 0.5)]
    pub log_t_step: f64,
    #[command(flatten)]
    pub common: Common,
}

/// Error surfaced to `main`, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<HoroError> for Failure {
    fn from(e: HoroError) -> Self {
        let code = match &e {
            e if e.is_numeric() => EXIT_NUMERIC,
            HoroError::Config(_) | HoroError::Io(_) | HoroError::Json(_) => EXIT_CONFIG,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("HOROLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::config(format!("HOROLAB_THREADS={value} is not a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| commands::run(cli.command));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NUMERIC),
        Err(f) => {
            eprintln!("horolab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
