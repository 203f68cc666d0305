use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "witt", version, about = "Canonical Witt connections: inspection, residual checks and geodesics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the grading, Gram matrix, torsion and connection coefficients at a point.
    Inspect(InspectArgs),
    /// Run residual suites and write a report.
    Check(CheckArgs),
    /// Integrate a geodesic and write the trajectory table.
    Geodesic(GeodesicArgs),
    /// Re-emit the model as a normalized manifold spec document.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Builtin model name.
    #[arg(long)]
    pub model: Option<String>,
    /// Manifold spec document (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub source: Source,
    /// Oscillator parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda: Option<Vec<f64>>,
    /// Size parameter of the abelian and Robinson builtins.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Suite {
    Compatibility,
    Bianchi,
    Symmetric,
    Robinson,
    All,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Base point, comma separated; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Option<Vec<f64>>,
    /// Emit JSON instead of text.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Suites to run; defaults to compatibility and bianchi. `all` adds symmetric, and robinson when the model carries J.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub suite: Vec<Suite>,
    /// Tolerance for every residual; defaults to 1e-12 for Lie models and 1e-9 for charts.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of sample points for chart models.
    #[arg(long, default_value_t = witt_core::sampling::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Report file; the JSON report goes to stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Plain,
    Lightlike,
    NormalSr,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Initial point; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Option<Vec<f64>>,
    /// Initial frame velocity. Defaults to the first screen vector for normal
    /// sub-Riemannian runs, to n for lightlike runs and to E_1 otherwise.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub v0: Option<Vec<f64>>,
    /// Initial multipliers (λ1, λ2) for normal sub-Riemannian runs.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1")]
    pub lambda0: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1")]
    pub span: Vec<f64>,
    #[arg(long, default_value_t = witt_core::DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "plain")]
    pub mode: Mode,
    /// Shorthand for `--mode normal-sr`.
    #[arg(long, conflicts_with = "mode")]
    pub normal_sr: bool,
    /// Shorthand for `--mode lightlike`.
    #[arg(long, conflicts_with_all = ["mode", "normal_sr"])]
    pub lightlike: bool,
    /// Tolerance of the lightlike verification.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl GeodesicArgs {
    pub fn resolved_mode(&self) -> Mode {
        if self.normal_sr {
            Mode::NormalSr
        } else if self.lightlike {
            Mode::Lightlike
        } else {
            self.mode
        }
    }
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
