//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Explain which variables make a multivariate outlier outlying.
///
/// Exit status: 0 on success, 1 on errors (including invalid usage), 2 when
/// some selected case is not outlying or its scan exhausts the grid.
#[derive(Debug, Parser)]
#[command(name = "spadimo", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Flag the variables responsible for one or all outliers.
    Explain(ExplainArgs),
    /// Dense or sparse direction of maximal outlyingness of one case.
    Direction(DirectionArgs),
    /// Sparse directions over the eta grid, for the screeplot and heatmap.
    Path(PathArgs),
    /// Run the contamination simulation for one table cell.
    Simulate(SimulateArgs),
    /// Detector weights and outlyingness of every case.
    Weights(WeightsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Correlation {
    A09,
    Random,
}

/// An eta grid `LO:HI:STEP`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub low: f64,
    pub high: f64,
    pub step: f64,
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [low, high, step] = parts.as_slice() else {
        return Err(format!("expected LO:HI:STEP, got {s:?}"));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Grid {
        low: num(low)?,
        high: num(high)?,
        step: num(step)?,
    })
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Comma-separated numeric table; a non-numeric first row is a header.
    #[arg(long)]
    pub input: PathBuf,
    /// Skip rows with missing or non-numeric cells instead of failing.
    #[arg(long)]
    pub drop_incomplete: bool,
    /// Significance of the detector's chi-squared cutoff.
    #[arg(long, default_value_t = 0.975)]
    pub detect_alpha: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Eta grid; defaults to 0.1:0.9:0.05 when n >= 5p and 0.1:0.6:0.05 otherwise.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    /// Significance of the stopping rule.
    #[arg(long, default_value_t = 0.975)]
    pub alpha: f64,
    /// Number of SNIPLS components.
    #[arg(long, default_value_t = 1)]
    pub h: usize,
    /// Weight given to a zero-weight case in the regression.
    #[arg(long, default_value_t = 1e-4)]
    pub eps_weight: f64,
    /// Reuse the full-data weights after removing columns.
    #[arg(long)]
    pub no_refit: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// 1-based case number.
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    pub case: Option<usize>,
    /// Explain every case with detector weight zero.
    #[arg(long)]
    pub all: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DirectionArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// 1-based case number.
    #[arg(long)]
    pub case: usize,
    /// Sparsity parameter; the dense direction is reported when absent.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub h: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub eps_weight: f64,
    /// json or csv.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// 1-based case number.
    #[arg(long)]
    pub case: usize,
    /// csv writes screeplot.csv and directions.csv, svg additionally writes
    /// screeplot.svg and heatmap.svg, json writes one document.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output directory (required for svg); standard output otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, value_enum, default_value_t = Correlation::A09)]
    pub corr: Correlation,
    /// Seed of the random correlation matrices.
    #[arg(long, default_value_t = 1)]
    pub corr_seed: u64,
    /// Fraction of the case's variables that are contaminated.
    #[arg(long)]
    pub frac: f64,
    /// Value written into the contaminated cells.
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub scan: ScanArgs,
    #[arg(long, default_value_t = 0.975)]
    pub detect_alpha: f64,
    /// Also list every replication (csv); json always includes them.
    #[arg(long)]
    pub records: bool,
    /// json or csv.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct WeightsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Significance of the reported outlyingness cutoff.
    #[arg(long, default_value_t = 0.975)]
    pub alpha: f64,
    /// json or csv.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
