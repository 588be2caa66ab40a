//! `readcite`: readership and citation analysis from the command line.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use readcite_core::dates::DateWindow;

use crate::commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "readcite", version, about = "Readership and citation bibliometrics")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and print its summary.
    Ingest(IngestArgs),
    /// Fit the four-mode readership model to a reads-by-age curve.
    Fit(FitArgs),
    /// Emit model curves for plotting.
    Curves(CurvesArgs),
    /// Reads-versus-cites cross-tabulation and reference-link follows.
    Crosstab(CrosstabArgs),
    /// Per-author normalized counts, SumProd, Read10 and percentiles.
    Metrics(MetricsArgs),
    /// Compare organizations against a reference sample.
    Rank(RankArgs),
    /// Generate a synthetic corpus with known ground truth.
    Simulate,
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Directory holding papers.tsv, reads.tsv, cites.tsv, authors.tsv, orgs.tsv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub papers: Vec<PathBuf>,
    #[arg(long)]
    pub reads: Vec<PathBuf>,
    #[arg(long)]
    pub cites: Vec<PathBuf>,
    #[arg(long)]
    pub authors: Vec<PathBuf>,
    #[arg(long)]
    pub orgs: Vec<PathBuf>,
    /// Latest admissible publication date (default: today).
    #[arg(long)]
    pub as_of: Option<chrono::NaiveDate>,
}

#[derive(Debug, Args, Default)]
pub struct SelectArgs {
    /// Restrict to these venues (repeatable).
    #[arg(long)]
    pub venue: Vec<String>,
    /// Restrict to refereed articles.
    #[arg(long)]
    pub refereed: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    /// START..END; defaults to the calendar years spanned by the reads.
    #[arg(long)]
    pub read_window: Option<DateWindow>,
    /// START..END; defaults to the read window.
    #[arg(long)]
    pub cite_window: Option<DateWindow>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Binned curve TSV (age, rate, articles) instead of a corpus.
    #[arg(long, conflicts_with = "data")]
    pub curve: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    #[arg(long)]
    pub read_window: Option<DateWindow>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long, default_value_t = 60.0)]
    pub max_age: f64,
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    /// Publication year of the cohort followed by the diachronous curve.
    #[arg(long, default_value_t = 1976)]
    pub pub_year: i32,
    #[arg(long, default_value_t = 25)]
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CiteCount {
    Window,
    Lifetime,
}

#[derive(Debug, Args)]
pub struct CrosstabArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    #[arg(long)]
    pub read_window: Option<DateWindow>,
    /// Inclusive publication years FIRST..LAST.
    #[arg(long)]
    pub pub_years: Option<String>,
    #[arg(long, value_enum, default_value_t = CiteCount::Window)]
    pub cite_count: CiteCount,
    /// Seconds between a citation-list view and a read it may have led to.
    #[arg(long, default_value_t = readcite_core::crosstab::DEFAULT_LAG_SECONDS)]
    pub lag: i64,
    /// Lower edges of the link-follow age buckets, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub follow_ages: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub read_window: Option<DateWindow>,
    /// Citations dated on or before this day count (default: last day of the read window).
    #[arg(long)]
    pub cite_cutoff: Option<chrono::NaiveDate>,
    /// Read weight; calibrated on the sample when absent.
    #[arg(long)]
    pub f: Option<f64>,
    /// Also emit read-cite points split at this publication year.
    #[arg(long)]
    pub split_year: Option<i32>,
    /// Count whole papers instead of author shares.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, default_value_t = 10.0)]
    pub read10_years: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RankMetric {
    Sumprod,
    Cites,
    Read10,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// metrics.tsv written by `readcite metrics`.
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, value_enum, default_value_t = RankMetric::Sumprod)]
    pub metric: RankMetric,
    /// Use this organization's members as the reference sample.
    #[arg(long, conflicts_with = "reference_authors")]
    pub reference_org: Option<String>,
    /// File of author ids, one per line, forming the reference sample.
    #[arg(long)]
    pub reference_authors: Option<PathBuf>,
    /// Members at or below this percentile of their organization are ignored.
    #[arg(long, default_value_t = readcite_core::rank::DEFAULT_CUT_PERCENTILE)]
    pub cut: f64,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("READCITE_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("READCITE_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Module(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("readcite: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
