//! `fqe`: build reference datasets, make evaluation corpora, estimate first
//! quantization factors of JPEG files and score the estimates.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fqe_core::RegVariant;

/// Exit codes beyond the generic failure (1).
pub mod exit {
    pub const PARSE: u8 = 2;
    pub const DATASET: u8 = 3;
    pub const UNSUPPORTED: u8 = 4;
}

#[derive(Parser)]
#[command(
    name = "fqe",
    version,
    about = "First quantization estimation for double-compressed JPEG images"
)]
struct Cli {
    /// Worker threads; the FQE_JOBS environment variable takes precedence
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a reference dataset from a directory of PGM images
    Build(BuildArgs),
    /// Estimate the first quantization factors of one JPEG file
    Estimate(EstimateArgs),
    /// Make a corpus of double-compressed JPEG files with a ground-truth manifest
    MakeCorpus(CorpusArgs),
    /// Estimate every file of a corpus and write accuracy reports
    Evaluate(EvaluateArgs),
    /// Write synthetic PGM images, for use when no photo collection is at hand
    Synth(SynthArgs),
}

#[derive(Args)]
pub struct BuildArgs {
    /// Directory of binary PGM (P5) images
    #[arg(long)]
    pub raw_dir: PathBuf,
    /// Output dataset file
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 22)]
    pub q1_max: u32,
    /// Number of zig-zag coefficients per patch
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    /// Side of the centre patch cropped from every image
    #[arg(long, default_value_t = 64)]
    pub patch: usize,
}

#[derive(Args, Clone)]
pub struct ParamArgs {
    /// Number of zig-zag coefficients to estimate
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    /// Largest candidate first factor; defaults to the dataset's
    #[arg(long)]
    pub q1_max: Option<u32>,
    /// Nearest-key candidates compared per sub-dataset
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Weight of the data term
    #[arg(long, default_value_t = 0.92)]
    pub w: f64,
    #[arg(long, default_value = "reg3", value_parser = parse_variant)]
    pub reg_variant: RegVariant,
    /// Report the raw per-coefficient argmins as the final estimates
    #[arg(long)]
    pub no_reg: bool,
}

fn parse_variant(s: &str) -> Result<RegVariant, String> {
    s.parse()
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Crop {
    Center,
    Random,
}

#[derive(Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub raw_dir: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// First-compression quality factors, one corpus cell each
    #[arg(long, value_delimiter = ',', required_unless_present = "tables")]
    pub qf1: Vec<u32>,
    /// File of explicit first-compression tables: 8 lines of 8 integers each, blank-line separated
    #[arg(long, conflicts_with = "qf1")]
    pub tables: Option<PathBuf>,
    #[arg(long, default_value_t = 90)]
    pub qf2: u32,
    #[arg(long, default_value_t = 64)]
    pub patch: usize,
    #[arg(long, value_enum, default_value = "random")]
    pub crop: Crop,
    /// Seed for random crops
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Corpus directory holding manifest.csv
    #[arg(long)]
    pub corpus_dir: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Where to write report.csv, report.json and estimates.csv; defaults to the corpus directory
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Width and height of each image
    #[arg(long, default_value_t = 96)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// An error carrying the process exit code it should produce.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

fn configure_threads(flag: Option<usize>) -> anyhow::Result<()> {
    let jobs = match std::env::var("FQE_JOBS") {
        Ok(v) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| anyhow::anyhow!("FQE_JOBS={v:?} is not a thread count"))?,
        ),
        _ => flag,
    };
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.jobs)
        .map_err(Failure::from)
        .and_then(|()| match cli.command {
            Command::Build(a) => commands::build(a),
            Command::Estimate(a) => commands::estimate(a),
            Command::MakeCorpus(a) => commands::make_corpus(a),
            Command::Evaluate(a) => commands::evaluate(a),
            Command::Synth(a) => commands::synth(a),
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
