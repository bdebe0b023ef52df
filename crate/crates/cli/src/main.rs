//! `afb`: synthesize phantom corpora, train models, analyze frame sequences,
//! score reports against ground truth and benchmark throughput.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "afb", version, about = "Autofluorescence bronchoscopy frame triage and lesion detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// TOML configuration; every key has a default.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic phantom corpus with ground truth and a manifest.
    Synth(SynthArgs),
    /// Train every model from a corpus with a manifest.
    Train(TrainArgs),
    /// Run the pipeline over a directory of frames.
    Analyze(AnalyzeArgs),
    /// Score an analysis against the corpus ground truth.
    Eval(EvalArgs),
    /// Measure throughput with one worker and with several.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CorpusKind {
    /// Every phantom kind in equal numbers (`--count` per kind).
    Mixed,
    /// Informative and uninformative frames in equal numbers (`--count` each).
    Frames,
    /// `--count` informative frames, lesions in the middle half.
    Sequence,
    /// `--count` informative frames, all with lesions.
    AllLesion,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SizeArg {
    /// 720×720.
    Hd,
    /// 360×360.
    Sd,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ClassifierArg {
    Boosted,
    Mlp,
    Fisher,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "mixed")]
    pub corpus: CorpusKind,
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, value_enum, default_value = "hd")]
    pub size: SizeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Corpus directory holding `manifest.csv`.
    #[arg(long, value_name = "DIR")]
    pub frames: PathBuf,
    /// Where model files and `train_report.toml` are written.
    #[arg(long, value_name = "DIR")]
    pub models: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_name = "DIR")]
    pub frames: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub models: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, value_enum, default_value = "boosted")]
    pub classifier: ClassifierArg,
    /// Fill the per-stage timing columns and write `timing.csv`. Timings
    /// vary between runs, so reports are no longer reproducible.
    #[arg(long)]
    pub timing: bool,
    /// Skip the lesion overlay images.
    #[arg(long)]
    pub no_overlays: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Corpus directory holding `manifest.csv`.
    #[arg(long, value_name = "DIR")]
    pub frames: PathBuf,
    /// Output directory of `analyze`; `metrics.csv` is written there.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_name = "DIR")]
    pub frames: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub models: PathBuf,
    /// Worker count compared against a single worker.
    #[arg(long, default_value_t = 8)]
    pub workers: usize,
    #[arg(long, value_enum, default_value = "boosted")]
    pub classifier: ClassifierArg,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Train(a) => commands::train(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
