mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use trackforge_core::{ModeKind, Precision};

use failure::Failure;

/// Multi-object tracking pipeline: run, benchmark, evaluate, synthesize.
#[derive(Debug, Parser)]
#[command(name = "trackforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track a scenario or a detection file and write MOT-format results.
    Track(TrackArgs),
    /// Sweep modes, precisions and batch sizes; report FPS per run.
    Bench(BenchArgs),
    /// Score a result file against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic scenario and its ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Serial,
    Batched,
    Parallel,
}

impl From<ModeArg> for ModeKind {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Serial => ModeKind::Serial,
            ModeArg::Batched => ModeKind::BatchedSerial,
            ModeArg::Parallel => ModeKind::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrecisionArg {
    Full,
    Mixed,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Full => Precision::Full,
            PrecisionArg::Mixed => Precision::Mixed,
        }
    }
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Scenario JSON written by `synth`.
    #[arg(long, conflicts_with_all = ["detections", "embeddings"])]
    scenario: Option<PathBuf>,
    /// MOT-format detection file.
    #[arg(long, requires = "embeddings")]
    detections: Option<PathBuf>,
    /// Binary embedding sidecar matching `--detections`.
    #[arg(long, requires = "detections")]
    embeddings: Option<PathBuf>,
    /// Seed for per-frame noise of a scenario source.
    #[arg(long)]
    seed: Option<u64>,
    /// Process only the first N frames.
    #[arg(long)]
    frames: Option<usize>,
}

#[derive(Debug, Args)]
struct RuntimeArgs {
    /// Pipeline configuration JSON; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Warm-up frames excluded from FPS.
    #[arg(long)]
    warmup: Option<usize>,
    /// Spin instead of sleeping when emulating latency.
    #[arg(long)]
    busy_wait: bool,
}

#[derive(Debug, Args)]
struct TrackArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    runtime: RuntimeArgs,
    #[arg(long, value_enum, default_value = "serial")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "full")]
    precision: PrecisionArg,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    /// MOT result file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run report CSV; printed to stderr when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    runtime: RuntimeArgs,
    /// Batch sizes, e.g. `1,2,4` or `1-10`.
    #[arg(long, default_value = "1-10")]
    batch_sizes: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "serial,batched,parallel")]
    modes: Vec<ModeArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "full,mixed")]
    precisions: Vec<PrecisionArg>,
    /// CSV report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a markdown summary in the four-variant table layout.
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Ground-truth file (MOT16 gt.txt layout).
    #[arg(long)]
    gt: PathBuf,
    /// Tracker result file.
    #[arg(long)]
    result: PathBuf,
    #[arg(long, default_value_t = trackforge_core::moteval::DEFAULT_IOU_MIN)]
    iou_min: f64,
    /// Metrics CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print a markdown table instead of CSV.
    #[arg(long)]
    markdown: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    objects: usize,
    #[arg(long, default_value_t = 300)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    embedding_dim: usize,
    #[arg(long, default_value_t = 1920)]
    width: u32,
    #[arg(long, default_value_t = 1080)]
    height: u32,
    #[arg(long)]
    p_miss: Option<f64>,
    #[arg(long)]
    lambda_fp: Option<f64>,
    #[arg(long)]
    sigma_box: Option<f64>,
    #[arg(long)]
    sigma_emb: Option<f64>,
    /// Minimum cosine distance between identities.
    #[arg(long, default_value_t = 0.5)]
    margin: f64,
    /// Stagger object births and deaths over the sequence.
    #[arg(long)]
    staggered: bool,
    /// Scenario JSON output.
    #[arg(long, default_value = "scenario.json")]
    out: PathBuf,
    /// Ground-truth output.
    #[arg(long, default_value = "gt.txt")]
    gt: PathBuf,
}

/// Parses arguments. Usage errors print the offending subcommand's usage
/// line and exit with 2.
fn parse_args() -> Result<Cli, ExitCode> {
    Cli::try_parse().map_err(|e| {
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            e.exit();
        }
        let _ = e.print();
        let mut cmd = Cli::command();
        let sub = std::env::args().nth(1);
        let usage = match sub.as_deref().and_then(|s| cmd.find_subcommand_mut(s)) {
            Some(sc) => sc.clone().bin_name(format!("trackforge {}", sc.get_name())).render_usage(),
            None => cmd.render_usage(),
        };
        eprintln!("\n{usage}");
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = match parse_args() {
        Ok(c) => c,
        Err(code) => return code,
    };
    let result = match cli.command {
        Command::Track(a) => commands::track(a),
        Command::Bench(a) => commands::bench(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("trackforge: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}
