mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gapfair::ErrorKind;

#[derive(Parser, Debug)]
#[command(name = "gapfair", version, about = "Group-wise TPR gap auditing of debiasing interventions")]
struct Cli {
    /// Root directory for outputs; each run writes to <out-dir>/<run-id>/.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Seed for splitting or generation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Comma-separated seeds for repeated runs (default 1,2,3,4,5).
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a corpus, optionally drop stopwords, and write train/dev/test splits.
    Prepare(PrepareArgs),
    /// Run a baseline and a debiased pipeline over several seeds and compare.
    Run(RunArgs),
    /// Recompute verdicts and GAP statistics from a published per-class table.
    Replay(ReplayArgs),
    /// Re-render a saved JSON report into other formats.
    Report(ReportArgs),
    /// Generate a synthetic biased corpus.
    Synth(SynthArgs),
    /// Write hashed sentence embeddings aligned with a dataset file.
    Embed(EmbedArgs),
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// jsonl or csv; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Train, dev and test fractions.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.8, 0.1, 0.1])]
    pub split: Vec<f64>,
    /// Split without stratifying by (class, group).
    #[arg(long)]
    pub unstratified: bool,
    /// Remove stopwords: `default`, `none`, or a word-list file.
    #[arg(long, default_value = "none")]
    pub stopwords: String,
    #[arg(long, default_value = "prepare")]
    pub run_id: String,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub config: Option<PathBuf>,
    /// Repeat the run recorded in a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Fixture CSV (class,tpr_m_orig,tpr_m_deb,tpr_f_orig,tpr_f_deb,gap_orig,gap_deb,base,advanced).
    #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
    pub fixture: Option<PathBuf>,
    /// Name of a bundled fixture: eo, decoupled, cda, inlp, cda_inlp.
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon_gap: f64,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon_harm: f64,
    #[arg(long, default_value = "replay")]
    pub run_id: String,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// JSON report written by `run` or `replay`.
    #[arg(long)]
    pub input: PathBuf,
    /// Formats to write: json, csv, md, svg.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["md".to_string(), "svg".to_string()])]
    pub formats: Vec<String>,
    #[arg(long, default_value = "report")]
    pub run_id: String,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// TOML generator settings; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub groups: Option<usize>,
    #[arg(short, long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub bias: Option<f64>,
    /// Output JSONL path; defaults to <out-dir>/synthetic.jsonl.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub dims: usize,
}

/// Process outcome mapped onto exit codes 1 (usage), 2 (data), 3 (numerical).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(gapfair::Error),
    Data(String),
}

impl From<gapfair::Error> for CliError {
    fn from(e: gapfair::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

pub struct Globals {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GAPFAIR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("GAPFAIR_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let globals = Globals {
        out_dir: cli.out_dir,
        seed: cli.seed,
        seeds: cli.seeds,
    };
    let result = init_threads().and_then(|_| match cli.command {
        Command::Prepare(a) => commands::prepare(&globals, &a),
        Command::Run(a) => commands::run(&globals, &a),
        Command::Replay(a) => commands::replay(&globals, &a),
        Command::Report(a) => commands::report(&globals, &a),
        Command::Synth(a) => commands::synth(&globals, &a),
        Command::Embed(a) => commands::embed(&globals, &a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
