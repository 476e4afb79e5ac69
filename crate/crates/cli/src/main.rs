//! `identikit` — dataset curation and evaluation toolkit for identity
//! embeddings.
//!
//! One binary, one subcommand per pipeline stage: profile sampling →
//! prompt assembly → (images and embeddings produced externally) →
//! threshold calibration → false-match graph → identity filtering →
//! statistical evaluation. Every stage is seeded and deterministic:
//! identical flags and seeds give byte-identical artifacts regardless of
//! `--threads`. Each run also writes a `summary-<command>.json` audit
//! record (the only place timestamps appear).
//!
//! Exit codes: 0 success; 1 invalid usage, configuration, or data;
//! 2 environment failure (I/O, network).

mod commands;
mod summary;

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use identikit::Result;

use summary::RunContext;

#[derive(Parser)]
#[command(
    name = "identikit",
    version,
    about = "Curate and evaluate identity embedding datasets",
    propagate_version = true
)]
struct Cli {
    /// Directory for outputs and run summaries (created if missing).
    #[arg(short = 'o', long, global = true, default_value = ".")]
    output_dir: PathBuf,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short = 'v', long = "verbose", global = true, action = ArgAction::Count)]
    verbose: u8,

    /// Worker thread count (default: all cores). Never affects results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample identity profiles from a weighted attribute configuration.
    Sample(SampleArgs),
    /// Assemble (and optionally expand) text prompts for sampled profiles.
    Prompts(PromptsArgs),
    /// Calibrate a similarity threshold from observed impostor scores.
    Calibrate(CalibrateArgs),
    /// Score all document pairs and export the false-match edge list.
    Graph(GraphArgs),
    /// Remove identities until the dataset false-match rate meets a target.
    Filter(FilterArgs),
    /// Remove every identity involved in any false match.
    FilterStrict(FilterStrictArgs),
    /// Probability that an identity falsely matches at least one of n−1 others.
    Pfm(PfmArgs),
    /// Find synthetic identities too similar to a training/reference set.
    Leakage(LeakageArgs),
    /// Sample mated and non-mated verification scores from embeddings.
    EvalScores(EvalScoresArgs),
    /// Compare two score files via histogram KL divergence.
    EvalKl(EvalKlArgs),
    /// Report attribute distribution shift between all and retained profiles.
    EvalShift(EvalShiftArgs),
    /// Merge embedding sets into one CSV for external projection tools.
    ExportProj(ExportProjArgs),
    /// Generate a synthetic embedding fixture dataset.
    Synth(SynthArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Prompts(_) => "prompts",
            Command::Calibrate(_) => "calibrate",
            Command::Graph(_) => "graph",
            Command::Filter(_) => "filter",
            Command::FilterStrict(_) => "filter-strict",
            Command::Pfm(_) => "pfm",
            Command::Leakage(_) => "leakage",
            Command::EvalScores(_) => "eval-scores",
            Command::EvalKl(_) => "eval-kl",
            Command::EvalShift(_) => "eval-shift",
            Command::ExportProj(_) => "export-proj",
            Command::Synth(_) => "synth",
        }
    }
}

#[derive(Args)]
pub struct SampleArgs {
    /// Attribute configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Number of profiles to sample.
    #[arg(long)]
    pub count: u64,
    /// Master seed; each profile derives its own stream from it.
    #[arg(long)]
    pub seed: u64,
    /// Output profiles file (JSON Lines).
    #[arg(long, default_value = "profiles.jsonl")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PromptsArgs {
    /// Attribute configuration (JSON); defines the template placeholders.
    #[arg(long)]
    pub config: PathBuf,
    /// Profiles to assemble prompts for (JSON Lines).
    #[arg(long)]
    pub profiles: PathBuf,
    /// Prompt template file; defaults to a template derived from the config.
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Prompt expander: `template` (deterministic) or `llm`.
    #[arg(long, default_value = "template")]
    pub expander: String,
    /// Chat-service settings (JSON), used by the `llm` expander.
    #[arg(long)]
    pub llm_config: Option<PathBuf>,
    /// Output profiles file with prompts filled in (JSON Lines).
    #[arg(long, default_value = "prompts.jsonl")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CalibrateArgs {
    /// Score file (CSV `kind,score`).
    #[arg(long)]
    pub scores: PathBuf,
    /// False-match-rate target, e.g. 0.001.
    #[arg(long)]
    pub target: f64,
    /// Which scores to calibrate on.
    #[arg(long, default_value = "nonmated", value_parser = ["nonmated", "mated"])]
    pub kind: String,
    /// Output calibration report (JSON).
    #[arg(long, default_value = "calibration.json")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct GraphArgs {
    /// Document embeddings, one per identity (`.emb1` binary or `.csv`).
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Similarity threshold; pairs strictly above it are false matches.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: f64,
    /// Tile size for the blocked all-pairs scan.
    #[arg(long, default_value_t = identikit::similarity::DEFAULT_BLOCK)]
    pub block: usize,
    /// Output edge list (CSV `id_a,id_b,score`).
    #[arg(long, default_value = "edges.csv")]
    pub out: PathBuf,
    /// Output graph statistics (JSON).
    #[arg(long, default_value = "graph.json")]
    pub report: PathBuf,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["embeddings", "edges"]))]
pub struct FilterArgs {
    /// Document embeddings, one per identity (`.emb1` binary or `.csv`).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Pre-scored edge list (CSV `id_a,id_b,score`); requires --ids.
    #[arg(long, requires = "ids")]
    pub edges: Option<PathBuf>,
    /// Identity list for --edges (one id per line; isolated ids included).
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// Similarity threshold; pairs strictly above it are false matches.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: f64,
    /// Dataset false-match-rate target to filter down to.
    #[arg(long)]
    pub target: f64,
    /// Filtering strategy.
    #[arg(long, default_value = "fmr-target")]
    pub strategy: String,
    /// Tile size for the blocked all-pairs scan (with --embeddings).
    #[arg(long, default_value_t = identikit::similarity::DEFAULT_BLOCK)]
    pub block: usize,
    /// Output filter report (JSON).
    #[arg(long, default_value = "filter_report.json")]
    pub report: PathBuf,
    /// Output retained identity list (one id per line).
    #[arg(long, default_value = "retained.txt")]
    pub retained: PathBuf,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["embeddings", "edges"]))]
pub struct FilterStrictArgs {
    /// Document embeddings, one per identity (`.emb1` binary or `.csv`).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Pre-scored edge list (CSV `id_a,id_b,score`); requires --ids.
    #[arg(long, requires = "ids")]
    pub edges: Option<PathBuf>,
    /// Identity list for --edges (one id per line; isolated ids included).
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// Similarity threshold; pairs strictly above it are false matches.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: f64,
    /// Tile size for the blocked all-pairs scan (with --embeddings).
    #[arg(long, default_value_t = identikit::similarity::DEFAULT_BLOCK)]
    pub block: usize,
    /// Output filter report (JSON).
    #[arg(long, default_value = "filter_strict_report.json")]
    pub report: PathBuf,
    /// Output retained identity list (one id per line).
    #[arg(long, default_value = "retained_strict.txt")]
    pub retained: PathBuf,
}

#[derive(Args)]
pub struct PfmArgs {
    /// Dataset false-match rate.
    #[arg(long)]
    pub fmr: f64,
    /// Dataset size (number of identities).
    #[arg(long)]
    pub n: u64,
}

#[derive(Args)]
pub struct LeakageArgs {
    /// Synthetic identity embeddings (one per identity).
    #[arg(long)]
    pub synthetic: PathBuf,
    /// Training/reference embeddings to compare against.
    #[arg(long)]
    pub training: PathBuf,
    /// Similarity threshold; pairs strictly above it are reported.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: f64,
    /// Output matches (CSV `synthetic_id,training_id,score`).
    #[arg(long, default_value = "leakage.csv")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalScoresArgs {
    /// Document embeddings, one per identity.
    #[arg(long)]
    pub documents: PathBuf,
    /// Live-capture embeddings (any number per identity).
    #[arg(long)]
    pub lives: PathBuf,
    /// Impostor identities sampled per document (capped at availability).
    #[arg(long, default_value_t = identikit::evaluation::DEFAULT_IMPOSTORS_PER_DOC)]
    pub impostors: usize,
    /// Seed for impostor sampling.
    #[arg(long)]
    pub seed: u64,
    /// Output scores (CSV `kind,score`).
    #[arg(long, default_value = "scores.csv")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalKlArgs {
    /// First score file (CSV `kind,score`) — the `p` distribution.
    #[arg(long)]
    pub scores_a: PathBuf,
    /// Second score file (CSV `kind,score`) — the `q` distribution.
    #[arg(long)]
    pub scores_b: PathBuf,
    /// Which score kind to compare.
    #[arg(long, default_value = "nonmated", value_parser = ["nonmated", "mated"])]
    pub kind: String,
    /// Number of histogram bins.
    #[arg(long, default_value_t = identikit::evaluation::DEFAULT_BINS)]
    pub bins: usize,
    /// Histogram range as `lo,hi`.
    #[arg(long, default_value = "-0.2,1", value_parser = parse_range, allow_hyphen_values = true)]
    pub range: (f64, f64),
    /// Additive smoothing for empty bins.
    #[arg(long, default_value_t = identikit::evaluation::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Output divergence report (JSON).
    #[arg(long, default_value = "kl.json")]
    pub out: PathBuf,
    /// Also write the first histogram (JSON).
    #[arg(long)]
    pub hist_a: Option<PathBuf>,
    /// Also write the second histogram (JSON).
    #[arg(long)]
    pub hist_b: Option<PathBuf>,
    /// Also render both histograms as an SVG chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalShiftArgs {
    /// All sampled profiles (JSON Lines).
    #[arg(long)]
    pub profiles: PathBuf,
    /// Retained identity list (one id per line).
    #[arg(long)]
    pub retained: PathBuf,
    /// Output shift report (JSON).
    #[arg(long, default_value = "shift.json")]
    pub out_json: PathBuf,
    /// Output shift table (CSV).
    #[arg(long, default_value = "shift.csv")]
    pub out_csv: PathBuf,
    /// Also render the report as an SVG chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args)]
pub struct ExportProjArgs {
    /// Labelled embedding set as `label=path`; repeat for more sets.
    #[arg(long = "set", value_parser = parse_labeled_path, required = true)]
    pub sets: Vec<(String, PathBuf)>,
    /// Output CSV (`dataset_label,identity_id,v0..`).
    #[arg(long, default_value = "projection.csv")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Full dataset recipe (JSON); overrides the individual flags below.
    #[arg(long, conflicts_with_all = ["n_identities", "dim", "seed"])]
    pub spec: Option<PathBuf>,
    /// Number of identities.
    #[arg(long, required_unless_present = "spec")]
    pub n_identities: Option<usize>,
    /// Embedding dimension (≥ 2).
    #[arg(long, required_unless_present = "spec")]
    pub dim: Option<usize>,
    /// Image perturbation scale.
    #[arg(long, default_value_t = 0.1)]
    pub intra_noise: f64,
    /// Generation seed.
    #[arg(long, required_unless_present = "spec")]
    pub seed: Option<u64>,
    /// Images per identity as `role=count` pairs, comma-separated.
    #[arg(long, default_value = "document=1,live_LL=1")]
    pub images: String,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("range must satisfy lo < hi, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

fn parse_labeled_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (label, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected `label=path`, got {s:?}"))?;
    if label.is_empty() {
        return Err(format!("empty label in {s:?}"));
    }
    Ok((label.to_string(), PathBuf::from(path)))
}

fn run(cli: Cli) -> Result<()> {
    let mut ctx = RunContext::new(&cli.output_dir)?;
    let name = cli.command.name();
    match &cli.command {
        Command::Sample(args) => commands::sample(args, &mut ctx)?,
        Command::Prompts(args) => commands::prompts(args, &mut ctx)?,
        Command::Calibrate(args) => commands::calibrate(args, &mut ctx)?,
        Command::Graph(args) => commands::graph(args, &mut ctx)?,
        Command::Filter(args) => commands::filter(args, &mut ctx)?,
        Command::FilterStrict(args) => commands::filter_strict(args, &mut ctx)?,
        Command::Pfm(args) => commands::pfm(args, &mut ctx)?,
        Command::Leakage(args) => commands::leakage(args, &mut ctx)?,
        Command::EvalScores(args) => commands::eval_scores(args, &mut ctx)?,
        Command::EvalKl(args) => commands::eval_kl(args, &mut ctx)?,
        Command::EvalShift(args) => commands::eval_shift(args, &mut ctx)?,
        Command::ExportProj(args) => commands::export_proj(args, &mut ctx)?,
        Command::Synth(args) => commands::synth(args, &mut ctx)?,
    }
    ctx.finish(name)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
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

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: configuring {threads} worker threads: {e}");
            std::process::exit(1);
        }
    }

    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(if e.is_user_error() { 1 } else { 2 });
    }
}
