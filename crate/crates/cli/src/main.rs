//! `myoselect` command line: synthesize, contaminate, featurize and
//! evaluate EMG/MMG signalsets.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use myoselect::contamination::{inject, plan_random_contamination, ContaminationPlan, NoiseKind, PlanRecord};
use myoselect::ensemble::KSpec;
use myoselect::evaluation::{emit_report, run_experiment, ExperimentConfig, ExperimentReport, Method};
use myoselect::features::FeatureTable;
use myoselect::seed::{self, tag};
use myoselect::signalset::{load_signalset, save_signalset, synth_signalset, SignalSetMeta, SynthConfig};

#[derive(Parser, Debug)]
#[command(name = "myoselect", version, about = "Dual-ensemble recognition of contaminated EMG/MMG signals")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, env = "MYOSELECT_SEED", default_value_t = 1)]
    seed: u64,
    /// Output path (directory or file, depending on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic signalset directory.
    Synth(SynthArgs),
    /// Contaminate every trial of a signalset and log the plans.
    Inject(InjectArgs),
    /// Export the DWT feature matrix as CSV.
    Features(FeaturesArgs),
    /// Run the cross-validated protocol and write a report directory.
    Evaluate(EvaluateArgs),
    /// Re-emit report files from a saved report.json.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 8)]
    classes: usize,
    /// Trials per class.
    #[arg(long, default_value_t = 40)]
    trials: usize,
    /// Sensors per modality (L); the set gets 2L channels.
    #[arg(long, default_value_t = 4)]
    channels: usize,
    #[arg(long, default_value_t = 1000.0)]
    duration_ms: f64,
    #[arg(long, default_value_t = 1000.0)]
    rate: f64,
}

#[derive(Args, Debug)]
struct InjectArgs {
    /// Clean signalset directory.
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    snr: f64,
    /// Noise kind, or `random` for a random kind and channel set per trial.
    #[arg(long, default_value = "random")]
    kind: String,
    /// Channels to contaminate (required unless the kind is random).
    #[arg(long, value_delimiter = ',')]
    channels: Vec<usize>,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    input: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    input: PathBuf,
    /// K spec such as `7` or `2,3,5`; repeat the flag for several.
    #[arg(long = "k", value_parser = parse_kspec)]
    k: Vec<KSpec>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Vec<Method>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Four repeats instead of one.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// A report.json written by `evaluate`.
    input: PathBuf,
}

fn parse_kspec(s: &str) -> Result<KSpec, String> {
    s.parse().map_err(|e: myoselect::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: myoselect::Error| e.to_string())
}

/// Run-time failure that maps to exit code 1 after its message is shown.
struct Failure(String);

fn out_path(cli: &Cli) -> Result<&Path> {
    match &cli.out {
        Some(p) => Ok(p),
        None => bail!("--out is required"),
    }
}

fn cmd_synth(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let out = out_path(cli)?;
    let set = synth_signalset(&SynthConfig {
        classes: a.classes,
        trials_per_class: a.trials,
        channels_per_modality: a.channels,
        duration_ms: a.duration_ms,
        rate_hz: a.rate,
        seed: cli.seed,
    })?;
    save_signalset(&set, out)?;
    eprintln!("wrote {} trials to {}", set.len(), out.display());
    Ok(())
}

fn cmd_inject(cli: &Cli, a: &InjectArgs) -> Result<()> {
    let out = out_path(cli)?;
    let set = load_signalset(&a.input)?;
    let channels = set.channel_count();
    let plans: Vec<ContaminationPlan> = if a.kind.eq_ignore_ascii_case("random") {
        if !a.channels.is_empty() {
            bail!("--channels cannot be combined with a random kind");
        }
        plan_random_contamination(set.len(), channels, a.snr, cli.seed)?
    } else {
        let kind: NoiseKind = a.kind.parse()?;
        if a.channels.is_empty() {
            bail!("--channels is required for kind {kind}");
        }
        (0..set.len())
            .map(|i| ContaminationPlan {
                kind,
                snr_db: a.snr,
                channels: a.channels.iter().copied().collect(),
                seed: seed::derive(cli.seed, &[tag::CONTAMINATION, i as u64]),
            })
            .collect()
    };
    for p in &plans {
        p.validate(channels)?;
    }
    let recordings = set
        .recordings()
        .par_iter()
        .zip(&plans)
        .map(|(r, p)| inject(r, p))
        .collect::<myoselect::Result<Vec<_>>>()?;
    let meta = SignalSetMeta {
        name: format!("{}-contaminated", set.meta().name),
        seed: Some(cli.seed),
        contaminated: true,
    };
    let dirty = set.with_recordings(recordings, meta)?;
    save_signalset(&dirty, out)?;
    let mut jsonl = String::new();
    for (i, p) in plans.iter().enumerate() {
        jsonl.push_str(&serde_json::to_string(&PlanRecord::new(i, p))?);
        jsonl.push('\n');
    }
    let plan_path = out.join("plans.jsonl");
    fs::write(&plan_path, jsonl).with_context(|| format!("writing {}", plan_path.display()))?;
    eprintln!("contaminated {} trials into {}", dirty.len(), out.display());
    Ok(())
}

fn cmd_features(cli: &Cli, a: &FeaturesArgs) -> Result<()> {
    let out = out_path(cli)?;
    let set = load_signalset(&a.input)?;
    let table = FeatureTable::from_signalset(&set)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(out, table.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn evaluate_config(cli: &Cli, a: &EvaluateArgs) -> Result<ExperimentConfig> {
    let mut cfg = if a.paper_scale {
        ExperimentConfig::paper(cli.seed)
    } else {
        ExperimentConfig::desk(cli.seed)
    };
    if !a.k.is_empty() {
        cfg.k_specs = a.k.clone();
    }
    if !a.snr.is_empty() {
        cfg.snr_levels = a.snr.clone();
    }
    if !a.methods.is_empty() {
        cfg.methods = a.methods.clone();
    }
    if let Some(f) = a.folds {
        cfg.folds = f;
    }
    if let Some(r) = a.repeats {
        cfg.repeats = r;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check_report(report: &ExperimentReport) -> Result<(), Failure> {
    if report.dominance_violations.is_empty() {
        return Ok(());
    }
    let mut msg = format!(
        "oracle dominance violated in {} cells",
        report.dominance_violations.len()
    );
    for v in report.dominance_violations.iter().take(10) {
        msg.push_str("\n  ");
        msg.push_str(v);
    }
    Err(Failure(msg))
}

fn cmd_evaluate(cli: &Cli, a: &EvaluateArgs) -> Result<Result<(), Failure>> {
    let out = out_path(cli)?;
    let cfg = evaluate_config(cli, a)?;
    let set = load_signalset(&a.input)?;
    let report = run_experiment(&set, &cfg)?;
    let files = emit_report(&report, out)?;
    eprintln!("wrote {} files to {}", files.len(), out.display());
    Ok(check_report(&report))
}

fn cmd_report(cli: &Cli, a: &ReportArgs) -> Result<Result<(), Failure>> {
    let out = out_path(cli)?;
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let report = ExperimentReport::from_json(&text)?;
    emit_report(&report, out)?;
    Ok(check_report(&report))
}

fn run(cli: &Cli) -> Result<Result<(), Failure>> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(cli, a).map(Ok),
        Command::Inject(a) => cmd_inject(cli, a).map(Ok),
        Command::Features(a) => cmd_features(cli, a).map(Ok),
        Command::Evaluate(a) => cmd_evaluate(cli, a),
        Command::Report(a) => cmd_report(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.out.is_none() {
        let mut cmd = <Cli as clap::CommandFactory>::command();
        cmd.error(clap::error::ErrorKind::MissingRequiredArgument, "--out is required")
            .exit();
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs as usize)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = pool.install(|| run(&cli));
    let _ = std::io::stdout().flush();
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure(msg))) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
