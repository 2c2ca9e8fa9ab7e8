//! Command-line interface: `generate`, `train`, `eval`, `sweep`, `inspect`.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage/configuration/data
//! error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::checkpoint;
use crate::config::{RunConfig, SWEEP_KEYS};
use crate::data::generate_synthetic;
use crate::error::{QuarkError, Result};
use crate::graph::write_matrix_text;
use crate::model::build_forward;
use crate::pipeline::{synthetic_config, Experiment};
use crate::training::EPOCH_LOG_HEADER;

pub const CONFIG_SNAPSHOT: &str = "config.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const EPOCH_LOG: &str = "epoch_log.tsv";
pub const EPOCH_TIMES: &str = "epoch_times.tsv";

#[derive(Debug, Parser)]
#[command(name = "quark", version, about = "EEG-driven item recommendation with quantum-inspired graph features")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset directory.
    Generate(CommonArgs),
    /// Train and write a checkpoint, config snapshot and epoch log.
    Train(CommonArgs),
    /// Evaluate a checkpoint with the 100-candidate protocol.
    Eval(EvalArgs),
    /// Train and evaluate once per value of one hyperparameter.
    Sweep(SweepArgs),
    /// Dump collapse probabilities and adjacency matrices for one recording.
    Inspect(InspectArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Generate CLASSESxPER_CLASS synthetic recordings instead of loading data.
    #[arg(long, value_name = "CxN")]
    pub synthetic: Option<String>,
    /// Dataset directory written by `generate`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub step: Option<usize>,
    #[arg(long)]
    pub basis: Option<usize>,
    #[arg(long)]
    pub c: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Any other configuration key, as KEY=VALUE (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Run directory from `train` (uses its config snapshot and checkpoint).
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Also write feeling/style threshold curves.
    #[arg(long)]
    pub style: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// One of window, step, basis, c, alpha, beta, depth, xi.
    #[arg(long)]
    pub key: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<String>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Recording index in the dataset.
    #[arg(long, default_value_t = 0)]
    pub instance: usize,
}

impl CommonArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("seed", self.seed.map(|v| v.to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("synthetic", self.synthetic.clone());
        push("data", self.data.as_ref().map(|p| p.display().to_string()));
        push("k", self.k.map(|v| v.to_string()));
        push("window", self.window.map(|v| v.to_string()));
        push("step", self.step.map(|v| v.to_string()));
        push("basis", self.basis.map(|v| v.to_string()));
        push("c", self.c.map(|v| v.to_string()));
        push("alpha", self.alpha.map(|v| v.to_string()));
        push("beta", self.beta.map(|v| v.to_string()));
        push("depth", self.depth.map(|v| v.to_string()));
        push("xi", self.xi.map(|v| v.to_string()));
        push("epochs", self.epochs.map(|v| v.to_string()));
        push("learning_rate", self.learning_rate.map(|v| v.to_string()));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| QuarkError::config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    /// Resolve with `base` as the configuration file when `--config` is
    /// absent.
    fn resolve(&self, base: Option<&Path>) -> Result<RunConfig> {
        let overrides = self.overrides()?;
        match self.config.as_deref().or(base) {
            Some(path) => RunConfig::load(path, &overrides),
            None => RunConfig::resolve(&[], &overrides),
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| QuarkError::io(dir, e))
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, text).map_err(|e| QuarkError::io(path, e))
}

pub fn cmd_generate(args: &CommonArgs) -> Result<()> {
    let cfg = args.resolve(None)?;
    let (classes, per_class) = cfg
        .synthetic
        .ok_or_else(|| QuarkError::config("generate needs --synthetic CxN"))?;
    let data = generate_synthetic(&synthetic_config(&cfg, classes, per_class))?;
    data.save(&cfg.out)?;
    println!(
        "wrote {} recordings and {} items to {}",
        data.recordings.len(),
        data.catalog.len(),
        cfg.out.display()
    );
    Ok(())
}

/// Train per `cfg` into `cfg.out`. Returns the experiment and final
/// parameters for callers that evaluate afterwards.
pub fn run_training(cfg: RunConfig) -> Result<(Experiment, crate::model::ModelParams)> {
    let out = cfg.out.clone();
    create_dir(&out)?;
    write(&out.join(CONFIG_SNAPSHOT), cfg.to_text())?;
    let exp = Experiment::from_config(cfg)?;
    let outcome = exp.train(exp.init_params()?)?;

    let mut log = format!("{EPOCH_LOG_HEADER}\n");
    for r in &outcome.log {
        log.push_str(&r.to_line());
        log.push('\n');
    }
    write(&out.join(EPOCH_LOG), log)?;
    let times: String = outcome
        .log
        .iter()
        .zip(&outcome.wall_times)
        .map(|(r, t)| format!("{}\t{t:.3}\n", r.epoch))
        .collect();
    write(&out.join(EPOCH_TIMES), format!("epoch\tseconds\n{times}"))?;
    checkpoint::save(&out.join(CHECKPOINT_FILE), &exp.config.model, &outcome.params)?;
    if let Some(reason) = outcome.halted {
        return Err(QuarkError::NonFinite(format!("training halted ({reason}); last finite checkpoint written")));
    }
    Ok((exp, outcome.params))
}

pub fn cmd_train(args: &CommonArgs) -> Result<()> {
    let cfg = args.resolve(None)?;
    let out = cfg.out.clone();
    let epochs = cfg.train.epochs;
    run_training(cfg)?;
    println!("trained {epochs} epochs; outputs in {}", out.display());
    Ok(())
}

fn load_run(common: &CommonArgs, run: Option<&Path>, checkpoint: Option<&Path>) -> Result<(RunConfig, crate::model::ModelParams)> {
    let snapshot = run.map(|r| r.join(CONFIG_SNAPSHOT));
    let mut cfg = common.resolve(snapshot.as_deref())?;
    let ckpt = checkpoint
        .map(Path::to_path_buf)
        .or_else(|| run.map(|r| r.join(CHECKPOINT_FILE)));
    let params = match ckpt {
        Some(path) => {
            let (model, params) = checkpoint::load(&path)?;
            cfg.model = model;
            params
        }
        None => crate::model::ModelParams::init(&cfg.model, cfg.seed)?,
    };
    if common.out.is_none() {
        if let Some(r) = run {
            cfg.out = r.to_path_buf();
        }
    }
    Ok((cfg, params))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let (cfg, params) = load_run(&args.common, args.run.as_deref(), args.checkpoint.as_deref())?;
    let out = cfg.out.clone();
    create_dir(&out)?;
    let exp = Experiment::from_config(cfg)?;
    let report = exp.evaluate(&params)?;
    write(&out.join("metrics.tsv"), report.to_tsv())?;
    write(&out.join("metrics.txt"), report.table())?;
    print!("{}", report.table());
    if args.style {
        let style = exp.style(&report)?;
        write(&out.join("style_curves.tsv"), style.curves_tsv())?;
        println!(
            "style: {} images scored, {} missing; curves in {}",
            style.scores.len(),
            style.missing,
            out.join("style_curves.tsv").display()
        );
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    if !SWEEP_KEYS.contains(&args.key.as_str()) {
        return Err(QuarkError::config(format!(
            "cannot sweep {:?}; valid keys: {}",
            args.key,
            SWEEP_KEYS.join(", ")
        )));
    }
    let base = args.common.resolve(None)?;
    let mut table = format!("{}\tprecision\trecall\tf1\n", args.key);
    for value in &args.values {
        let mut cfg = base.clone();
        cfg.set(&args.key, value)?;
        cfg.validate_all()?;
        cfg.out = base.out.join(format!("{}={}", args.key, value));
        let (exp, params) = run_training(cfg)?;
        let report = exp.evaluate(&params)?;
        write(&exp.config.out.join("metrics.tsv"), report.to_tsv())?;
        let m = report.mean;
        table.push_str(&format!("{value}\t{}\t{}\t{}\n", m.precision, m.recall, m.f1));
        println!("{}={value}: P@{} = {:.4}", args.key, exp.config.protocol.k, m.precision);
    }
    create_dir(&base.out)?;
    write(&base.out.join("sweep.tsv"), table)?;
    Ok(())
}

pub fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let (cfg, params) = load_run(&args.common, args.run.as_deref(), args.checkpoint.as_deref())?;
    let out = cfg.out.join("inspect");
    create_dir(&out)?;
    let exp = Experiment::from_config(cfg)?;
    let example = exp.examples.get(args.instance).ok_or_else(|| {
        QuarkError::config(format!("instance {} out of range (0..{})", args.instance, exp.examples.len()))
    })?;
    let (fg, collapses, parts) = build_forward(&example.input, &params, &exp.config.model)?;
    let inter = fg.intermediates(collapses, parts);

    let mut probs = String::from("segment\tprobabilities\ttop\tbottom\n");
    for (j, c) in inter.collapses.iter().enumerate() {
        let p: Vec<String> = c.probabilities.iter().map(|v| v.to_string()).collect();
        probs.push_str(&format!("{}\t{}\t{:?}\t{:?}\n", j + 1, p.join(" "), c.top, c.bottom));
    }
    write(&out.join("collapse.tsv"), probs)?;
    let a = &inter.adjacency;
    for (name, m) in [
        ("continuity_raw.txt", &inter.raw_continuity),
        ("interference_raw.txt", &inter.raw_interference),
        ("continuity_filtered.txt", &a.continuity),
        ("interference_filtered.txt", &a.interference),
        ("continuity_normalized.txt", &a.continuity_normalized),
        ("interference_normalized.txt", &a.interference_normalized),
        ("mixed_states.txt", &inter.mixed),
    ] {
        write_matrix_text(&out.join(name), m)?;
    }
    println!(
        "recording {} (label {}): wrote collapse probabilities and adjacency matrices to {}",
        exp.data.recordings[args.instance].recording_id,
        example.label,
        out.display()
    );
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Inspect(a) => cmd_inspect(a),
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
    }
}
