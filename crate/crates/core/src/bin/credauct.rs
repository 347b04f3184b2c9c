use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use credauct::sim::{self, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "credauct", version, about = "Credible auction experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment from a TOML config.
    #[command(external_subcommand)]
    Run(Vec<String>),
}

#[derive(Parser)]
#[command(name = "credauct <experiment>")]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
#[command(name = "credauct replay")]
struct ReplayArgs {
    /// Ledger dumped as JSON lines.
    ledger: PathBuf,
}

fn run(args: Vec<String>) -> credauct::Result<bool> {
    let name = &args[0];
    if name == "replay" {
        let a = ReplayArgs::parse_from(&args);
        let r = sim::replay(&a.ledger)?;
        println!("{}", serde_json::to_string_pretty(&r)?);
        return Ok(true);
    }
    let exp: Experiment = name.parse()?;
    let a = RunArgs::parse_from(&args);
    let mut cfg = ExperimentConfig::load(&a.config)?;
    cfg.seed = a.seed.or(cfg.seed);
    cfg.trials = a.trials.or(cfg.trials);
    cfg.workers = a.workers.or(cfg.workers);
    let out = a.out.or(cfg.out.clone());
    let o = sim::run_experiment(exp, &cfg)?;
    match out {
        Some(p) => std::fs::write(p, &o.csv)?,
        None => print!("{}", o.csv),
    }
    for v in &o.violations {
        eprintln!("violation: {v}");
    }
    Ok(o.violations.is_empty())
}

fn main() -> ExitCode {
    let Cmd::Run(args) = Cli::parse().cmd;
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
