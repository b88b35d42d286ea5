mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use commands::Output;
use config::Ctx;

/// Quantizer design and analysis for distributed Bayesian estimation.
#[derive(Parser, Debug)]
#[command(name = "sensorq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal response curve and the quantizer that realizes it.
    Design(Common),
    /// Posterior Fisher information of identical binary sensors.
    Fisher(Common),
    /// Monte Carlo MSE of the arcsine MLE over a ladder of network sizes.
    Simulate(Common),
    /// Person-by-person optimization of a discrete problem.
    Pbpo(Common),
    /// Rank sensor/level allocations under a bit budget.
    Rate(Common),
    /// Identical vs bisection thresholds under common noise.
    Counterexample(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Design(_) => "design",
            Command::Fisher(_) => "fisher",
            Command::Simulate(_) => "simulate",
            Command::Pbpo(_) => "pbpo",
            Command::Rate(_) => "rate",
            Command::Counterexample(_) => "counterexample",
        }
    }

    fn module(&self) -> &'static str {
        match self {
            Command::Counterexample(_) => "pbpo",
            other => other.name(),
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Design(c)
            | Command::Fisher(c)
            | Command::Simulate(c)
            | Command::Pbpo(c)
            | Command::Rate(c)
            | Command::Counterexample(c) => c,
        }
    }
}

enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
    Output(anyhow::Error),
}

impl From<sensorq::Error> for Failure {
    fn from(e: sensorq::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.into())
        } else {
            Failure::Config(e.into())
        }
    }
}

fn load<T: DeserializeOwned>(path: Option<&Path>) -> Result<Option<T>, Failure> {
    let Some(path) = path else { return Ok(None) };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(Failure::Config)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))
        .map(Some)
        .map_err(Failure::Config)
}

fn require<T: DeserializeOwned>(path: Option<&Path>) -> Result<T, Failure> {
    load(path)?.ok_or_else(|| Failure::Config(anyhow::anyhow!("--config is required")))
}

fn execute(cmd: &Command) -> Result<Output, Failure> {
    let common = cmd.common();
    let path = common.config.as_deref();
    let ctx = Ctx::new(path);
    let out = match cmd {
        Command::Design(_) => commands::design_cmd(&require(path)?, &ctx)?,
        Command::Fisher(_) => commands::fisher_cmd(&require(path)?, &ctx)?,
        Command::Simulate(_) => {
            let mut cfg: config::SimulateConfig = load(path)?.unwrap_or_default();
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            commands::simulate_cmd(&cfg, &ctx)?
        }
        Command::Pbpo(_) => {
            let mut cfg: config::PbpoConfig = require(path)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            commands::pbpo_cmd(&cfg)?
        }
        Command::Rate(_) => commands::rate_cmd(&require(path)?, &ctx)?,
        Command::Counterexample(_) => {
            commands::counterexample_cmd(&load(path)?.unwrap_or_default())?
        }
    };
    Ok(out)
}

/// Writes through a temporary file in `dir` and renames it into place.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name))?;
    Ok(())
}

fn emit(cmd: &Command, out: &Output) -> Result<(), Failure> {
    let dir = &cmd.common().out;
    let write = || -> anyhow::Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, contents) in &out.files {
            write_atomic(dir, name, contents).with_context(|| format!("writing {name}"))?;
        }
        write_atomic(dir, &format!("{}_summary.txt", cmd.name()), &out.summary)
    };
    write().map_err(Failure::Output)
}

fn run(cmd: &Command) -> Result<Output, Failure> {
    let out = match cmd.common().threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Config(e.into()))?;
            pool.install(|| execute(cmd))?
        }
        None => execute(cmd)?,
    };
    emit(cmd, &out)?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = &cli.command;
    match run(cmd) {
        Ok(out) => {
            print!("{}", out.summary);
            if out.failed {
                eprintln!(
                    "sensorq {}: numerical failure in the {} module",
                    cmd.name(),
                    cmd.module()
                );
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => {
            let (code, kind, e) = match f {
                Failure::Config(e) => (2, "configuration error", e),
                Failure::Numerical(e) => (3, "numerical failure", e),
                Failure::Output(e) => (1, "output error", e),
            };
            eprintln!(
                "sensorq {}: {kind} in the {} module: {e:#}",
                cmd.name(),
                cmd.module()
            );
            ExitCode::from(code)
        }
    }
}
