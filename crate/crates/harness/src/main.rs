use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use srip_harness::formats::read_json;
use srip_harness::{run, ExperimentConfig, HarnessError, Kind, Result, RunOptions};

#[derive(Debug, Parser)]
#[command(
    name = "srip",
    version,
    about = "Seeded experiments on strong restricted isometries and phaseless l1 recovery"
)]
struct Cli {
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config and $SRIP_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON experiment config; the subcommand may be omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the resolved config and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Parameter override, VALUE parsed as JSON when possible
    /// (e.g. `-p m_grid=[8,16] -p alt_min.max_outer=50`).
    #[arg(short = 'p', long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Alternating l1 recovery with restarts.
    Recover(Overrides),
    /// Exhaustive sign-enumeration oracle.
    Oracle(Overrides),
    /// Strong-RIP levels over an (m, k) grid.
    Srip(Overrides),
    /// Classical RIP constants over an (m, k) grid.
    Rip(Overrides),
    /// Monte Carlo estimates of mu_m.
    Mu(Overrides),
    /// Concentration probes (tail, half, strong).
    Conc(Overrides),
    /// Erasure-robust random embeddings.
    Jl(Overrides),
    /// Phase-transition sweep over m.
    Phase(Overrides),
    /// Bernoulli constructions violating the lower level.
    Witness(Overrides),
}

impl Command {
    fn split(&self) -> (Kind, &Overrides) {
        match self {
            Command::Recover(o) => (Kind::Recover, o),
            Command::Oracle(o) => (Kind::Oracle, o),
            Command::Srip(o) => (Kind::Srip, o),
            Command::Rip(o) => (Kind::Rip, o),
            Command::Mu(o) => (Kind::Mu, o),
            Command::Conc(o) => (Kind::Concentration, o),
            Command::Jl(o) => (Kind::Jl, o),
            Command::Phase(o) => (Kind::PhaseTransition, o),
            Command::Witness(o) => (Kind::BernoulliWitness, o),
        }
    }
}

fn parse_override(s: &str) -> Result<(&str, Value)> {
    let (key, raw) = s.split_once('=').ok_or_else(|| HarnessError::config(format!("expected KEY=VALUE, got {s:?}")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key, value))
}

fn build(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, &cli.command) {
        (Some(path), cmd) => {
            let cfg: ExperimentConfig = read_json(path)?;
            if let Some(kind) = cmd.as_ref().map(|c| c.split().0).filter(|k| *k != cfg.kind) {
                return Err(HarnessError::config(format!(
                    "config is a {} experiment, subcommand asks for {}",
                    cfg.kind.name(),
                    kind.name()
                )));
            }
            cfg
        }
        (None, Some(cmd)) => ExperimentConfig::new(cmd.split().0),
        (None, None) => return Err(HarnessError::config("give a subcommand or --config")),
    };
    if let Some(cmd) = &cli.command {
        for s in &cmd.split().1.params {
            let (key, value) = parse_override(s)?;
            cfg.set_param(key, value);
        }
    }
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_path = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = build(&cli).and_then(|cfg| {
        if cli.dry_run {
            let resolved = cfg.resolve()?;
            println!("{}", serde_json::to_string_pretty(&resolved.echo()).expect("serialisable"));
            return Ok(None);
        }
        run(&cfg, &RunOptions { threads: cli.threads }).map(Some)
    });
    match outcome {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(outcome)) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            for c in &outcome.checks {
                println!("{} {}", if c.passed { "ok  " } else { "FAIL" }, c.name);
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("srip: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
