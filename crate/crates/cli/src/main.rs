//! `wavefront`: batch front-end for wave-speed runs.
//!
//! Exit status: 0 success, 1 module error (recorded in the manifest), 2 config error
//! (nothing written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use wavefront_core::io::{verify_manifest, RunConfig, KEYS};
use wavefront_core::run::{execute, Command};
use wavefront_core::Error;

#[derive(Parser)]
#[command(name = "wavefront", version, about = "Traveling-wave speeds and profiles by constrained energy minimization")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Audit, then bisect for the speed (or minimize at a fixed `c`) and verify the result.
    Solve(RunArgs),
    /// Tabulate the minimum energy over a speed range.
    Scan(RunArgs),
    /// Shooting and/or parabolic front-speed oracles.
    Oracle(RunArgs),
    /// Check the potential's assumptions and compute the derived constants.
    Audit(RunArgs),
    /// Re-check the artifact checksums listed in a run manifest.
    Verify {
        /// Output directory of a previous run.
        dir: PathBuf,
    },
    /// List every configuration key with its default.
    Keys,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a configuration key (repeatable), e.g. `-s beta=0.4`.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (`out_dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Seed for all sampling (`seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for scans (`workers`).
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, Error> {
        let mut out = Vec::new();
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {s:?}")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(o) = &self.out {
            out.push(("out_dir".into(), o.display().to_string()));
        }
        if let Some(s) = self.seed {
            out.push(("seed".into(), s.to_string()));
        }
        if let Some(w) = self.workers {
            out.push(("workers".into(), w.to_string()));
        }
        Ok(out)
    }
}

fn run(cmd: Command, args: &RunArgs) -> ExitCode {
    let cfg = match args.overrides().and_then(|o| RunConfig::load(args.config.as_deref(), &o)) {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    let outcome = match execute(cmd, &cfg) {
        Ok(o) => o,
        Err(e @ Error::Config(_)) => return config_error(&e),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let m = &outcome.manifest;
    for (k, v) in &m.results {
        println!("{k} = {v}");
    }
    println!("artifacts: {} in {}", m.artifacts.len(), cfg.out_dir.display());
    match &outcome.error {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("error [{}]: {e}", e.kind());
            ExitCode::from(1)
        }
    }
}

fn config_error(e: &Error) -> ExitCode {
    match e {
        Error::Config(_) => eprintln!("{e}"),
        other => eprintln!("config error: {other}"),
    }
    ExitCode::from(2)
}

fn verify(dir: &Path) -> anyhow::Result<()> {
    let problems = verify_manifest(dir).with_context(|| format!("reading manifest in {}", dir.display()))?;
    if problems.is_empty() {
        println!("all artifacts match");
        Ok(())
    } else {
        for p in &problems {
            println!("{p}");
        }
        Err(anyhow!("{} artifact problem(s)", problems.len()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Cmd::Solve(a) => run(Command::Solve, a),
        Cmd::Scan(a) => run(Command::Scan, a),
        Cmd::Oracle(a) => run(Command::Oracle, a),
        Cmd::Audit(a) => run(Command::Audit, a),
        Cmd::Verify { dir } => match verify(dir) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Cmd::Keys => {
            for (k, v) in KEYS {
                println!("{k} = {v}");
            }
            ExitCode::SUCCESS
        }
    }
}
