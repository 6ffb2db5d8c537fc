//! Reproducible command-line front end: one JSON config per run, a single
//! 64-bit seed feeding named substreams, CSV/JSON artifacts plus a manifest
//! with a digest of the emitted bytes.
//!
//! Exit codes: 0 success, 2 config-invalid, 3 budget-exceeded, 4 io-error.

mod commands;
mod config;
mod csvw;
mod error;
mod manifest;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

use error::{CliError, CliResult};
use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "latcode", version, about = "Nested lattice code experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rayon worker threads (output is identical at any count).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config's enumeration budget.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a nested lattice pair or chain and write it as JSON.
    Build(CommonArgs),
    /// Run mod-Lambda simulations over an (snr, rate, alpha) grid.
    Simulate(CommonArgs),
    /// Goodness checks: nsm, ergodicity, pe-vs-vnr, impersonation.
    Goodness(CommonArgs),
    /// Exact grid-point counts in balls with the lemma bounds.
    CountPoints(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Build(a) => ("build", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Goodness(a) => ("goodness", a),
        Command::CountPoints(a) => ("count-points", a),
    };
    match execute(name, args) {
        Ok(out) => {
            println!("{name}: wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(name: &str, args: &CommonArgs) -> CliResult<PathBuf> {
    if let Some(t) = args.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }

    let raw = std::fs::read_to_string(&args.config)?;
    let original: Value = serde_json::from_str(&raw)?;
    if !original.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }

    // Flag overrides of top-level scalar fields, recorded in the manifest.
    let mut effective = original.clone();
    let mut overrides = serde_json::Map::new();
    {
        let obj = effective.as_object_mut().expect("checked above");
        if let Some(seed) = args.seed {
            obj.insert("seed".into(), json!(seed));
            overrides.insert("seed".into(), json!(seed));
        }
        if let Some(out) = &args.out {
            obj.insert("out".into(), json!(out.display().to_string()));
            overrides.insert("out".into(), json!(out.display().to_string()));
        }
        if let Some(budget) = args.budget {
            obj.insert("budget".into(), json!(budget));
            overrides.insert("budget".into(), json!(budget));
        }
    }

    let (out_path, bytes) = match name {
        "build" => {
            let cfg: config::BuildConfig = serde_json::from_value(effective.clone())?;
            let bytes = commands::build::run(&cfg)?;
            (cfg.out, bytes)
        }
        "simulate" => {
            let cfg: config::SimulateConfig = serde_json::from_value(effective.clone())?;
            let bytes = commands::simulate::run(&cfg)?;
            (cfg.out, bytes)
        }
        "goodness" => {
            let out = commands::goodness::out_path(&effective)?;
            let bytes = commands::goodness::run(&effective)?;
            (out, bytes)
        }
        "count-points" => {
            let cfg: config::CountPointsConfig = serde_json::from_value(effective.clone())?;
            let bytes = commands::count_points::run(&cfg)?;
            (cfg.out, bytes)
        }
        _ => unreachable!("clap restricts the command set"),
    };

    std::fs::write(&out_path, &bytes)?;
    let manifest = RunManifest::new(name, original, Value::Object(overrides), &out_path, &bytes);
    manifest.write_next_to(&out_path)?;
    Ok(out_path)
}
