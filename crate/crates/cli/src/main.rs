//! `cpcc`: command-line driver for the competition-aware CPC forecasting
//! pipeline. Every stage writes a run manifest beside its artifact.

mod args;
mod config;
mod demo;
mod error;
mod manifest;
mod stages;

use std::collections::BTreeMap;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use error::{CliError, Result};
use manifest::{hash_tree, RunManifest};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    if let Err(e) = run(argv) {
        let msg = e.to_string().replace('\n', " ");
        eprintln!("error[{}]: {msg}", e.tag());
        std::process::exit(e.exit_code());
    }
}

/// Parse `argv` (program name first), execute the stage and write its
/// manifest.
pub fn run(argv: Vec<String>) -> Result<()> {
    let argv = match config::config_flag(&argv) {
        Some(path) => {
            let entries = config::read_kv(std::path::Path::new(&path))?;
            config::inject(&argv, &entries, &Cli::command())?
        }
        None => argv,
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid usage");
            return Err(CliError::Usage(first.trim_start_matches("error: ").to_string()));
        }
    };
    init_logging(cli.verbose);
    let threads = init_threads(cli.threads)?;

    let t0 = Instant::now();
    let outcome = dispatch(&cli.command)?;

    let mut inputs = BTreeMap::new();
    for p in &outcome.inputs {
        hash_tree(p, &mut inputs)?;
    }
    let mut outputs = BTreeMap::new();
    for p in &outcome.outputs {
        hash_tree(p, &mut outputs)?;
    }
    let config = serde_json::json!({
        "threads": threads,
        "config_file": cli.config,
        "stage": serde_json::to_value(&cli.command).map_err(|e| CliError::Internal(e.to_string()))?,
    });
    let m = RunManifest {
        command: cli.command.name().to_string(),
        argv,
        config,
        inputs,
        outputs,
        seed: outcome.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_secs: t0.elapsed().as_secs_f64(),
    };
    m.write(&outcome.artifact)?;
    Ok(())
}

fn dispatch(cmd: &Command) -> Result<stages::Outcome> {
    match cmd {
        Command::Ingest(a) => stages::ingest(a),
        Command::Aggregate(a) => stages::aggregate(a),
        Command::BuildProxies(a) => stages::build_proxies_stage(a),
        Command::Featurize(a) => stages::featurize(a),
        Command::Train(a) => stages::train(a),
        Command::Forecast(a) => stages::forecast(a),
        Command::Evaluate(a) => stages::evaluate_stage(a),
        Command::Frontier(a) => stages::frontier(a),
        Command::Ablate(a) => stages::ablate(a),
        Command::Synth(a) => stages::synth(a),
        Command::Demo(a) => demo::run(a),
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Size the global pool from `--threads`, then CPCC_THREADS; 0 or unset
/// means all cores. A pool that already exists is kept.
fn init_threads(flag: Option<usize>) -> Result<usize> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("CPCC_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("CPCC_THREADS must be a non-negative integer, got {v:?}")))?,
            Err(_) => 0,
        },
    };
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(rayon::current_num_threads())
}
