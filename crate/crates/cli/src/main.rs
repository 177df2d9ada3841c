mod cli;
mod commands;
mod error;
mod output;

use std::time::Instant;

use clap::Parser;

use crate::cli::{Cli, Command, ReplayArgs};
use crate::error::{usage, CliError};
use crate::output::{emit, read_manifest, RunManifest};

const THREADS_VAR: &str = "ASSASSIN_SIM_THREADS";

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let Err(e) = configure_threads().and_then(|_| run(args)) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_VAR} must be an integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

fn run(args: Vec<String>) -> Result<(), CliError> {
    let argv = std::iter::once("assassin-sim".to_string()).chain(args.iter().cloned());
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
    let command = cli.command;
    if let Command::Replay(r) = &command {
        return replay(r);
    }

    let start = Instant::now();
    let (report, parameters, out) = match &command {
        Command::BaSample(a) => (commands::ba_sample(a)?, serde_json::to_value(a)?, a.out.clone()),
        Command::Moments(a) => (commands::moments(a)?, serde_json::to_value(a)?, a.out.clone()),
        Command::Tail(a) => (commands::tail(a)?, serde_json::to_value(a)?, a.out.clone()),
        Command::Stability(a) => (commands::stability(a)?, serde_json::to_value(a)?, a.out.clone()),
        Command::Extinction(a) => (commands::extinction(a)?, serde_json::to_value(a)?, a.out.clone()),
        Command::Laplace(a) => (commands::laplace(a)?, serde_json::to_value(a)?, a.out.clone()),
        Command::RumorSample(a) => {
            (commands::rumor_sample(a)?, serde_json::to_value(a)?, a.out.clone())
        }
        Command::Converge(a) => (commands::converge(a)?, serde_json::to_value(a)?, a.out.clone()),
        Command::Replay(_) => unreachable!(),
    };
    for note in &report.notes {
        eprintln!("{note}");
    }
    let manifest = RunManifest {
        command: command.name().to_string(),
        args,
        parameters,
        master_seed: report.master_seed,
        replicas: report.replicas,
        output_schema: report.schema.to_string(),
        summary: report.summary,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    emit(out.as_deref(), &report.body, &manifest)
}

/// Reruns the recorded command line, optionally redirecting `--out`.
fn replay(r: &ReplayArgs) -> Result<(), CliError> {
    let manifest = read_manifest(&r.manifest)?;
    let mut args = manifest.args;
    if args.first().map(String::as_str) == Some("replay") {
        return usage("a manifest cannot record another replay");
    }
    if let Some(out) = &r.out {
        args = replace_out(&args, &out.to_string_lossy());
    }
    run(args)
}

fn replace_out(args: &[String], out: &str) -> Vec<String> {
    let mut kept = Vec::with_capacity(args.len() + 2);
    let mut skip_next = false;
    for a in args {
        if skip_next {
            skip_next = false;
            continue;
        }
        if a == "--out" {
            skip_next = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        kept.push(a.clone());
    }
    kept.push("--out".to_string());
    kept.push(out.to_string());
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_is_replaced() {
        let args: Vec<String> = ["moments", "--out", "a.csv", "--p", "2", "--out=b.csv"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            replace_out(&args, "c.csv"),
            vec!["moments", "--p", "2", "--out", "c.csv"]
        );
    }
}
