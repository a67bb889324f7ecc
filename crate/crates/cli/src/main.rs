//! Command-line front end for the adiabatic-passage transfer simulator.
//!
//! Reads a plain-text `key = value` configuration (defaults reproduce the
//! reference operating point), runs one of the protocols and writes
//! `results.csv`, optional per-run traces and a `manifest.cfg` holding every
//! resolved parameter plus the tool version, so any output is reproducible
//! from its manifest alone.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 partial sweep (some points failed; failures are listed on stderr).

mod config;
mod output;
mod runner;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use config::{parse_config, render_config, Protocol};
use runner::RunError;

#[derive(Parser)]
#[command(name = "passage", version, about = "Adiabatic-passage state transfer over a multimode fibre: runs, sweeps and dark-state checks")]
struct Cli {
    /// Run configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the configured protocol
    /// (transfer | sweep-length | scan-T | compare-models | dark-check).
    #[arg(long)]
    protocol: Option<String>,

    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for sweep points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Write per-run observable traces.
    #[arg(long)]
    trace: bool,

    /// Reject unknown configuration keys instead of warning.
    #[arg(long)]
    strict: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(err) => return fail(EXIT_CONFIG, format!("cannot read {}: {err}", path.display())),
        },
        None => String::new(),
    };

    let (mut config, warnings) = match parse_config(&text, cli.strict) {
        Ok(parsed) => parsed,
        Err(err) => return fail(EXIT_CONFIG, err),
    };
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }

    if let Some(name) = &cli.protocol {
        config.run.protocol = match Protocol::parse(name) {
            Some(protocol) => protocol,
            None => return fail(EXIT_CONFIG, format!("unknown protocol `{name}`")),
        };
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.to_string_lossy().into_owned();
    }
    if config.pulses.offset_frac < 0.0 {
        eprintln!(
            "warning: pulses.offset_frac < 0 runs the reversed (intuitive) pulse ordering"
        );
    }

    // Resolve the output directory and the manifest before the (possibly
    // long) run, so an unwritable path fails fast and every run leaves a
    // reproducible record.
    let dir = PathBuf::from(&config.output.dir);
    if let Err(err) = std::fs::create_dir_all(&dir) {
        return fail(EXIT_CONFIG, format!("cannot create {}: {err}", dir.display()));
    }
    if let Err(err) = std::fs::write(dir.join("manifest.cfg"), render_config(&config)) {
        return fail(EXIT_CONFIG, format!("cannot write manifest: {err}"));
    }

    let outcome = match runner::execute(&config, cli.jobs, cli.trace) {
        Ok(outcome) => outcome,
        Err(RunError::Config(message)) => return fail(EXIT_CONFIG, message),
        Err(RunError::Numerical(message)) => return fail(EXIT_NUMERICAL, message),
    };

    if let Err(err) = write_outputs(&dir, &outcome) {
        return fail(EXIT_CONFIG, format!("cannot write results: {err}"));
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    println!("results written to {}", dir.display());

    if !outcome.failures.is_empty() {
        for failure in &outcome.failures {
            eprintln!("failed point: {failure}");
        }
        return ExitCode::from(EXIT_PARTIAL);
    }
    ExitCode::SUCCESS
}

fn write_outputs(dir: &Path, outcome: &runner::RunOutcome) -> std::io::Result<()> {
    output::write_csv(&dir.join("results.csv"), outcome.header, &outcome.rows)?;
    for (name, trajectory) in &outcome.traces {
        output::write_trace(&dir.join(name), trajectory)?;
    }
    Ok(())
}
