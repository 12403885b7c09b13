//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::artifacts::ArtifactSet;
use crate::config::{parse_config_with_overrides, ExperimentConfig};
use crate::error::CliError;
use crate::oracle::{oracle_artifacts, oracle_check, ORACLE_TOLERANCE};
use crate::report::{compare_report, read_params, read_samples};
use crate::runner::{run_experiment, run_predict, run_wave};

#[derive(Debug, Parser)]
#[command(
    name = "entlink",
    version,
    about = "Entanglement-link quench experiments"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `key=value`, with `section.key` for sectioned keys. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure, predict and compare as the configuration requests.
    Run(ExperimentArgs),
    /// Quasiparticle predictions only.
    Predict(ExperimentArgs),
    /// Compare an entropy CSV with a prediction CSV.
    Compare {
        #[arg(long)]
        measured: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve the first EL snapshot with the wave solver.
    Wave(ExperimentArgs),
    /// Check entropies against exact Fock-space evolution (N <= 12).
    OracleCheck(ExperimentArgs),
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load(args: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let text = read_text(&args.config)?;
    parse_config_with_overrides(&text, &args.overrides).map_err(|errs| {
        CliError::Validation(
            errs.into_iter()
                .map(|e| format!("{}: {e}", args.config.display()))
                .collect(),
        )
    })
}

fn write(art: &ArtifactSet, out: &Path) -> Result<(), CliError> {
    art.write(out)?;
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::validation("--threads must be at least 1"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match cli.command {
        Command::Run(args) => {
            let cfg = load(&args)?;
            let out = run_experiment(&cfg)?;
            write(&out.artifacts, &args.out)?;
            if let Some(r) = &out.report {
                println!(
                    "{}: {} rows, max |residual| {:.4}, mean {:.4}",
                    cfg.name,
                    r.rows.len(),
                    r.max_abs_residual,
                    r.mean_abs_residual
                );
            }
            Ok(())
        }
        Command::Predict(args) => {
            let cfg = load(&args)?;
            write(&run_predict(&cfg)?, &args.out)
        }
        Command::Compare {
            measured,
            predicted,
            out,
        } => {
            let m = read_samples(&read_text(&measured)?, &measured.display().to_string())?;
            let p = read_samples(&read_text(&predicted)?, &predicted.display().to_string())?;
            let params_path = predicted.with_file_name("predictions_params.csv");
            let params = if params_path.exists() {
                Some(read_params(
                    &read_text(&params_path)?,
                    &params_path.display().to_string(),
                )?)
            } else {
                None
            };
            let report = compare_report(&m, &p, params)?;
            let mut art = ArtifactSet::new();
            report.add_artifacts(&mut art);
            write(&art, &out)?;
            println!(
                "{} rows, max |residual| {:.4}, mean {:.4}",
                report.rows.len(),
                report.max_abs_residual,
                report.mean_abs_residual
            );
            Ok(())
        }
        Command::Wave(args) => {
            let cfg = load(&args)?;
            let (rows, art) = run_wave(&cfg)?;
            write(&art, &args.out)?;
            for r in rows {
                println!(
                    "t={}: offset vs measured {:.3} cells, vs fronts {:.3} cells",
                    r.t, r.measured.front_offset, r.fronts.front_offset
                );
            }
            Ok(())
        }
        Command::OracleCheck(args) => {
            let cfg = load(&args)?;
            let rows = oracle_check(&cfg)?;
            write(&oracle_artifacts(&cfg, &rows), &args.out)?;
            let worst = rows.iter().map(|r| r.diff()).fold(0.0, f64::max);
            println!("{} comparisons, max |dS| = {worst:e}", rows.len());
            if worst > ORACLE_TOLERANCE {
                return Err(CliError::Runtime(format!(
                    "oracle disagreement {worst:e} exceeds {ORACLE_TOLERANCE:e}"
                )));
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{e}");
            if !matches!(e, CliError::Validation(_)) {
                eprintln!();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
