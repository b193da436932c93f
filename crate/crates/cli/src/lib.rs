//! Command-line frontend for `coxbo`: configuration, event ingestion, the
//! `fit`, `bo`, `synth` and `metrics` subcommands and their result files.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;

pub use commands::{cmd_bo, cmd_fit, cmd_metrics, cmd_synth};
pub use config::ExperimentConfig;
pub use error::{CliError, Result};

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use ingest::events_csv;
use output::{curve_csv, to_json, write_atomic, TraceFile};

#[derive(Parser)]
#[command(name = "coxbo", version, about = "Gaussian Cox process inference and region-sampling Bayesian optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the intensity to an event set and write a result JSON.
    Fit(RunArgs),
    /// Run the region-sampling loop over an event set.
    Bo(RunArgs),
    /// Draw events from a benchmark intensity by thinning.
    Synth(RunArgs),
    /// Score a result file against a benchmark intensity.
    Metrics(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of grid points with intensity mean and std (fit and bo).
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(r) = self.replicates {
            cfg.replicates = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e)),
    }
}

fn replicate_path(path: &Path, r: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{r}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{r}"),
    };
    path.with_file_name(name)
}

/// Parses `args` (program name first) and runs the subcommand, writing
/// anything not sent to `--out` into `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    match cli.command {
        Command::Fit(args) => {
            let cfg = args.config()?;
            let (record, posterior) = cmd_fit(&cfg)?;
            if let Some(csv) = &args.csv {
                write_atomic(csv, &curve_csv(&posterior))?;
            }
            emit(args.out.as_deref(), &to_json(&record)?, stdout)
        }
        Command::Bo(args) => {
            let cfg = args.config()?;
            let (record, trace) = cmd_bo(&cfg)?;
            if let Some(csv) = &args.csv {
                write_atomic(csv, &curve_csv(&trace.final_posterior))?;
            }
            if let Some(out) = &args.out {
                write_atomic(&out.with_extension("trace.json"), &to_json(&TraceFile::new(&trace))?)?;
            }
            emit(args.out.as_deref(), &to_json(&record)?, stdout)
        }
        Command::Synth(args) => {
            let cfg = args.config()?;
            let samples = cmd_synth(&cfg)?;
            match (&args.out, samples.len()) {
                (_, 1) => emit(args.out.as_deref(), &events_csv(&samples[0]), stdout),
                (Some(out), _) => {
                    for (r, events) in samples.iter().enumerate() {
                        write_atomic(&replicate_path(out, r), &events_csv(events))?;
                    }
                    Ok(())
                }
                (None, _) => Err(CliError::Config("several replicates need --out".into())),
            }
        }
        Command::Metrics(args) => {
            let cfg = args.config()?;
            let report = cmd_metrics(&cfg)?;
            emit(args.out.as_deref(), &to_json(&report)?, stdout)
        }
    }
}
