//! Argument parsing and exit-code mapping for the `rigscore` binary.
//!
//! Exit codes: 0 success, 1 validation or parse failure, 2 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use rigscore_cli::pipeline::{
    cmd_compare, cmd_correlate, cmd_coverage, cmd_metric, CompareArgs, CorrelateArgs,
    CoverageArgs, MetricArgs, Modality,
};
use rigscore_cli::report::{Format, LogBase};

#[derive(Parser)]
#[command(
    name = "rigscore",
    version,
    about = "Score camera-lidar rig configurations by expected information gain \
             over a probabilistic occupancy grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one rig on a dataset and emit the per-class report
    Metric {
        /// Rig description file (TOML)
        #[arg(long)]
        rig: PathBuf,
        /// Frame file (.jsonl) or scene spec to synthesize (.toml)
        #[arg(long)]
        dataset: PathBuf,
        /// Region-of-interest file (TOML)
        #[arg(long)]
        roi: PathBuf,
        /// Camera weight in the combined score
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Entropy unit: e for nats, 2 for bits
        #[arg(long, value_enum, default_value = "e")]
        log_base: LogBase,
        /// Allowed classes for frame files, comma separated
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<String>>,
        /// Override the seed of a scene spec dataset
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: one per core)
        #[arg(long)]
        threads: Option<usize>,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Rank rigs by combined score, per class
    Compare {
        /// Rig description files; repeat the flag, at least twice
        #[arg(long)]
        rig: Vec<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        roi: Option<PathBuf>,
        /// Rank a precomputed metric table instead of running the pipeline
        #[arg(long)]
        precomputed: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "e")]
        log_base: LogBase,
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<String>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Correlate a metric table against a detection-accuracy table
    Correlate {
        /// Metric table (cmd_metric output or hand-built CSV)
        #[arg(long)]
        precomputed: PathBuf,
        /// Accuracy table: series,class,config,map
        #[arg(long)]
        accuracy: PathBuf,
        /// Camera weight, used when the metric table has no s_ms column
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Dump a rig's coverage raster as a flat binary bitmask
    Coverage {
        #[arg(long)]
        rig: PathBuf,
        #[arg(long)]
        roi: PathBuf,
        /// Mask file to write
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        modality: Modality,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn run(cli: Cli) -> rigscore::Result<()> {
    match cli.command {
        Command::Metric {
            rig,
            dataset,
            roi,
            lambda,
            log_base,
            classes,
            seed,
            threads,
            out,
            format,
        } => {
            cmd_metric(&MetricArgs {
                rig,
                dataset,
                roi,
                lambda,
                log_base,
                classes,
                seed,
                threads,
                out,
                format,
            })?;
        }
        Command::Compare {
            rig,
            dataset,
            roi,
            precomputed,
            lambda,
            log_base,
            classes,
            seed,
            threads,
            out,
            format,
        } => {
            cmd_compare(&CompareArgs {
                rigs: rig,
                dataset,
                roi,
                precomputed,
                lambda,
                log_base,
                classes,
                seed,
                threads,
                out,
                format,
            })?;
        }
        Command::Correlate {
            precomputed,
            accuracy,
            lambda,
            out,
            format,
        } => {
            cmd_correlate(&CorrelateArgs {
                precomputed,
                accuracy,
                lambda,
                out,
                format,
            })?;
        }
        Command::Coverage {
            rig,
            roi,
            out,
            modality,
            threads,
        } => {
            let summary = cmd_coverage(&CoverageArgs {
                rig,
                roi,
                out: out.clone(),
                modality,
                threads,
            })?;
            println!(
                "rig {}: {} of {} voxels covered by {} rays; mask written to {}",
                summary.rig,
                summary.covered,
                summary.total,
                summary.rays,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_only = matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if usage_only {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut shown = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let msg = s.to_string();
                // Skip levels whose text the line above already carries.
                if !shown.contains(&msg) {
                    eprintln!("  caused by: {msg}");
                    shown = msg;
                }
                source = s.source();
            }
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
