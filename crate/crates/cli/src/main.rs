use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sensefeat_core::catalog::{enumerate_catalog, Selection};
use sensefeat_core::features::FeatureSensor;
use sensefeat_core::ingest::{load_participant, validate_dataset};
use sensefeat_core::output::Format;
use sensefeat_core::pipeline::{discover_participants, run, PipelineError, RunOptions, DEFAULT_SEED};
use sensefeat_core::windowing::{Epoch, Granularity};

/// Behavioral feature extraction from smartphone and wearable sensor logs.
#[derive(Debug, Parser)]
#[command(name = "sensefeat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the feature matrix for every participant.
    Run(RunArgs),
    /// Check input files and print a coverage report as JSON.
    Validate(ValidateArgs),
    /// List the feature names a run would emit.
    Catalog(FilterArgs),
}

#[derive(Debug, Args)]
struct FilterArgs {
    /// Feature families, comma separated.
    #[arg(long, value_delimiter = ',')]
    sensors: Vec<FeatureSensor>,
    /// Epochs, comma separated.
    #[arg(long, value_delimiter = ',')]
    epochs: Vec<Epoch>,
    /// Granularities, comma separated.
    #[arg(long, value_delimiter = ',')]
    granularities: Vec<Granularity>,
}

fn or_all<T: Clone>(given: &[T], all: Vec<T>) -> Vec<T> {
    if given.is_empty() {
        all
    } else {
        given.to_vec()
    }
}

impl FilterArgs {
    fn selection(&self) -> Selection {
        let all = Selection::default();
        Selection {
            sensors: or_all(&self.sensors, all.sensors),
            epochs: or_all(&self.epochs, all.epochs),
            granularities: or_all(&self.granularities, all.granularities),
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Study configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory with one subdirectory of sensor CSVs per participant.
    #[arg(long)]
    input: PathBuf,
    /// Feature matrix to write.
    #[arg(long)]
    output: PathBuf,
    /// csv or jsonl.
    #[arg(long, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    filters: FilterArgs,
    /// Participant ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    participants: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',')]
    participants: Vec<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn run_command(args: RunArgs) -> ExitCode {
    let opts = RunOptions {
        selection: args.filters.selection(),
        participants: (!args.participants.is_empty()).then_some(args.participants),
        format: args.format,
        seed: args.seed,
        jobs: args.jobs,
        ..RunOptions::new(args.config, args.input, args.output)
    };
    match run(&opts) {
        Ok(outcome) => {
            let failed = outcome.failed();
            log::info!(
                "{} rows for {} participants",
                outcome.rows,
                outcome.participants.len() - failed
            );
            if failed > 0 {
                eprintln!(
                    "sensefeat: {failed} participant(s) failed, see {}",
                    outcome.report_path.display()
                );
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            let kind = match e {
                PipelineError::Config(_) => "config error",
                _ => "error",
            };
            eprintln!("sensefeat: {kind}: {e}");
            ExitCode::from(1)
        }
    }
}

fn validate_command(args: ValidateArgs) -> anyhow::Result<bool> {
    let ids = if args.participants.is_empty() {
        discover_participants(&args.input)?
    } else {
        args.participants
    };
    let mut reports = Vec::new();
    let mut clean = true;
    for id in ids {
        let data = load_participant(&args.input.join(&id), &id).with_context(|| format!("participant {id}"))?;
        let report = validate_dataset(&data);
        clean &= report.schema_violations == 0;
        reports.push(report);
    }
    let json = serde_json::to_string_pretty(&reports)?;
    match args.output {
        Some(path) => std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(clean)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SENSEFEAT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::Validate(args) => match validate_command(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => {
                eprintln!("sensefeat: {e:#}");
                ExitCode::from(1)
            }
        },
        Command::Catalog(filters) => {
            for name in enumerate_catalog(&filters.selection()) {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
