//! `affinity` — validate datasets, generate synthetic ones, collect follower
//! files over the built-in fake transport, and emit report tables.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use affinity_core::collector::{self, ManualClock, RetryPolicy, ScriptedTransport};
use affinity_core::ingest::{self, IngestOptions, Snapshot};
use affinity_core::pipeline::GroupingLevel;
use affinity_core::report::{self, ReportFormat, ReportOptions};
use affinity_core::synth;
use affinity_core::Registry;

#[derive(Parser)]
#[command(name = "affinity", version, about = "Follower-affinity analytics over id snapshots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a manifest and its follower files, printing every violation.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
        /// Fatal once a text file's malformed-line fraction exceeds this.
        #[arg(long, default_value_t = 0.01)]
        malformed_threshold: f64,
    },
    /// Generate a seeded synthetic dataset from a config file.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed declared in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Collect follower files over the built-in scripted transport (demo).
    Collect {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scripted followers per entity.
        #[arg(long, default_value_t = 5000)]
        followers: u64,
    },
    /// Run the pipeline and write report tables.
    Report {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = LevelArg::State)]
        level: LevelArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(long)]
        threads: Option<usize>,
        /// Fatal once a text file's malformed-line fraction exceeds this.
        #[arg(long, default_value_t = 0.01)]
        malformed_threshold: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Sport,
    State,
    Team,
}

impl From<LevelArg> for GroupingLevel {
    fn from(level: LevelArg) -> GroupingLevel {
        match level {
            LevelArg::Sport => GroupingLevel::Sport,
            LevelArg::State => GroupingLevel::State,
            LevelArg::Team => GroupingLevel::Team,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Text,
}

impl From<FormatArg> for ReportFormat {
    fn from(format: FormatArg) -> ReportFormat {
        match format {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Text => ReportFormat::Text,
        }
    }
}

enum Failure {
    /// Violations were already printed as JSON.
    Validation,
    Runtime(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(err: E) -> Failure {
        Failure::Runtime(err.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("AFFINITY_LOG", "warn"),
    )
    .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate {
            manifest,
            malformed_threshold,
        } => cmd_validate(&manifest, malformed_threshold),
        Command::Synth { config, out, seed } => cmd_synth(&config, &out, seed),
        Command::Collect {
            manifest,
            out,
            concurrency,
            seed,
            followers,
        } => cmd_collect(&manifest, &out, concurrency, seed, followers),
        Command::Report {
            manifest,
            out,
            level,
            format,
            threads,
            malformed_threshold,
        } => cmd_report(
            &manifest,
            &out,
            level.into(),
            format.into(),
            threads,
            malformed_threshold,
        ),
    }
}

fn print_violations(violations: &[serde_json::Value]) {
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::Value::Array(violations.to_vec()))
            .expect("violation list serializes")
    );
}

fn cmd_validate(manifest: &Path, malformed_threshold: f64) -> Result<(), Failure> {
    let mut violations: Vec<serde_json::Value> = Vec::new();
    let text = match std::fs::read_to_string(manifest) {
        Ok(text) => Some(text),
        Err(err) => {
            violations.push(serde_json::json!({
                "module": "registry",
                "code": "manifest_io",
                "message": format!("cannot read manifest {}: {err}", manifest.display()),
            }));
            None
        }
    };

    let registry = text.as_deref().and_then(|text| {
        let errors = Registry::check_toml_str(text);
        if errors.is_empty() {
            Registry::from_toml_str(text).ok()
        } else {
            for err in &errors {
                violations.push(serde_json::json!({
                    "module": "registry",
                    "code": err.code(),
                    "message": err.to_string(),
                }));
            }
            None
        }
    });

    if let Some(registry) = registry {
        let root = dataset_root(manifest);
        let opts = IngestOptions {
            malformed_threshold,
        };
        for err in ingest::validate_dataset(&registry, &root, &opts) {
            violations.push(serde_json::json!({
                "module": "ingest",
                "code": err.code(),
                "message": err.to_string(),
            }));
        }
    }

    print_violations(&violations);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

fn cmd_synth(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let mut config = match synth::load_config(config_path) {
        Ok(config) => config,
        Err(err @ (synth::SynthError::Parse(_)
        | synth::SynthError::InvalidField { .. }
        | synth::SynthError::RosterEmptyForState { .. }
        | synth::SynthError::ReadIo { .. })) => {
            let code = match &err {
                synth::SynthError::Parse(_) => "config_parse",
                synth::SynthError::InvalidField { .. } => "invalid_field",
                synth::SynthError::RosterEmptyForState { .. } => "roster_empty_for_state",
                _ => "config_io",
            };
            print_violations(&[serde_json::json!({
                "module": "synth",
                "code": code,
                "message": err.to_string(),
            })]);
            return Err(Failure::Validation);
        }
        Err(err) => return Err(err.into()),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }

    let truth = synth::generate(&config, out)?;
    println!("dataset written to {}", out.display());
    println!("{:<8}{:>12}{:>14}{:>10}", "state", "democrats", "republicans", "noise");
    for row in synth::describe(&truth) {
        println!(
            "{:<8}{:>12}{:>14}{:>10}",
            row.code, row.democrats, row.republicans, row.noise
        );
    }
    Ok(())
}

fn cmd_collect(
    manifest: &Path,
    out: &Path,
    concurrency: usize,
    seed: u64,
    followers: u64,
) -> Result<(), Failure> {
    let registry = match Registry::load(manifest) {
        Ok(registry) => registry,
        Err(err) => {
            print_violations(&[serde_json::json!({
                "module": "registry",
                "code": err.code(),
                "message": err.to_string(),
            })]);
            return Err(Failure::Validation);
        }
    };
    std::fs::create_dir_all(out).map_err(|e| Failure::Runtime(e.to_string()))?;
    let transport = ScriptedTransport::demo(&registry, seed, followers);
    let clock = ManualClock::starting_at(0);
    let report = collector::collect_all(
        &transport,
        &clock,
        &registry,
        &RetryPolicy::default(),
        collector::DEFAULT_PAGE_SIZE,
        concurrency,
        out,
    )?;
    for entry in &report.entries {
        println!(
            "{}: {} ids ({} pages) -> {}",
            entry.handle,
            entry.distinct_ids,
            entry.pages_fetched,
            entry.path.display()
        );
    }
    println!("digest fragment: {}", out.join("digests.toml").display());
    Ok(())
}

fn cmd_report(
    manifest: &Path,
    out: &Path,
    level: GroupingLevel,
    format: ReportFormat,
    threads: Option<usize>,
    malformed_threshold: f64,
) -> Result<(), Failure> {
    let registry = match Registry::load(manifest) {
        Ok(registry) => registry,
        Err(err) => {
            print_violations(&[serde_json::json!({
                "module": "registry",
                "code": err.code(),
                "message": err.to_string(),
            })]);
            return Err(Failure::Validation);
        }
    };
    let root = dataset_root(manifest);
    let opts = IngestOptions {
        malformed_threshold,
    };
    let (snapshot, _) = match Snapshot::load(&registry, &root, &opts) {
        Ok(loaded) => loaded,
        Err(err) => {
            print_violations(&[serde_json::json!({
                "module": "ingest",
                "code": err.code(),
                "message": err.to_string(),
            })]);
            return Err(Failure::Validation);
        }
    };

    let output = report::write_reports(
        &snapshot,
        out,
        &ReportOptions {
            level,
            format,
            threads,
        },
    )?;
    for (league, rate) in &output.engagement {
        println!("{league} candidate engagement: {rate:.4}");
    }
    for path in &output.files {
        println!("wrote {}", path.display());
    }
    for warning in &output.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(())
}

/// Follower files resolve relative to the manifest's directory.
fn dataset_root(manifest: &Path) -> PathBuf {
    manifest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}
