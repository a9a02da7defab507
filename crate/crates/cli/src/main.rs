//! hear: persona-driven accessibility bug-report generator and auditor.
//!
//! Exit codes are a stable contract: 0 success (audit findings included),
//! 2 input/schema errors, 3 provider errors, 4 legal-KB gaps.

mod audit_cmd;
mod config;
mod generate;
mod listing;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable inputs, schema violations, malformed documents. Exit 2.
    Input(String),
    /// Model-provider failures (auth, timeouts, bad responses). Exit 3.
    Provider(String),
    /// Legal-KB gap: retrieval returned nothing to ground Layer 3. Exit 4.
    KbGap(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Provider(_) => 3,
            CliError::KbGap(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Provider(m) | CliError::KbGap(m) => m,
        }
    }

    pub fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "hear",
    version,
    about = "Turn accessibility-scanner findings into persona-driven, legally grounded bug reports"
)]
struct Cli {
    /// Suppress progress logging (errors still print)
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Commands {
    /// Generate narrative reports from a scan + hierarchy + screenshot
    Generate(GenerateArgs),
    /// Audit generated reports against the UI ground truth
    Audit(AuditArgs),
    /// Inspect the persona registry
    Personas {
        #[command(subcommand)]
        command: PersonasCommands,
    },
    /// Inspect the legal knowledge base
    Kb {
        #[command(subcommand)]
        command: KbCommands,
    },
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Scanner result document (normalized JSON or lenient text)
    #[arg(
        long,
        requires = "hierarchy",
        requires = "screenshot",
        conflicts_with = "manifest"
    )]
    scan: Option<PathBuf>,
    /// uiautomator-style XML dump of the screen
    #[arg(long)]
    hierarchy: Option<PathBuf>,
    /// Full-screen PNG matching the display profile
    #[arg(long)]
    screenshot: Option<PathBuf>,
    /// Multi-screen batch: JSON manifest of {scan, hierarchy, screenshot} triples
    #[arg(long, conflicts_with_all = ["scan", "hierarchy", "screenshot"])]
    manifest: Option<PathBuf>,
    /// Output directory for reports, crops, index
    #[arg(long)]
    out: PathBuf,
    /// Jurisdiction override (e.g. JP); defaults to each persona's location
    #[arg(long)]
    jurisdiction: Option<String>,
    /// Model provider
    #[arg(long, value_parser = ["mock", "live"])]
    provider: Option<String>,
    /// Persona selection: deterministic | first | named:NAME
    #[arg(long)]
    persona_policy: Option<String>,
    /// Display density (px per dp) override
    #[arg(long)]
    density: Option<f64>,
    /// Required touch-target dp when the scanner description lacks one
    #[arg(long)]
    required_dp: Option<f64>,
    /// Concurrent in-flight report generations
    #[arg(long)]
    jobs: Option<usize>,
    /// Persona registry file (default: bundled registry)
    #[arg(long)]
    personas: Option<PathBuf>,
    /// Legal KB file (default: bundled KB)
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Config file (default: ./hear.toml when present)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Chat-completion endpoint URL for --provider live
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name for --provider live
    #[arg(long)]
    model: Option<String>,
    /// Sampling temperature
    #[arg(long)]
    temperature: Option<f64>,
    /// Per-call timeout in seconds
    #[arg(long)]
    timeout_secs: Option<u64>,
    /// Retries on transient provider failures
    #[arg(long)]
    max_retries: Option<u32>,
    /// Environment variable holding the API credential
    #[arg(long)]
    api_key_env: Option<String>,
    /// Dump per-layer prompt texts next to each report
    #[arg(long)]
    keep_prompts: bool,
}

#[derive(Args)]
pub struct AuditArgs {
    /// Directory holding <id>.report.json files
    #[arg(long)]
    reports: PathBuf,
    /// Hierarchy XML for the audited screen (batch mode)
    #[arg(long)]
    hierarchy: Option<PathBuf>,
    /// Record a functional-logic judgment: --annotate <VIOLATION_ID> <pass|fail>
    #[arg(long, num_args = 2, value_names = ["VIOLATION_ID", "DECISION"])]
    annotate: Option<Vec<String>>,
    /// Annotator name for --annotate
    #[arg(long)]
    by: Option<String>,
}

#[derive(Subcommand)]
enum PersonasCommands {
    /// Print the registry and its category coverage
    List {
        /// Registry file (default: bundled registry)
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum KbCommands {
    /// Print the clauses and jurisdiction x criterion coverage
    List {
        /// KB file (default: bundled KB)
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "error"
    } else {
        "info"
    }))
    .format_timestamp(None)
    .init();

    let result = match cli.command {
        Commands::Generate(args) => generate::run(args),
        Commands::Audit(args) => audit_cmd::run(args),
        Commands::Personas {
            command: PersonasCommands::List { data },
        } => listing::personas_list(data.as_deref()),
        Commands::Kb {
            command: KbCommands::List { data },
        } => listing::kb_list(data.as_deref()),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}
