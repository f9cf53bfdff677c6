mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

/// Environment variable that overrides `--atp-path`.
pub const ATP_PATH_ENV: &str = "LRSX_ATP_PATH";
/// Environment variable that overrides `--atp-cmd`.
pub const ATP_CMD_ENV: &str = "LRSX_ATP_CMD";

#[derive(Parser, Debug)]
#[command(name = "lrsx", version, about = "Diagram-based correctness proofs for program transformations")]
struct Cli {
    /// Directory for all artifacts of this run.
    #[arg(long, global = true, default_value = "lrsx-out")]
    out: PathBuf,
    /// Print more detail (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug, Clone)]
enum Cmd {
    /// Parse and validate an input file.
    Check { input: PathBuf },
    /// List the overlaps of every command in an input file.
    Overlap { input: PathBuf },
    /// Compute joins and write one diagram file per command.
    Join {
        input: PathBuf,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        split_budget: Option<usize>,
    },
    /// Encode a diagram file (or a TPDB `.trs` file) and prove termination.
    Induct {
        file: PathBuf,
        /// Only write the TRS files.
        #[arg(long)]
        emit_only: bool,
        /// Directory holding `aprove.jar`.
        #[arg(long)]
        atp_path: Option<PathBuf>,
        /// External prover command; `{file}` is replaced by the TPDB file.
        #[arg(long)]
        atp_cmd: Option<String>,
        /// External prover timeout in seconds.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
        /// Depth bound of the loop search.
        #[arg(long, default_value_t = 5)]
        loop_depth: usize,
    },
    /// Validate diagrams and convergence equivalence on ground expressions.
    Oracle {
        input: PathBuf,
        #[arg(long, default_value_t = 7)]
        size: usize,
        /// Fixed fuel for convergence checks (default: four times the size).
        #[arg(long)]
        fuel: Option<usize>,
        /// Diagram files to use instead of computing joins; matched to
        /// commands by file name.
        #[arg(long)]
        diagrams: Vec<PathBuf>,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Check { .. } => "check",
            Cmd::Overlap { .. } => "overlap",
            Cmd::Join { .. } => "join",
            Cmd::Induct { .. } => "induct",
            Cmd::Oracle { .. } => "oracle",
        }
    }

    fn input(&self) -> &PathBuf {
        match self {
            Cmd::Check { input } | Cmd::Overlap { input } | Cmd::Join { input, .. } | Cmd::Oracle { input, .. } => input,
            Cmd::Induct { file, .. } => file,
        }
    }
}

/// Failure kinds with their stable exit codes.
#[derive(Debug)]
pub enum Failure {
    /// A proof or coverage failure (exit 1).
    Proof(String),
    /// Unreadable or invalid input (exit 2).
    Input(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub summary: serde_json::Value,
    /// Set when the run completed but the result is negative.
    pub failed: Option<String>,
}

#[derive(Serialize)]
struct RunManifest {
    input: String,
    command: String,
    args: Vec<String>,
    config: String,
    outputs: Vec<String>,
    elapsed_ms: u128,
    exit_code: u8,
    result: serde_json::Value,
}

/// `atp-path=dir` positional arguments become `--atp-path=dir`.
fn normalize_args(args: impl Iterator<Item = String>) -> Vec<String> {
    args.map(|a| match a.strip_prefix("atp-path=") {
        Some(rest) => format!("--atp-path={rest}"),
        None => a,
    })
    .collect()
}

fn main() -> ExitCode {
    let args = normalize_args(std::env::args());
    let cli = Cli::parse_from(&args);
    let start = Instant::now();
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }
    let res = commands::run(&cli.cmd, &cli.out, cli.verbose);
    let (code, outcome) = match res {
        Ok(o) => (if o.failed.is_some() { 1 } else { 0 }, o),
        Err(Failure::Proof(m)) => (1, Outcome { failed: Some(m), ..Default::default() }),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            (2, Outcome { summary: serde_json::json!({ "error": format!("{e:#}") }), ..Default::default() })
        }
    };
    if let Some(m) = &outcome.failed {
        eprintln!("{m}");
    }
    let manifest = RunManifest {
        input: cli.cmd.input().display().to_string(),
        command: cli.cmd.name().to_string(),
        args: args.iter().skip(1).cloned().collect(),
        config: format!("{:?}", cli.cmd),
        outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
        elapsed_ms: start.elapsed().as_millis(),
        exit_code: code,
        result: outcome.summary,
    };
    let path = cli.out.join("manifest.json");
    match serde_json::to_string_pretty(&manifest) {
        Ok(text) => {
            if let Err(e) = std::fs::write(&path, text + "\n") {
                eprintln!("warning: cannot write {}: {e}", path.display());
            }
        }
        Err(e) => eprintln!("warning: manifest: {e}"),
    }
    ExitCode::from(code)
}
