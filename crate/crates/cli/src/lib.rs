//! The `slagwall` command-line front end.
//!
//! Five subcommands wrap the library: `params` solves the construction
//! parameters, `levelset` traces and plots level sets, `wall` scans charges
//! and verdicts across the wall, `flow` runs the momentum mean curvature
//! flow and `bundle` analyses split Fano bundles. Every command is
//! deterministic; files go to the output directory (`--out-dir`, else the
//! `SLAGWALL_OUT_DIR` environment variable, else the working directory) and a
//! short report goes to standard output.
//!
//! Exit codes: `0` success, `2` no solution for the given parameters
//! (for example a non-Kähler class), `3` flow aborted by a singularity, `4`
//! bundle branch left the trace window, `64` usage error, `74` I/O error.

pub mod commands;
pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use thiserror::Error;

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "SLAGWALL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "slagwall", version, about = "Special Lagrangian multi-sections, stability walls and flows")]
pub struct Cli {
    /// Plain-text file of `key = value` lines supplying flags for the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for output files [env: SLAGWALL_OUT_DIR; default: .].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve (c, q, a, p) from θ̂ or p and report admissibility.
    #[command(allow_negative_numbers = true, args_override_self = true, after_help = commands::PARAMS_HELP)]
    Params(commands::ParamsArgs),
    /// Trace every component of a level set in a window; write CSV and SVG.
    #[command(allow_negative_numbers = true, args_override_self = true, after_help = commands::LEVELSET_HELP)]
    Levelset(commands::LevelsetArgs),
    /// Scan central charges, slopes and verdicts over b.
    #[command(allow_negative_numbers = true, args_override_self = true, after_help = commands::WALL_HELP)]
    Wall(commands::WallArgs),
    /// Run the momentum flow: unstable for b > 1, stable relaxation for b < 1.
    #[command(allow_negative_numbers = true, args_override_self = true, after_help = commands::FLOW_HELP)]
    Flow(commands::FlowArgs),
    /// Vertical branch, boundary hits, commensurability and signs for X_{r,m}.
    #[command(allow_negative_numbers = true, args_override_self = true, after_help = commands::BUNDLE_HELP)]
    Bundle(commands::BundleArgs),
}

/// Why a command did not succeed, carrying its exit code.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NoSolution(String),
    #[error("flow aborted: {0}")]
    FlowAborted(String),
    #[error("{0}")]
    BranchEscapes(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 64,
            Failure::NoSolution(_) => 2,
            Failure::FlowAborted(_) => 3,
            Failure::BranchEscapes(_) => 4,
            Failure::Io { .. } => 74,
        }
    }
}

/// Outcome of [`run`] when clap handles the invocation itself.
#[derive(Debug)]
pub enum Early {
    /// `--help` or `--version`: print to stdout and exit 0.
    Info(String),
}

/// Splice the configuration file (if any) into the argument list.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let mut config_path = None;
    let mut iter = args.iter().enumerate().skip(1);
    while let Some((_, a)) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config_path = iter.next().map(|(_, v)| PathBuf::from(v));
        } else if let Some(v) = s.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(v));
        }
    }
    let Some(path) = config_path else { return Ok(args) };

    let mut cmd = Cli::command();
    cmd.build();
    let names: Vec<String> = cmd.get_subcommands().map(|c| c.get_name().to_string()).collect();
    let Some(pos) = args.iter().skip(1).position(|a| names.iter().any(|n| a == n.as_str())) else {
        return Ok(args);
    };
    let pos = pos + 1;
    let sub = cmd.find_subcommand(args[pos].to_string_lossy().as_ref()).expect("known subcommand");
    let text = std::fs::read_to_string(&path).map_err(|source| Failure::Io { path: path.clone(), source })?;
    let entries = config::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let extra = config::to_args(&entries, sub).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut out = args[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

/// Parse `args` (including the program name) and run the selected command,
/// writing its report to `stdout`.
pub fn run(args: Vec<OsString>, stdout: &mut dyn Write) -> Result<Option<Early>, Failure> {
    let args = expand_config(args)?;
    let matches = match Cli::command().args_override_self(true).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Some(Early::Info(e.render().to_string()))),
                _ => Err(Failure::Usage(e.render().to_string().trim_end().to_string())),
            };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| Failure::Usage(e.to_string()))?;
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let out = commands::Output::new(out_dir)?;
    match &cli.command {
        Command::Params(a) => commands::params(a, stdout),
        Command::Levelset(a) => commands::levelset(a, &out, stdout).map(|_| ()),
        Command::Wall(a) => commands::wall(a, &out, stdout),
        Command::Flow(a) => commands::flow(a, &out, stdout),
        Command::Bundle(a) => commands::bundle(a, &out, stdout).map(|_| ()),
    }?;
    Ok(None)
}
