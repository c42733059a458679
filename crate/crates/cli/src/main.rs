//! `ultraguess`: batch runner over the library. Reports go to stdout as one
//! JSON record per line, a short human summary goes to stderr.
//!
//! Exit status: 0 success, 1 a check failed, 2 usage or module error.

mod commands;

use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Parser, Serialize)]
#[command(name = "ultraguess", version, about = "Finite-horizon guessing sequences, splitting trees and filter bases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Build a splitting pseudo-tree stage by stage.
    BuildTree(BuildTreeArgs),
    /// Re-check a tree file: splitting below a frontier and exact levels of the frontier branches.
    Verify(VerifyArgs),
    /// Turn the frontier branches of a tree into a filter base and check finite intersections.
    Base(BaseArgs),
    /// Compare functions against the level-counting function on the sets of a base.
    Sky(SkyArgs),
    /// Adjoin the below-set of a function to a base and re-check it.
    Extend(ExtendArgs),
    /// Partial sums of the guessing probabilities.
    Bc(BcArgs),
    /// Exact probability that a random subject is guessed in a window of levels.
    Measure(MeasureArgs),
    /// Monte Carlo estimate of the same probability.
    Mc(McArgs),
    /// Diagonalize against a structure and sweep every subject of a width.
    Diag(DiagArgs),
    /// Sum several structures over pairs and check the rectangle law on sampled subjects.
    Fubini(FubiniArgs),
    /// Extract selectors for an interval partition and test them against a base.
    Selector(SelectorArgs),
    /// Build the coded independent family and check its boolean combinations.
    Isbell(IsbellArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BuildTreeArgs {
    #[arg(long, default_value = "ruler")]
    pub pi: String,
    #[arg(long, default_value = "id")]
    pub f: String,
    #[arg(long, default_value_t = 6)]
    pub stages: usize,
    /// Largest level the construction may reach.
    #[arg(long, default_value_t = 1 << 26)]
    pub cap: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Tree file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Check branching below this level instead of the last branching stage.
    #[arg(long)]
    pub frontier: Option<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct BaseArgs {
    /// Tree file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub arity: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    NotGeq,
    Less,
}

#[derive(Debug, Args, Serialize)]
pub struct SkyArgs {
    /// Base file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "ruler")]
    pub pi: String,
    #[arg(long, default_value = "id")]
    pub f: String,
    /// Test function; repeat for several.
    #[arg(long, required = true)]
    pub g: Vec<String>,
    #[arg(long, value_enum, default_value_t = Relation::NotGeq)]
    pub relation: Relation,
    #[arg(long)]
    pub midpoint: Option<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtendArgs {
    /// Base file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "ruler")]
    pub pi: String,
    #[arg(long, default_value = "id")]
    pub f: String,
    #[arg(long)]
    pub g: String,
    #[arg(long, default_value_t = 5)]
    pub arity: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A structure from a tree or structure file, or a seeded random one.
#[derive(Debug, Args, Serialize)]
pub struct StructureArgs {
    /// Tree or structure file.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "id")]
    pub pi: String,
    #[arg(long, default_value = "id")]
    pub f: String,
    #[arg(long, default_value_t = 16)]
    pub horizon: u32,
    /// Seed of the random structure built when no file is given.
    #[arg(long, default_value_t = 0)]
    pub structure_seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct BcArgs {
    /// Tree or structure file; without it the counts are π(n) itself.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "id")]
    pub pi: String,
    #[arg(long, default_value = "id")]
    pub f: String,
    /// Sum the levels below this bound.
    #[arg(long, visible_alias = "N", default_value_t = 64)]
    pub upto: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub structure: StructureArgs,
    #[arg(long, default_value_t = 0)]
    pub from: u32,
    /// Window end; defaults to the structure's horizon.
    #[arg(long)]
    pub to: Option<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[command(flatten)]
    pub structure: StructureArgs,
    #[arg(long, default_value_t = 0)]
    pub from: u32,
    #[arg(long)]
    pub to: Option<u32>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagArgs {
    /// Tree or structure file; without it every level holds all strings of width f(n).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "pow2(id)")]
    pub pi: String,
    #[arg(long, default_value = "id")]
    pub f: String,
    #[arg(long, default_value_t = 16)]
    pub horizon: u32,
    /// Subject width of the sweep; defaults to the horizon, at most 24.
    #[arg(long)]
    pub width: Option<u32>,
    /// Certificate file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Codec {
    Cantor,
    RowMajor,
}

#[derive(Debug, Args, Serialize)]
pub struct FubiniArgs {
    /// Tree or structure file per column; repeat for several.
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Codec::Cantor)]
    pub codec: Codec,
    /// Row length of the row-major codec; defaults to the widest column horizon.
    #[arg(long)]
    pub row_width: Option<u32>,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectorArgs {
    /// Base file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Partition file with `horizon` and `boundaries`; defaults to square intervals.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct IsbellArgs {
    #[arg(long, default_value_t = 5)]
    pub cap: u32,
    #[arg(long, default_value_t = 4)]
    pub arity: usize,
    /// Use the first this-many subsets of [0, cap) as index sets; defaults to all of them.
    #[arg(long)]
    pub indices: Option<u32>,
    /// Family file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Module(#[from] ultraguess::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        use ultraguess::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Module(e) => match e {
                E::Parse(_) => "parse",
                E::Eval(_) => "eval",
                E::HorizonMismatch { .. } => "horizon_mismatch",
                E::OutOfHorizon { .. } => "out_of_horizon",
                E::InvalidStructure(_) => "invalid_structure",
                E::HorizonExhausted { .. } => "horizon_exhausted",
                E::NoAdmissibleLevel => "no_admissible_level",
                E::CountingHypothesis { .. } => "counting_hypothesis",
                E::Internal(_) => "internal",
                E::CodecRange { .. } => "codec_range",
                E::WindowTooLarge { .. } => "window_too_large",
                E::FipFailure { .. } => "fip_failure",
                E::InvalidInput(_) => "invalid_input",
                E::Io(_) => "io",
                E::Json(_) => "json",
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Line-oriented report sink.
pub struct Reporter<W: Write> {
    out: W,
}

impl<W: Write> Reporter<W> {
    /// Writes `{"record": kind, ...fields}`; non-object values land under `value`.
    pub fn emit<T: Serialize>(&mut self, kind: &str, value: &T) -> CliResult<()> {
        let mut map = match serde_json::to_value(value).map_err(ultraguess::Error::from)? {
            Value::Object(map) => map,
            other => Map::from_iter([("value".to_string(), other)]),
        };
        map.insert("record".into(), Value::String(kind.into()));
        ultraguess::io::write_record(&mut self.out, &map)?;
        Ok(())
    }
}

/// Whether every check of a run held.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    CheckFailed,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::CheckFailed
        }
    }
}

fn run<W: Write>(cli: &Cli, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    rep.emit("config", &cli.command)?;
    match &cli.command {
        Command::BuildTree(a) => commands::build_tree(a, rep),
        Command::Verify(a) => commands::verify(a, rep),
        Command::Base(a) => commands::base(a, rep),
        Command::Sky(a) => commands::sky(a, rep),
        Command::Extend(a) => commands::extend(a, rep),
        Command::Bc(a) => commands::bc(a, rep),
        Command::Measure(a) => commands::measure(a, rep),
        Command::Mc(a) => commands::mc(a, rep),
        Command::Diag(a) => commands::diag(a, rep),
        Command::Fubini(a) => commands::fubini(a, rep),
        Command::Selector(a) => commands::selector(a, rep),
        Command::Isbell(a) => commands::isbell(a, rep),
    }
}

fn error_record(kind: &str, message: &str) -> Value {
    json!({"record": "error", "kind": kind, "message": message})
}

fn main() -> ExitCode {
    let stdout = io::stdout();
    let mut rep = Reporter {
        out: BufWriter::new(stdout.lock()),
    };
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = ultraguess::io::write_record(&mut rep.out, &error_record("usage", e.kind().as_str().unwrap_or("invalid arguments")));
            let _ = rep.out.flush();
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let outcome = run(&cli, &mut rep);
    let code = match outcome {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => {
            eprintln!("check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            let message = e.to_string();
            let _ = ultraguess::io::write_record(&mut rep.out, &error_record(e.kind(), &message));
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    };
    let _ = rep.out.flush();
    code
}
