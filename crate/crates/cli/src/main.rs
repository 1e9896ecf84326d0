//! `smabp`: generators, transformations, verifiers and rank experiments for
//! syntactic multilinear branching programs.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use smabp::corpus::CorpusConfig;
use smabp::Error;

#[derive(Parser, Debug)]
#[command(name = "smabp", version, about = "Syntactic multilinear ABP toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalOpts {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = CorpusConfig::default().seed)]
    seed: u64,
    /// Field modulus for generated objects.
    #[arg(long, global = true, default_value_t = smabp::DEFAULT_PRIME)]
    prime: u64,
    /// Gate budget for formula construction.
    #[arg(long, global = true, default_value_t = smabp::formula::DEFAULT_GATE_BUDGET)]
    budget_gates: u64,
    /// Cap on enumerated parse trees and paths.
    #[arg(long, global = true, default_value_t = CorpusConfig::default().tree_budget)]
    budget_trees: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    /// One summary line per result.
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a polynomial or program.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Apply a transformation and verify it.
    Transform {
        #[arg(value_enum)]
        pass: Pass,
        /// Program JSON (optionally wrapped with its order list).
        #[arg(long)]
        input: PathBuf,
        /// Orders for order-to-pass, e.g. "1,2,3;3,2,1".
        #[arg(long)]
        orders: Option<String>,
    },
    /// Partial derivative matrix ranks of a polynomial.
    Rank {
        /// Polynomial, full-rank or program JSON.
        #[arg(long)]
        input: PathBuf,
        /// Number of uniformly sampled balanced partitions.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Use the partition induced by this order instead, e.g. "2,1,4,3".
        #[arg(long, conflicts_with = "explicit")]
        from_permutation: Option<String>,
        /// Use this partition instead, e.g. "y1,z1,y2,z2" (one label per variable).
        #[arg(long)]
        explicit: Option<String>,
        /// Fail unless every rank equals this value.
        #[arg(long)]
        expect_rank: Option<usize>,
    },
    /// Check a structural property of a program.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        #[arg(long)]
        input: PathBuf,
        /// Orders for `ordered`, e.g. "1,2;2,1".
        #[arg(long)]
        orders: Option<String>,
        /// Pass count for `l-pass`.
        #[arg(long, default_value_t = 1)]
        passes: usize,
        /// Variable order for `circular-interval`; omitted means search all orders (n ≤ 8).
        #[arg(long)]
        pi: Option<String>,
    },
    /// Run the acceptance corpus.
    Corpus {
        /// Run only this criterion (1-9).
        #[arg(long)]
        criterion: Option<u8>,
    },
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// The recursively defined full-rank polynomial.
    Fullrank {
        #[arg(long)]
        n: usize,
    },
    /// A random syntactic multilinear program.
    RandomSmabp {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        nodes: usize,
        /// Build an instance ordered by this many random orders.
        #[arg(long)]
        orders: Option<usize>,
        /// Width of each order's component when `--orders` is set.
        #[arg(long, default_value_t = 2)]
        width: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Pass {
    Decompose,
    ToFormula,
    ToDepth4,
    OrderToPass,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CheckKind {
    Smabp,
    Roabp,
    LPass,
    Ordered,
    CircularInterval,
}

/// What a command hands back to `main`.
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub body: serde_json::Value,
}

/// Errors surfaced as exit codes.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(s) => write!(f, "{s}"),
        }
    }
}

const EXIT_PROPERTY: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_INPUT: u8 = 3;

fn exit_code(e: &Failure) -> u8 {
    match e {
        Failure::Io(_) => EXIT_INPUT,
        Failure::Core(err) => match err {
            Error::BudgetExceeded { .. } => EXIT_BUDGET,
            Error::Parse(_) | Error::Validation(_) | Error::Dimension(_) | Error::Lookup(_) => EXIT_INPUT,
            Error::MultilinearityViolation { .. }
            | Error::DegenerateInput(_)
            | Error::OrderViolation { .. }
            | Error::InternalContradiction(_) => EXIT_PROPERTY,
        },
    }
}

fn error_body(e: &Failure) -> serde_json::Value {
    let mut body = serde_json::json!({ "error": e.to_string() });
    if let Failure::Core(Error::OrderViolation { vars, path }) = e {
        body["witness"] = serde_json::json!({ "vars": vars, "path": path });
    }
    if let Failure::Core(Error::MultilinearityViolation { var }) = e {
        body["witness"] = serde_json::json!({ "repeated_var": var });
    }
    body
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let g = cli.global.clone();
    let result = commands::run(&cli.command, &g);
    let (code, summary, body) = match result {
        Ok(o) => (if o.passed { 0 } else { EXIT_PROPERTY }, o.summary, o.body),
        Err(e) => (exit_code(&e), format!("error: {e}"), error_body(&e)),
    };
    let summary_line = summary.lines().next().unwrap_or_default().to_string();
    let text = match g.format {
        Format::Json => {
            let doc = if matches!(cli.command, Command::Gen { .. }) && code == 0 {
                body
            } else {
                serde_json::json!({ "config": commands::config_json(&cli.command, &g), "exit_code": code, "result": body })
            };
            serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n"
        }
        Format::Text => summary + "\n",
    };
    if let Err(e) = io::write_output(g.out.as_deref(), &text) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_INPUT);
    }
    if code != 0 && g.format == Format::Json {
        eprintln!("{summary_line}");
    }
    ExitCode::from(code)
}
