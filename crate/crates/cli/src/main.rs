//! `graphon`: command-line front end for graphon-core.

mod commands;
mod report;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use graphon_core::constraints::Estimator;
use graphon_core::coords::DEFAULT_TOWER_CAP;
use graphon_core::graphons::svejk::DEFAULT_TAIL_K;
use graphon_core::Error;

use report::{Format, RunConfig};

/// Exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_MISMATCH: u8 = 2;
pub const EXIT_PRECONDITION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "graphon",
    version,
    about = "Graphon constructions, densities, regularity and constraints"
)]
struct Cli {
    /// Seed for every random stream
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo sample count
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: u64,
    /// Numerical tolerance
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Highest tower level a coordinate may use
    #[arg(long, global = true, default_value_t = DEFAULT_TOWER_CAP)]
    tower_cap: u32,
    /// Terms summed in the Švejk tail series
    #[arg(long, global = true, default_value_t = DEFAULT_TAIL_K)]
    tail_k: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Print decimals even where exact fractions are known
    #[arg(long, global = true)]
    decimal: bool,
    /// Add the wall time to JSON records (makes reruns differ)
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Product,
    Bernoulli,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Product => Estimator::Product,
            EstimatorArg::Bernoulli => Estimator::Bernoulli,
        }
    }
}

/// Graphons are given as `svejk`, `half`, `cf:<m>`, `constant:<p>`,
/// `restriction:<n>`, a JSON descriptor, or `@file` holding one.
#[derive(Subcommand)]
enum Command {
    /// Evaluate W(x, y)
    Eval {
        graphon: String,
        x: String,
        y: String,
    },
    /// Degrees at sampled points of each part, against expected values
    Degrees {
        graphon: String,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Draw a W-random graph
    Sample { graphon: String, order: usize },
    /// Induced density of a graph such as `K3` or `G{4;0-1 1-2}`
    Density {
        graphon: String,
        graph: String,
        /// Sample even when an exact value is available
        #[arg(long)]
        mc: bool,
    },
    /// Refine to a weak regular partition, tracing the energy
    Partition {
        graphon: String,
        /// Target deviation, e.g. `0.05` or `1/20`
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = 20)]
        restarts: u32,
        /// Where to write the partition
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the (step, parts, energy) CSV
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Largest deviation of a partition, with its witness sets
    Deviation {
        graphon: String,
        partition: PathBuf,
        /// Use the alternating heuristic even when exhaustive search fits
        #[arg(long)]
        heuristic: bool,
        #[arg(long, default_value_t = 20)]
        restarts: u32,
    },
    /// Exhibit a deviation witness for a partition of the Conlon-Fox graphon
    Refute {
        m: u32,
        /// Partition file; the single part when omitted
        partition: Option<PathBuf>,
        /// Partition by the first COORDS sign coordinates instead
        #[arg(long, conflicts_with = "partition")]
        coords: Option<u32>,
        /// Where to write the report
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the constraints in a file against a graphon
    Constraint {
        file: PathBuf,
        graphon: String,
        /// Part table (JSON); overrides parts declared in the file
        #[arg(long)]
        parts: Option<PathBuf>,
        /// Locate the Švejk parts from their degrees
        #[arg(long, conflicts_with = "parts")]
        fit_degrees: bool,
        /// Accepted root tuples per decorated constraint
        #[arg(long, default_value_t = 1000)]
        roots: u64,
        /// Non-root draws per root tuple
        #[arg(long, default_value_t = 1000)]
        inner: u64,
        #[arg(long, default_value_t = 10_000_000)]
        max_root_tries: u64,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Product)]
        estimator: EstimatorArg,
    },
    /// Compare the Conlon-Fox copy inside the Švejk graphon with the original
    ExtractCf {
        n: u32,
        #[arg(long, default_value_t = 10_000)]
        pairs: u64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Degrees { .. } => "degrees",
            Command::Sample { .. } => "sample",
            Command::Density { .. } => "density",
            Command::Partition { .. } => "partition",
            Command::Deviation { .. } => "deviation",
            Command::Refute { .. } => "refute",
            Command::Constraint { .. } => "constraint",
            Command::ExtractCf { .. } => "extract-cf",
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::PreconditionViolated(_)
            | Error::TooManyBlocks { .. }
            | Error::BudgetExceeded(_)
            | Error::LevelTooLarge { .. }
            | Error::MTooLarge(_),
        ) => EXIT_PRECONDITION,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let config = RunConfig {
        seed: cli.seed,
        samples: cli.samples,
        tol: cli.tol,
        tower_cap: cli.tower_cap,
        tail_k: cli.tail_k,
        format: cli.format,
        decimal: cli.decimal,
    };
    let start = Instant::now();
    match commands::run(&cli.command, &config) {
        Ok((inputs, outcome)) => {
            let wall = cli.timing.then(|| start.elapsed().as_millis());
            let refs: Vec<&[u8]> = inputs.iter().map(Vec::as_slice).collect();
            let text = report::render(cli.command.name(), &config, &refs, &outcome, wall);
            // a closed pipe (e.g. `| head`) is not an error
            match io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_USAGE)
                }
                _ => ExitCode::from(outcome.code),
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
