use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "ckb",
    version,
    about = "Cuntz-Krieger operators on stationary Bratteli diagrams"
)]
pub struct Cli {
    /// Use floating point instead of exact arithmetic.
    #[arg(long, global = true)]
    pub float: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Edge table, primitivity, connectivity and Perron data of a diagram.
    Analyze { diagram: PathBuf },
    /// Coupled graph G(A) as JSON, or DOT with --dot.
    CoupledGraph {
        diagram: PathBuf,
        #[arg(long)]
        dot: bool,
    },
    /// Admissible maps between two diagrams.
    FindAdmissible {
        source: PathBuf,
        target: PathBuf,
        /// Every admissible map (default).
        #[arg(long, conflicts_with = "first")]
        all: bool,
        /// Only the lexicographically first map.
        #[arg(long)]
        first: bool,
    },
    /// Cylinder measures.
    Measure {
        #[command(subcommand)]
        command: MeasureCommand,
    },
    /// Run a verifier; exit status 1 when a check fails.
    Verify {
        #[command(subcommand)]
        command: VerifyCommand,
    },
    /// 0-1 reduction of a nonnegative integer incidence matrix.
    Reduce { matrix: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum MeasureCommand {
    /// Measures of all cylinders at one depth, or of one word.
    Eval {
        diagram: PathBuf,
        measure: PathBuf,
        #[command(flatten)]
        depth: DepthArg,
        /// Comma-separated edge labels, e.g. e1,e2.
        #[arg(long)]
        word: Option<String>,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct DepthArg {
    /// Cylinder depth, 1..=12; CKB_MAX_DEPTH lowers the ceiling.
    #[arg(long, default_value_t = 6)]
    pub depth: i64,
}

#[derive(Subcommand, Debug)]
pub enum VerifyCommand {
    /// Cuntz-Krieger relations of the edge and vertex families.
    Ck {
        diagram: PathBuf,
        measure: PathBuf,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Intertwiner of two representations related by an admissible map.
    Equivalence {
        source: PathBuf,
        target: PathBuf,
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        measure: PathBuf,
        /// Measure on the target; defaults to --measure.
        #[arg(long)]
        target_measure: Option<PathBuf>,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Monic representation of the inherent system on X_A.
    Monic {
        diagram: PathBuf,
        measure: PathBuf,
        /// Second measure to test for monic equivalence.
        #[arg(long)]
        against: Option<PathBuf>,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Edge system refines vertex system.
    Refinement {
        diagram: PathBuf,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Quasi-stationarity of a Markov sequence.
    Quasi {
        diagram: PathBuf,
        measure: PathBuf,
        #[command(flatten)]
        depth: DepthArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(if out.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("{}", commands::error_json(&e));
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
