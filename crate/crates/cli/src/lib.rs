//! Library side of the `iod` command: argument definitions, subcommands and
//! the seeded verification suites.
//!
//! Exit statuses: 0 success, 2 usage or parse error, 3 failed precondition
//! (dimension mismatch, invalid family, size cap), 4 verification failure.

pub mod commands;
pub mod suites;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{CliError, CliResult, Output, DEFAULT_CENTER_CAP};

#[derive(Debug, Parser)]
#[command(name = "iod", version, about = "Blockwise decompositions relative to projection families")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Relative tolerance; comparisons scale it by max(1, ‖a‖).
    #[arg(long, global = true, default_value_t = iod_core::DEFAULT_TOL)]
    pub tol: f64,

    /// Base seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a matrix into blocks p_ξ a p_η.
    Decompose {
        /// Matrix JSON: {"rows", "cols", "data": [[re, im], ...]} row-major.
        #[arg(long)]
        input: PathBuf,
        /// Family JSON: {"dim", "members": [matrix, ...]} or {"partition": [sizes]}.
        #[arg(long)]
        family: PathBuf,
        /// Store this string as the family reference instead of inlining it.
        #[arg(long)]
        family_ref: Option<String>,
    },
    /// Sum the blocks of an element back into a matrix.
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
    },
    /// Corner-supremum norm, bound check and corner sweep.
    Norm {
        #[arg(long)]
        input: PathBuf,
        /// Largest corner size in the sweep.
        #[arg(long, default_value_t = iod_core::iod::DEFAULT_SWEEP_CAP)]
        sweep: usize,
    },
    /// Compare two elements in the corner-positivity order.
    Order {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
    /// Block-sum product of two elements.
    Star {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
    /// Run a seeded verification suite.
    Verify {
        /// One of: lemma2, prop3, prop4-lemma8, lemma7, remark3, prop9,
        /// prop12, example-mn, theorem15.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Fixed dimension; drawn from 4..=16 per trial when omitted.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Corner-norm curve of a built-in infinite block family, as CSV.
    Converge {
        /// unit:I:J, diagonal:SEQ, band:WIDTH:VALUE or shift:SEQ, with SEQ one
        /// of const:C, harmonic, linear:OFFSET:SLOPE, list:V1,V2,...
        #[arg(long)]
        family: String,
        /// Claimed bound K; defaults to the family's known supremum.
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long, default_value_t = 64)]
        max_n: usize,
        /// Comma-separated strictly increasing truncations, instead of the
        /// doubling schedule.
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<usize>>,
    },
    /// Check the C(X) ⊗ M_n model: closure, center, abelian projections.
    Center {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_CENTER_CAP)]
        cap: usize,
    },
}

/// Runs a parsed command. Results go to `--out` when given and to `stdout`
/// otherwise; suite results always go to `stdout`. Diagnostics go to
/// `stderr`. Returns the exit status.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    let g = &cli.global;
    if !(g.tol.is_finite() && g.tol > 0.0) {
        return Err(CliError::usage(format!("--tol must be positive, got {}", g.tol)));
    }
    let output = match &cli.command {
        Command::Decompose { input, family, family_ref } => commands::decompose(input, family, family_ref.as_deref(), g.tol)?,
        Command::Reconstruct { input } => commands::reconstruct(input, g.tol)?,
        Command::Norm { input, sweep } => commands::norm(input, *sweep, g.tol)?,
        Command::Order { left, right } => commands::order(left, right, g.tol)?,
        Command::Star { left, right } => commands::star(left, right, g.tol)?,
        Command::Verify { suite, trials, dim } => {
            let out = commands::verify(suite, *trials, g.seed, *dim, g.tol)?;
            write_stdout(stdout, &out.text)?;
            if let Some(path) = &g.out {
                write_file(path, &out.text)?;
            }
            return Ok(out.code);
        }
        Command::Converge {
            family,
            bound,
            max_n,
            schedule,
        } => {
            let (out, summary) = commands::converge(family, *bound, *max_n, schedule.as_deref())?;
            let _ = writeln!(stderr, "{summary}");
            out
        }
        Command::Center { m, n, cap } => commands::center(*m, *n, *cap)?,
    };
    emit(g, stdout, &output)?;
    Ok(output.code)
}

fn emit(g: &GlobalArgs, stdout: &mut dyn Write, output: &Output) -> CliResult<()> {
    match &g.out {
        Some(path) => write_file(path, &output.text),
        None => write_stdout(stdout, &output.text),
    }
}

fn write_file(path: &PathBuf, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn write_stdout(stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::usage(format!("cannot write output: {e}")))
}
