//! Command-line front end for `fracdual-core`.
//!
//! ```text
//! fracdual derivative --f tan --alpha 0.4 --h 0.0001 --points 0.1:0.6:0.1
//! fracdual solve problem.txt --method dual
//! fracdual dual problem.txt
//! fracdual convergence --f exp --alpha 0.9 --x 0.5 --h-list 4e-4,2e-4,1e-4
//! fracdual reproduce all
//! ```

pub mod commands;
pub mod fixtures;
pub mod problem;
pub mod reproduce;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use commands::{ConvergenceCase, DerivMode, MethodChoice};
use problem::{ProblemError, ProblemFile};
use reproduce::Target;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse: {path}: {source}")]
    Problem { path: String, source: ProblemError },
    #[error("config: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// What a command produced. `data` goes to `--out` or stdout, `notes` to
/// stderr, `curves` to `--plot-data`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Output {
    pub data: String,
    pub notes: Vec<String>,
    pub curves: Vec<(String, String)>,
    pub status: i32,
}

#[derive(Debug, Parser)]
#[command(name = "fracdual", version, about = "Dual-method solver for Caputo fractional differential equations")]
pub struct Cli {
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Directory for two-column per-curve files.
    #[arg(long, global = true)]
    pub plot_data: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Subst,
    Byparts,
    Dual,
}

impl From<MethodArg> for MethodChoice {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Subst => MethodChoice::Subst,
            MethodArg::Byparts => MethodChoice::ByParts,
            MethodArg::Dual => MethodChoice::Dual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DerivArg {
    Analytic,
    Stencil,
}

impl From<DerivArg> for DerivMode {
    fn from(d: DerivArg) -> Self {
        match d {
            DerivArg::Analytic => DerivMode::Analytic,
            DerivArg::Stencil => DerivMode::Stencil,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Table1,
    Table2,
    Table3,
    Figures,
    All,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Problem file, or `fixture:<name>` for a bundled one.
    pub problem: String,
    /// Override the step size of the file.
    #[arg(long)]
    pub h: Option<f64>,
    /// Print the problem in canonical form and exit.
    #[arg(long)]
    pub dump_normalized: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Both quadratures of D^alpha f at grid points.
    Derivative {
        /// tan, exp, sin, cos, const<c>, or an expression in x.
        #[arg(long = "f", allow_hyphen_values = true)]
        f: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        h: f64,
        /// a:b:step, a comma list, or one value.
        #[arg(long)]
        points: String,
        #[arg(long, value_enum, default_value_t = DerivArg::Stencil)]
        deriv: DerivArg,
    },
    /// Solve a problem file.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Dual)]
        method: MethodArg,
    },
    /// Solve with both methods and report the verdict.
    Dual {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Observed orders of accuracy under step halving.
    Convergence {
        /// Problem file with an `exact` solution.
        #[arg(long, conflicts_with_all = ["f", "alpha", "x"])]
        problem: Option<String>,
        #[arg(long = "f", allow_hyphen_values = true, requires_all = ["alpha", "x"])]
        f: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Evaluation point of the derivative.
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, value_enum, default_value_t = DerivArg::Stencil)]
        deriv: DerivArg,
        #[arg(long, value_enum, default_value_t = MethodArg::Dual)]
        method: MethodArg,
        /// Comma-separated step sizes, each half the previous.
        #[arg(long)]
        h_list: String,
    },
    /// Compare against the published values.
    Reproduce {
        #[arg(value_enum)]
        target: TargetArg,
    },
}

/// Reads a problem file from disk or from the bundled fixtures.
pub fn load_problem(source: &str) -> Result<ProblemFile, CliError> {
    let text = match source.strip_prefix("fixture:") {
        Some(name) => fixtures::fixture_text(name)
            .ok_or_else(|| CliError::Usage(format!("no fixture named `{name}`")))?
            .to_string(),
        None => std::fs::read_to_string(source)
            .map_err(|source_err| CliError::Io { path: source.to_string(), source: source_err })?,
    };
    ProblemFile::parse(&text).map_err(|e| CliError::Problem { path: source.to_string(), source: e })
}

fn load_with_override(args: &ProblemArgs) -> Result<ProblemFile, CliError> {
    let mut p = load_problem(&args.problem)?;
    if let Some(h) = args.h {
        p.h = h;
        p.config(fracdual_core::MethodKind::Substitution)
            .steps(p.spec.end())
            .map_err(|e| CliError::Usage(format!("--h: {e}")))?;
    }
    Ok(p)
}

fn solve_or_dump(args: &ProblemArgs, choice: MethodChoice) -> Result<Output, CliError> {
    let p = load_with_override(args)?;
    if args.dump_normalized {
        return Ok(Output { data: p.to_normalized(), ..Output::default() });
    }
    commands::cmd_solve(&p, choice)
}

/// Runs one parsed command line.
pub fn execute(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Derivative { f, alpha, h, points, deriv } => {
            commands::cmd_derivative(f, *alpha, *h, &commands::parse_points(points)?, (*deriv).into())
        }
        Command::Solve { problem, method } => solve_or_dump(problem, (*method).into()),
        Command::Dual { problem } => solve_or_dump(problem, MethodChoice::Dual),
        Command::Convergence { problem, f, alpha, x, deriv, method, h_list } => {
            let h_list = commands::parse_h_list(h_list)?;
            match (problem, f) {
                (Some(path), _) => {
                    let p = load_problem(path)?;
                    commands::cmd_convergence(ConvergenceCase::Problem(&p), (*method).into(), &h_list)
                }
                (None, Some(f)) => {
                    let (Some(alpha), Some(x)) = (alpha, x) else {
                        return Err(CliError::Usage("--f needs --alpha and --x".into()));
                    };
                    let case = ConvergenceCase::Derivative { f, alpha: *alpha, x: *x, mode: (*deriv).into() };
                    commands::cmd_convergence(case, (*method).into(), &h_list)
                }
                (None, None) => Err(CliError::Usage("give --problem or --f".into())),
            }
        }
        Command::Reproduce { target } => {
            let t = match target {
                TargetArg::Table1 => Target::Table1,
                TargetArg::Table2 => Target::Table2,
                TargetArg::Table3 => Target::Table3,
                TargetArg::Figures => Target::Figures,
                TargetArg::All => Target::All,
            };
            Ok(reproduce::cmd_reproduce(t))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })
}

/// Writes the output of a command where the flags say; returns the exit status.
pub fn emit(cli: &Cli, output: &Output) -> Result<i32, CliError> {
    match &cli.out {
        Some(path) => write_file(path, &output.data)?,
        None => print!("{}", output.data),
    }
    for n in &output.notes {
        eprintln!("{n}");
    }
    if let Some(dir) = &cli.plot_data {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.display().to_string(), source: e })?;
        for (name, body) in &output.curves {
            write_file(&dir.join(format!("{name}.csv")), body)?;
        }
    }
    Ok(output.status)
}

/// Parses the command line, runs it and reports; returns the exit status.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let reason: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("error: usage: {}", reason.join(" ").trim_start_matches("error: "));
            return 2;
        }
    };
    match execute(&cli.command).and_then(|o| emit(&cli, &o)) {
        Ok(status) => status,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            e.exit_code()
        }
    }
}
