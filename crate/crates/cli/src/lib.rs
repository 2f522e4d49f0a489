//! `ruinkit`: every analysis in `ruinkit-core` as a subcommand, with
//! deterministic JSON (or CSV) reports.
//!
//! Exit codes: 0 on success, 2 when the determinant conjecture fails or two
//! independent computations disagree beyond tolerance, 1 on usage and spec
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ruinkit_core::roots::DEFAULT_TOL;
use ruinkit_core::survival::DEFAULT_LIMIT_N;
use ruinkit_core::{parse_distribution, ClaimDistribution, Route, ScalarMode};

mod commands;
pub mod report;
pub mod verify;

pub use report::{Format, RunReport, Status};

#[derive(Debug, Parser)]
#[command(name = "ruinkit", version, about = "Survival probabilities for the discrete-time risk model with income rate 2")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,

    /// Write the report to a file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// x_n, y_n and the determinants D_n.
    Table(TableArgs),
    /// Check the sign/monotonicity pattern of D_n; exits 2 on a violation.
    Conjecture(ConjectureArgs),
    /// The interior zeros -1/alpha, 1/beta of H(s) - s^2 and the order r at s = 1.
    Roots(RootsArgs),
    /// Partial-fraction coefficients and the asymptotics of D_n.
    Asympt(AsymptArgs),
    /// phi(0), phi(1) by up to three routes, the phi table and pi_0, pi_1.
    Solve(SolveArgs),
    /// Finite-horizon survival by dynamic programming.
    Dp(DpArgs),
    /// Finite-horizon survival by seeded Monte Carlo.
    Simulate(SimulateArgs),
    /// Run every cross-check on the fixture laws; exits 2 on any failure.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct DistArg {
    /// A spec file, inline JSON, or shorthand such as `geometric(1/2)` or `pmf(1/2,0,1/2)`.
    #[arg(long)]
    pub dist: String,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub dist: DistArg,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value = "exact")]
    pub mode: ScalarMode,
}

#[derive(Debug, Args)]
pub struct ConjectureArgs {
    #[command(flatten)]
    pub dist: DistArg,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value = "exact")]
    pub mode: ScalarMode,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[command(flatten)]
    pub dist: DistArg,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct AsymptArgs {
    #[command(flatten)]
    pub dist: DistArg,
    /// Index of the ratio estimate D_{n+2}/D_n.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Closed,
    Limit,
    Xi,
    All,
}

impl RouteArg {
    fn routes(self) -> Vec<Route> {
        match self {
            RouteArg::Closed => vec![Route::ClosedForm],
            RouteArg::Limit => vec![Route::LimitRatio],
            RouteArg::Xi => vec![Route::XiSeries],
            RouteArg::All => Route::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub dist: DistArg,
    #[arg(long, default_value_t = 100)]
    pub u_max: usize,
    #[arg(long, value_enum, default_value = "all")]
    pub route: RouteArg,
    /// Order of the limit route.
    #[arg(long, default_value_t = DEFAULT_LIMIT_N)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct DpArgs {
    #[command(flatten)]
    pub dist: DistArg,
    #[arg(long, default_value_t = 0)]
    pub u: usize,
    #[arg(long, default_value_t = 1000)]
    pub horizon: usize,
    /// Surplus cap; states above it are absorbed as safe.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dist: DistArg,
    #[arg(long, default_value_t = 0)]
    pub u: usize,
    #[arg(long, default_value_t = 1000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Restrict the run to these laws (repeatable); defaults to the built-in fixtures.
    #[arg(long)]
    pub dist: Vec<String>,
    /// Horizon of the exact conjecture check.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 20_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

/// Reads `--dist`: inline JSON or shorthand if it looks like one, else a file.
pub fn load_dist(arg: &str) -> Result<ClaimDistribution, String> {
    let t = arg.trim();
    let text = if t.starts_with('{') || t.contains('(') {
        t.to_string()
    } else {
        std::fs::read_to_string(t).map_err(|e| format!("cannot read distribution file `{t}`: {e}"))?
    };
    parse_distribution(&text).map_err(|e| e.to_string())
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let report = match commands::execute(&cli.command) {
        Ok(r) => r,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 1;
        }
    };
    if let Some(note) = &report.note {
        let _ = writeln!(stderr, "{note}");
    }
    let written = match &cli.out {
        Some(path) => std::fs::File::create(path).and_then(|mut f| report.write(cli.format, &mut f)),
        None => report.write(cli.format, stdout),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write report: {e}");
        return 1;
    }
    report.status.exit_code()
}
