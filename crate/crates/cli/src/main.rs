//! `heatball`: mean-value checks, solvers and verification reports.
//!
//! Exit status: 0 when every check passes, 2 on a verification failure,
//! 1 on usage or domain errors.

mod commands;
mod config;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "heatball", version, about = "Mean-value formulas for the heat, OU and Hermite equations")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the closed-form catalog.
    Catalog(CatalogArgs),
    /// Mean-value residuals of a field over a radius sequence.
    MvCheck(MvArgs),
    /// Classify a field from its residuals and compare with the operator sign.
    Classify(MvArgs),
    /// Theta-scheme finite-difference solve.
    Solve(SolveArgs),
    /// Heat-ball geometry.
    Geometry {
        #[command(subcommand)]
        action: GeometryAction,
    },
    /// Weak and strong maximum principles and infinite propagation.
    Maxprin(MaxprinArgs),
    /// Harnack quotients.
    Harnack(HarnackArgs),
    /// Growth-class diagnostics for uniqueness classes.
    Growth(GrowthArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Output {
    /// JSON report path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV plot data path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CatalogArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum EquationArg {
    Heat,
    Ou,
    Hermite,
}

impl From<EquationArg> for heatball_core::Equation {
    fn from(e: EquationArg) -> Self {
        match e {
            EquationArg::Heat => heatball_core::Equation::Heat,
            EquationArg::Ou => heatball_core::Equation::Ou,
            EquationArg::Hermite => heatball_core::Equation::Hermite,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Tensor,
    Mc,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MvArgs {
    /// Catalog id, `const:<c>`, or an alias such as `heat.quadratic-bad`.
    #[arg(long)]
    pub field: String,
    /// Center as `x1,..,xn,t`.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
    pub center: Vec<f64>,
    /// Radii, strictly decreasing.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.2,0.05")]
    pub r: Vec<f64>,
    /// Equation whose balls and kernels are used (default: the field's own).
    #[arg(long, value_enum)]
    pub equation: Option<EquationArg>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Quadrature tolerance (tensor error estimate or MC standard error).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Residual tolerance of the classifier.
    #[arg(long, default_value_t = 1e-6)]
    pub classify_tol: f64,
    /// Use the descent kernels with this `m`.
    #[arg(long)]
    pub descent_m: Option<usize>,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long, value_enum)]
    pub equation: EquationArg,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Spatial box `[-half, half]ⁿ`.
    #[arg(long, default_value_t = 2.0)]
    pub half: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t_lo: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t_hi: f64,
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    #[arg(long, default_value_t = 0.025)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Initial data: catalog id, `const:<c>` or `bump`.
    #[arg(long)]
    pub initial: String,
    /// Lateral boundary data (defaults to the initial data).
    #[arg(long)]
    pub boundary: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum GeometryAction {
    /// Boundary samples of a ball, one row per (t, point).
    Export(GeometryArgs),
    /// Membership of points in a ball.
    Contains(ContainsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Omega,
    Xi,
    OmegaM,
    XiM,
    Gamma,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BallArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, value_delimiter = ',')]
    pub center: Vec<f64>,
    #[arg(long)]
    pub r: f64,
    #[arg(long, default_value_t = 0)]
    pub m: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GeometryArgs {
    #[command(flatten)]
    pub ball: BallArgs,
    #[arg(long, default_value_t = 32)]
    pub slices: usize,
    #[arg(long, default_value_t = 24)]
    pub angles: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ContainsArgs {
    #[command(flatten)]
    pub ball: BallArgs,
    /// Points as `x1,..,xn,t`, separated by `;`.
    #[arg(long)]
    pub points: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MaxprinArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Initial and boundary data: catalog id, `const:<c>` or `bump`.
    #[arg(long, default_value = "bump")]
    pub field: String,
    /// Range tolerance of the strong-principle check.
    #[arg(long, default_value_t = 1e-6)]
    pub strong_tol: f64,
    /// Overwrite one interior node (negative control).
    #[arg(long)]
    pub bump_node: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HarnackArgs {
    /// Nonnegative OU temperature: catalog id, `const:<c>` or
    /// `source:<xi1,..,xin>:<t_src>` (pulled-back heat kernel).
    #[arg(long, default_value = "const:1")]
    pub field: String,
    /// `(x0, t0)` as `x1,..,xn,t`.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
    pub center: Vec<f64>,
    /// Cylinder radii `R ≤ 1`.
    #[arg(long = "big-r", value_delimiter = ',', default_value = "0.1,0.2,0.4")]
    pub big_r: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub q: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Point sample `K` as `x,..,t;x,..,t`: switches to `max_K U / U(x0,t0)`.
    #[arg(long)]
    pub k: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GrowthArgs {
    /// `pow:<a>`, `rlog:<k>`, or a catalog id (`r^1.5`, `rloglog`, `osc.bounded`, ...).
    #[arg(long)]
    pub p: String,
    /// Compare with `p + λ r`.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Expected verdict; a mismatch is a verification failure.
    #[arg(long)]
    pub expect: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(report::Status::Pass) => ExitCode::SUCCESS,
        Ok(report::Status::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
