//! `alt-phillips`: batch front end for profiles, barriers, discrete solves,
//! density scans, γ sweeps, recovery sequences and identity checks.

mod config;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{BcSpec, GridSpec, Reals};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or parameters. Exit code 2.
    Config(String),
    /// The computation itself failed. Exit code 3.
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<alt_phillips::Error> for CliError {
    fn from(e: alt_phillips::Error) -> Self {
        let mut inner = &e;
        while let alt_phillips::Error::Sweep { source, .. } = inner {
            inner = source;
        }
        if inner.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("i/o: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "alt-phillips", version, about = "Singular Alt-Phillips free boundary experiments")]
pub struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "ALT_PHILLIPS_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact or generator-built one-dimensional profile.
    Profile(ProfileArgs),
    /// Certified barrier profile.
    Barrier(BarrierArgs),
    /// Minimize the discrete energy for one exponent.
    Solve(SolveArgs),
    /// Density ratios around a free boundary point of a stored field.
    Density(DensityArgs),
    /// Solve one problem for a list of exponents.
    Sweep(SweepArgs),
    /// Recovery sequence energies for a fixed set.
    Recovery(RecoveryArgs),
    /// Run an identity suite and print a pass/fail table.
    Check(CheckArgs),
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// JSON configuration or manifest of an earlier run; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct SolverFlags {
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// Comma separated regularization floors in units of φ(h), ending at 0.
    #[arg(long)]
    pub delta_schedule: Option<Reals>,
    /// lexicographic or red-black.
    #[arg(long)]
    pub ordering: Option<String>,
    /// flat or distance-profile.
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub sor_omega: Option<f64>,
    #[arg(long)]
    pub homotopy_stages: Option<usize>,
    #[arg(long)]
    pub cascade_levels: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// exact or generator.
    #[arg(long, value_parser = ["exact", "generator"])]
    pub kind: Option<String>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub resolution: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BarrierArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = ["growth", "interior", "density"])]
    pub kind: Option<String>,
    /// Space dimension.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub eps_bar: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub m_level: Option<f64>,
    #[arg(long)]
    pub resolution: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// 1d:N or 2d:N.
    #[arg(long)]
    pub grid: Option<GridSpec>,
    /// zero, constant:V, phi-right, planar:X or chord:PSI0:SPLIT.
    #[arg(long)]
    pub bc: Option<BcSpec>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Field file written by `solve` or `sweep`.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long)]
    pub node: Option<usize>,
    /// Point whose nearest free boundary node is the center, e.g. 0.5,0.5.
    #[arg(long, value_parser = config::parse_point)]
    pub near: Option<[f64; 2]>,
    #[arg(long)]
    pub radii: Option<Reals>,
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub gammas: Option<Reals>,
    /// chord, planar or phi-right.
    #[arg(long)]
    pub problem: Option<config::ProblemKind>,
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub density_floor: Option<f64>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Args, Debug)]
pub struct RecoveryArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub gammas: Option<Reals>,
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long, value_parser = ["half-square", "disk"])]
    pub set: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// erode-one-cell or none.
    #[arg(long)]
    pub smoothing: Option<String>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub suite: Option<String>,
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    match jobs {
        Some(0) => return Err(CliError::Config("--jobs must be at least 1".into())),
        Some(j) => b = b.num_threads(j),
        None => {}
    }
    b.build().map_err(|e| CliError::Numerical(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = pool(cli.jobs).and_then(|p| p.install(|| run::dispatch(cli.command)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("alt-phillips: {e}");
            ExitCode::from(e.code())
        }
    }
}
