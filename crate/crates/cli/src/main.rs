//! `premq`: equilibria, welfare, simulation and dynamics for a two-class
//! priority-purchase queue.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 on runtime failure.

mod commands;
mod output;
mod sweep;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use premq::model::{parse_key_values, ModelParams, ParamOverrides};
use premq::Discipline;

use crate::output::Format;
use crate::sweep::{Axis, Range};

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Runtime(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid input: {m}"),
            Failure::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<premq::model::ModelError> for Failure {
    fn from(e: premq::model::ModelError) -> Self {
        Failure::Validation(format!("{e:?}: {e}"))
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

pub fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

#[derive(Parser, Debug)]
#[command(
    name = "premq",
    version,
    about = "Priority-purchase equilibria, welfare and simulation for a two-class M|G|1 queue"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean waits and the premium wait saving C(phi) at one premium fraction.
    Analytic(AnalyticArgs),
    /// Equilibrium premium fractions and their ESS labels.
    #[command(alias = "equilibrium")]
    Eq(EqArgs),
    /// Price of anarchy, at a point or over a sweep.
    Poa(PoaArgs),
    /// Discrete-event simulation with batch-means confidence intervals.
    #[command(alias = "simulate")]
    Sim(SimArgs),
    /// Best-response population dynamics.
    #[command(alias = "dynamics")]
    Dyn(DynArgs),
    /// Closed-form quantities over a grid of rho, k, cost and phi.
    Sweep(SweepArgs),
    /// Runs the built-in identity and bound checks.
    Verify,
}

/// Instance parameters shared by most subcommands.
#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    /// Arrival rate lambda [customers per unit time]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Service rate mu [1 / time unit; default 1]
    #[arg(long)]
    pub mu: Option<f64>,
    /// Variance parameter K = mu^2 E[S^2] [dimensionless, >= 1]
    #[arg(long)]
    pub k: Option<f64>,
    /// Premium fee C [units of expected waiting time; default 0]
    #[arg(long)]
    pub cost: Option<f64>,
    /// Config file of `key = value` lines; flags override file values [file path]
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Fraction of customers in the premium class [probability in 0..=1]
    #[arg(long)]
    pub phi: Option<f64>,
    /// Scheduling discipline: pr (preemptive-resume) or np (non-preemptive) [default pr]
    #[arg(long)]
    pub discipline: Option<String>,
    /// Output format
    #[arg(long, value_enum, default_value = "human")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct EqArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Scheduling discipline: pr or np [default pr]
    #[arg(long)]
    pub discipline: Option<String>,
    /// Output format
    #[arg(long, value_enum, default_value = "human")]
    pub format: Format,
}

#[derive(Args, Debug)]
#[command(args_conflicts_with_subcommands = true)]
pub struct PoaArgs {
    #[command(subcommand)]
    pub sweep: Option<PoaCommand>,
    /// Traffic load rho = lambda / mu [dimensionless, in (0, 1)]
    #[arg(long)]
    pub rho: Option<f64>,
    /// Variance parameter K [dimensionless, >= 1]
    #[arg(long)]
    pub k: Option<f64>,
    /// Also report the price of anarchy at this fee [units of expected wait, mu = 1 unless --mu]
    #[arg(long)]
    pub cost: Option<f64>,
    /// Service rate used with --cost [1 / time unit; default 1]
    #[arg(long)]
    pub mu: Option<f64>,
    /// Output format
    #[arg(long, value_enum, default_value = "human")]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum PoaCommand {
    /// Worst-case price of anarchy over a rho x K grid.
    Sweep(PoaSweepArgs),
}

#[derive(Args, Debug)]
pub struct PoaSweepArgs {
    /// Load axis start:stop:count[:log] [dimensionless, in (0, 1)]
    #[arg(long)]
    pub rho: Range,
    /// Variance-parameter axis start:stop:count[:log] [dimensionless, >= 1]
    #[arg(long)]
    pub k: Range,
    /// Output file (CSV or JSON) [file path; stdout when omitted]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format of the table
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Fraction of customers in the premium class [probability in 0..=1]
    #[arg(long)]
    pub phi: Option<f64>,
    /// Scheduling discipline: pr or np [default pr]
    #[arg(long)]
    pub discipline: Option<String>,
    /// Master random seed [64-bit integer; required]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of simulated arrivals [customers; default 1000000]
    #[arg(long)]
    pub arrivals: Option<u64>,
    /// Arrivals discarded before measuring [customers; default arrivals / 10]
    #[arg(long)]
    pub warmup: Option<u64>,
    /// Batches for the batch-means interval [count >= 10; default 20]
    #[arg(long)]
    pub batches: Option<usize>,
    /// Service family: auto, gamma, hyperexp, det or exp [default auto]
    #[arg(long)]
    pub family: Option<String>,
    /// Independent replications with seeds seed, seed+1, ... [count; default 1]
    #[arg(long)]
    pub replications: Option<u64>,
    /// Write the result rows as CSV/JSON to this file [file path]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Format of the printed report (human) or of stdout rows (csv, json)
    #[arg(long, value_enum, default_value = "human")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct DynArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Initial premium fraction [probability in 0..=1]
    #[arg(long)]
    pub phi0: Option<f64>,
    /// Inertia step size [fraction in (0, 1]; default 0.1]
    #[arg(long)]
    pub step: Option<f64>,
    /// Convergence tolerance on |phi_t+1 - phi_t| [default 1e-8]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Maximum iterations [count; default 100000]
    #[arg(long)]
    pub iters: Option<usize>,
    /// Scheduling discipline: pr or np [default pr]
    #[arg(long)]
    pub discipline: Option<String>,
    /// Also probe every equilibrium with perturbations of this size [in (0, 0.1]]
    #[arg(long)]
    pub probe: Option<f64>,
    /// Write the trajectory (iteration, phi) as CSV/JSON to this file [file path]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Format of the printed report or of stdout rows
    #[arg(long, value_enum, default_value = "human")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Axis name=start:stop:count[:log] with name one of rho, k, cost, phi [units as the fixed flags; repeatable]
    #[arg(long = "axis", required = true)]
    pub axes: Vec<Axis>,
    /// Fixed load when rho is not swept [dimensionless, in (0, 1)]
    #[arg(long)]
    pub rho: Option<f64>,
    /// Fixed variance parameter when k is not swept [>= 1]
    #[arg(long)]
    pub k: Option<f64>,
    /// Fixed premium fee when cost is not swept [units of expected wait; default 0]
    #[arg(long)]
    pub cost: Option<f64>,
    /// Fixed premium fraction when phi is not swept [default 0]
    #[arg(long)]
    pub phi: Option<f64>,
    /// Service rate [1 / time unit; default 1]
    #[arg(long)]
    pub mu: Option<f64>,
    /// Scheduling discipline: pr or np [default pr]
    #[arg(long)]
    pub discipline: Option<String>,
    /// Output file [file path; stdout when omitted]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

/// Config-file values, consulted when a flag is absent.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Ok(ConfigFile {
            values: parse_key_values(&text)?,
        })
    }

    /// Flag value if present, else the config value under `key`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| invalid(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn params(&self, args: &ParamArgs) -> CliResult<ModelParams> {
        let file = ParamOverrides {
            lambda: self.pick(None, "lambda")?,
            mu: self.pick(None, "mu")?,
            k_var: self.pick(None, "k")?,
            cost: self.pick(None, "cost")?,
        };
        let flags = ParamOverrides {
            lambda: args.lambda,
            mu: args.mu,
            k_var: args.k,
            cost: args.cost,
        };
        let merged = file.merge(flags);
        if merged.lambda.is_none() {
            return Err(invalid("--lambda is required"));
        }
        if merged.k_var.is_none() {
            return Err(invalid("--k is required"));
        }
        Ok(merged.resolve()?)
    }

    pub fn discipline(&self, flag: Option<String>) -> CliResult<Discipline> {
        match self.pick(flag, "discipline")? {
            None => Ok(Discipline::PreemptiveResume),
            Some(s) => s.parse().map_err(invalid),
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Analytic(a) => commands::analytic(a),
        Command::Eq(a) => commands::equilibrium(a),
        Command::Poa(a) => commands::poa(a),
        Command::Sim(a) => commands::simulate(a),
        Command::Dyn(a) => commands::dynamics(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Verify => commands::verify(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
