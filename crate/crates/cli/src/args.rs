use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rdproxy",
    version,
    about = "Information proxies for single-shot lossy compression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one proxy at a single (d, eps) point.
    Compute(RunArgs),
    /// Exhaustive minimum quantizer entropy (an upper bound in excess mode).
    Exact(RunArgs),
    /// Proxy, quantizer entropy and sandwich verdicts over a (d, eps) grid.
    Sweep(RunArgs),
    /// Monte Carlo run of the random-codebook encoder at the proxy optimum.
    Simulate(RunArgs),
    /// Run the property suite on an instance.
    Verify(RunArgs),
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Compute(a)
            | Command::Exact(a)
            | Command::Sweep(a)
            | Command::Simulate(a)
            | Command::Verify(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Guaranteed,
    CondExcess,
    Excess,
    Expected,
}

impl ModeArg {
    pub fn name(self) -> &'static str {
        match self {
            ModeArg::Guaranteed => "guaranteed",
            ModeArg::CondExcess => "cond-excess",
            ModeArg::Excess => "excess",
            ModeArg::Expected => "expected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Bits,
    Nats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Instance JSON file: {"px": [...], "dist": [[...], ...]}.
    pub instance: PathBuf,

    #[arg(long, value_enum, default_value_t = ModeArg::Guaranteed)]
    pub mode: ModeArg,

    /// Distortion threshold, or a grid `start:stop:step`. `verify` defaults to
    /// every feasible distortion level of the instance.
    #[arg(long)]
    pub d: Option<String>,

    /// Excess budget (constant over source letters), or a grid.
    #[arg(long, default_value = "0.1")]
    pub eps: String,

    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,

    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,

    #[arg(long, default_value_t = 64)]
    pub codebook_len: usize,

    #[arg(long, env = "RDPROXY_SEED", default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = UnitsArg::Bits)]
    pub units: UnitsArg,

    /// Write output here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}
