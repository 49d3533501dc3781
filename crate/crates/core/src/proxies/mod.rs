//! Minimum-mutual-information proxies for the three fidelity criteria, plus
//! the expected-distortion rate-distortion function.
//!
//! Each proxy is computed through its ball-mass characterization: the
//! minimal mutual information equals the infimum over `P_Y` of an
//! expectation of `-log P_Y(B_d(X))` (guaranteed distortion) or of a binary
//! relative entropy `d(alpha(X) || P_Y(B_d(X)))` (excess criteria). The
//! solvers alternate between the optimal tilted kernel for the current
//! `P_Y` and the output marginal of that kernel, which never increases the
//! objective.

mod alpha;
mod expected;
mod kernel;
mod oracle;
mod solve;
mod verify;

use serde::Serialize;
use thiserror::Error;

use crate::infotheory::InfoValue;
use crate::model::{AlphaProfile, ConditionalKernel, Feasibility, ReproductionDistribution};

pub use alpha::{alpha_threshold, optimal_alpha};
pub use expected::{csiszar_residual, solve_r_expected, ExpectedSolution};
pub use kernel::{construct_kernel_cond, construct_kernel_guaranteed};
pub use oracle::{oracle_grid_min, ORACLE_MAX_N};
pub use solve::{solve_r_cond_excess, solve_r_excess, solve_r_guaranteed};
pub use verify::verify_optimality;

#[derive(Debug, Error)]
pub enum ProxyError {
    #[error("constraint set is empty; letters with empty balls: {:?}", .0.empty_balls)]
    Infeasible(Feasibility),
    #[error("no convergence after {} iterations (objective change / residual above tolerance)", .0.iterations)]
    NotConverged(Box<ProxySolution>),
    #[error("source letter {0} has zero reproduction mass inside its ball")]
    ZeroBallMass(usize),
    #[error("source letter {0} has zero reproduction mass outside its ball")]
    ZeroComplementMass(usize),
    #[error("success budget 1 - {eps} cannot be met")]
    InfeasibleBudget { eps: f64 },
    #[error("distortion {d} is not above d_min = {d_min}")]
    DminViolation { d: f64, d_min: f64 },
    #[error("grid oracle supports at most {max} reproduction letters, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Fidelity criterion with its excess budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", content = "eps", rename_all = "kebab-case")]
pub enum Criterion {
    Guaranteed,
    /// Per-letter budgets `eps(x)` on the conditional excess probability.
    CondExcess(Vec<f64>),
    /// Budget on the excess probability averaged over the source.
    Excess(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stopping tolerance on the objective change and on the optimality
    /// residual, in nats.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep the objective value of every iterate.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            record_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Value of the threshold-rule alpha profile, reported next to the exact
/// excess-distortion optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRuleCheck {
    /// Best objective reached by iterating the threshold rule.
    pub value: InfoValue,
    /// Threshold `q` at that point.
    pub q: f64,
    /// The threshold rule stays above the optimum by more than the tolerance.
    pub mismatch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxySolution {
    pub criterion: Criterion,
    pub d: f64,
    pub value: InfoValue,
    pub py: ReproductionDistribution,
    pub kernel: ConditionalKernel,
    pub alpha: AlphaProfile,
    /// Budget multiplier for the excess criterion; `None` otherwise.
    pub lambda: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Objective (nats) of each iterate, when requested.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_rule: Option<ThresholdRuleCheck>,
}
