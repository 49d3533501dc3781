//! Alternating minimization for the guaranteed, conditional-excess and
//! excess-distortion proxies.

use crate::infotheory::{binary_divergence_nats, InfoValue};
use crate::model::{
    ball_table, check_feasibility, AlphaProfile, BallTable, ConditionalKernel, Feasibility,
    InstanceSpec, Mode, ReproductionDistribution,
};

use super::alpha::{alpha_threshold_from_masses, optimal_alpha};
use super::kernel::construct_kernel_cond;
use super::verify::kernel_residual;
use super::{Criterion, ProxyError, ProxySolution, SolverOptions, ThresholdRuleCheck};

/// Reproduction letters with less mass than this are removed from the support.
pub(crate) const SUPPORT_FLOOR: f64 = 1e-14;

/// Minimal mutual information under guaranteed distortion `d`, computed as
/// `inf_{P_Y} E[-log P_Y(B_d(X))]`.
pub fn solve_r_guaranteed(
    instance: &InstanceSpec,
    d: f64,
    opts: &SolverOptions,
) -> Result<ProxySolution, ProxyError> {
    let ball = ball_table(instance, d);
    let feas = check_feasibility(&ball, instance.px(), Mode::Guaranteed, 0.0);
    if !feas.feasible {
        return Err(ProxyError::Infeasible(feas));
    }
    let m = instance.m();
    let rule = |_: &[f64]| Ok((AlphaProfile::ones(m), None));
    alternate(instance, &ball, Criterion::Guaranteed, opts, rule)
}

/// Minimal mutual information when each source letter `x` may exceed
/// distortion `d` with probability at most `eps_profile[x]`.
pub fn solve_r_cond_excess(
    instance: &InstanceSpec,
    d: f64,
    eps_profile: &[f64],
    opts: &SolverOptions,
) -> Result<ProxySolution, ProxyError> {
    if eps_profile.len() != instance.m() {
        return Err(ProxyError::InvalidArgument(format!(
            "eps profile has {} entries, expected {}",
            eps_profile.len(),
            instance.m()
        )));
    }
    if eps_profile.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(ProxyError::InvalidArgument(
            "eps profile entries must lie in [0, 1]".into(),
        ));
    }
    let ball = ball_table(instance, d);
    let feas = check_feasibility(&ball, instance.px(), Mode::CondExcess, 0.0);
    let blocked: Vec<usize> = feas
        .empty_balls
        .iter()
        .copied()
        .filter(|&x| eps_profile[x] < 1.0)
        .collect();
    if !blocked.is_empty() {
        let uncovered_mass = blocked.iter().map(|&x| instance.px()[x]).sum();
        return Err(ProxyError::Infeasible(Feasibility {
            feasible: false,
            empty_balls: blocked,
            uncovered_mass,
        }));
    }
    let rule = |masses: &[f64]| {
        let alpha = masses
            .iter()
            .zip(eps_profile)
            .map(|(&b, &e)| (1.0 - e).max(b))
            .collect();
        Ok((AlphaProfile { alpha, q: 0.0 }, None))
    };
    alternate(
        instance,
        &ball,
        Criterion::CondExcess(eps_profile.to_vec()),
        opts,
        rule,
    )
}

/// Minimal mutual information when the distortion may exceed `d` with
/// probability at most `eps`, averaged over the source.
///
/// The success profile is re-optimized exactly for every iterate (see
/// [`optimal_alpha`]). The threshold-rule profile is iterated separately and
/// reported in [`ProxySolution::threshold_rule`].
pub fn solve_r_excess(
    instance: &InstanceSpec,
    d: f64,
    eps: f64,
    opts: &SolverOptions,
) -> Result<ProxySolution, ProxyError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(ProxyError::InvalidArgument(format!(
            "eps = {eps} outside [0, 1]"
        )));
    }
    let ball = ball_table(instance, d);
    let px = instance.px();
    let feas = check_feasibility(&ball, px, Mode::Excess, eps);
    if !feas.feasible {
        return Err(ProxyError::Infeasible(feas));
    }
    let rule = |masses: &[f64]| {
        let (alpha, lambda) = optimal_alpha(masses, px, eps)?;
        Ok((alpha, Some(lambda)))
    };
    let outcome = alternate(instance, &ball, Criterion::Excess(eps), opts, rule);
    let attach = |mut sol: ProxySolution| {
        let masses = ball.ball_masses(sol.py.as_slice());
        if let Ok(rule_at_opt) = alpha_threshold_from_masses(&masses, px, eps) {
            sol.alpha.q = rule_at_opt.q;
        }
        let check = threshold_rule_fixed_point(px, &ball, eps, opts);
        sol.threshold_rule = check.map(|(value, q)| ThresholdRuleCheck {
            value: InfoValue::from_nats(value),
            q,
            mismatch: value > sol.value.nats() + opts.tol,
        });
        sol
    };
    match outcome {
        Ok(sol) => Ok(attach(sol)),
        Err(ProxyError::NotConverged(sol)) => Err(ProxyError::NotConverged(Box::new(attach(*sol)))),
        Err(e) => Err(e),
    }
}

/// Uniform over the reproduction letters that lie in at least one ball.
fn initial_py(ball: &BallTable) -> Vec<f64> {
    let n = ball.n();
    let used: Vec<bool> = (0..n)
        .map(|y| (0..ball.m()).any(|x| ball.contains(x, y)))
        .collect();
    let count = used.iter().filter(|&&u| u).count();
    if count == 0 {
        return vec![1.0 / n as f64; n];
    }
    used.iter()
        .map(|&u| if u { 1.0 / count as f64 } else { 0.0 })
        .collect()
}

fn objective(px: &[f64], alpha: &AlphaProfile, masses: &[f64]) -> f64 {
    px.iter()
        .zip(&alpha.alpha)
        .zip(masses)
        .map(|((&p, &a), &b)| p * binary_divergence_nats(a, b))
        .sum()
}

/// Zeroes letters below [`SUPPORT_FLOOR`]; returns whether anything changed.
fn clamp_support(py: &mut [f64]) -> bool {
    let mut changed = false;
    for p in py.iter_mut() {
        if *p > 0.0 && *p < SUPPORT_FLOOR {
            *p = 0.0;
            changed = true;
        }
    }
    if changed {
        let s: f64 = py.iter().sum();
        py.iter_mut().for_each(|p| *p /= s);
    }
    changed
}

type Rule<'a> = dyn Fn(&[f64]) -> Result<(AlphaProfile, Option<f64>), ProxyError> + 'a;

/// First iteration at which small, shrinking letters are tentatively dropped.
pub(crate) const PRUNE_START: usize = 256;
/// Letters below this mass are candidates for dropping.
pub(crate) const PRUNE_MASS: f64 = 1e-3;

struct Step {
    kernel: ConditionalKernel,
    marginal: Vec<f64>,
    alpha: AlphaProfile,
    lambda: Option<f64>,
    value: f64,
    residual: f64,
}

struct Run {
    step: Step,
    iterations: usize,
    converged: bool,
}

fn alternate<'a>(
    instance: &InstanceSpec,
    ball: &BallTable,
    criterion: Criterion,
    opts: &SolverOptions,
    rule: impl Fn(&[f64]) -> Result<(AlphaProfile, Option<f64>), ProxyError> + 'a,
) -> Result<ProxySolution, ProxyError> {
    let rule: &Rule<'a> = &rule;
    let mut trace = Vec::new();
    let run = iterate(
        instance.px(),
        ball,
        rule,
        initial_py(ball),
        opts.max_iter.max(1),
        opts.tol,
        opts.record_trace.then_some(&mut trace),
    )?;
    let Step {
        kernel,
        marginal,
        alpha,
        lambda,
        value,
        residual,
    } = run.step;
    let solution = ProxySolution {
        criterion,
        d: ball.d(),
        value: InfoValue::from_nats(value),
        py: ReproductionDistribution::from_normalized(marginal),
        kernel,
        alpha,
        lambda,
        iterations: run.iterations,
        residual,
        converged: run.converged,
        trace,
        threshold_rule: None,
    };
    if run.converged {
        Ok(solution)
    } else {
        Err(ProxyError::NotConverged(Box::new(solution)))
    }
}

/// Runs the kernel/marginal alternation from `py` for at most `budget`
/// iterations. Convergence needs both a small objective change and a small
/// optimality residual at the marginal.
///
/// When letters shrink slowly towards zero (a degenerate optimum, where the
/// plain iteration converges only sublinearly), the run periodically retries
/// with those letters removed. The retry is accepted only if it converges
/// with a small residual, which includes the condition on removed letters.
fn iterate(
    px: &[f64],
    ball: &BallTable,
    rule: &Rule<'_>,
    mut py: Vec<f64>,
    budget: usize,
    tol: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<Run, ProxyError> {
    let masses = ball.ball_masses(&py);
    let mut alpha = rule(&masses)?.0;
    let mut value = objective(px, &alpha, &masses);
    if let Some(t) = trace.as_deref_mut() {
        t.push(value);
    }
    let mut checkpoint = PRUNE_START;
    let mut snapshot = py.clone();
    // `own` counts this run's iterations against `budget`; `iteration` also
    // includes the work of rejected retries.
    let mut own = 0;
    let mut iteration = 0;
    loop {
        own += 1;
        iteration += 1;
        let kernel = construct_kernel_cond(&py, ball, &alpha)?;
        let marginal = kernel.marginal(px);
        let marginal_masses = ball.ball_masses(&marginal);
        let (marginal_alpha, lambda) = rule(&marginal_masses)?;
        let marginal_value = objective(px, &marginal_alpha, &marginal_masses);
        let residual = kernel_residual(px, &kernel, &marginal, ball, &marginal_alpha);

        let change = value - marginal_value;
        debug_assert!(
            change >= -1e-12 * value.abs().max(1.0),
            "objective increased by {} at iteration {iteration}",
            -change
        );
        let converged = change.abs() < tol && residual <= tol;
        if converged || own >= budget {
            return Ok(Run {
                step: Step {
                    kernel,
                    marginal,
                    alpha: marginal_alpha,
                    lambda,
                    value: marginal_value,
                    residual,
                },
                iterations: iteration,
                converged,
            });
        }

        py = marginal;
        if clamp_support(&mut py) {
            let masses = ball.ball_masses(&py);
            alpha = rule(&masses)?.0;
            value = objective(px, &alpha, &masses);
        } else {
            alpha = marginal_alpha;
            value = marginal_value;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(value);
        }

        if own >= checkpoint {
            let shrinking: Vec<usize> = (0..py.len())
                .filter(|&y| py[y] > 0.0 && py[y] < PRUNE_MASS && py[y] < snapshot[y])
                .collect();
            if !shrinking.is_empty() {
                let mut pruned = py.clone();
                for &y in &shrinking {
                    pruned[y] = 0.0;
                }
                let total: f64 = pruned.iter().sum();
                pruned.iter_mut().for_each(|p| *p /= total);
                let sub_budget = checkpoint.min(budget - own).max(1);
                if let Ok(sub) = iterate(px, ball, rule, pruned, sub_budget, tol, None) {
                    iteration += sub.iterations;
                    if sub.converged && sub.step.value <= value + tol {
                        if let Some(t) = trace.as_deref_mut() {
                            t.push(sub.step.value.min(value));
                        }
                        return Ok(Run {
                            iterations: iteration,
                            ..sub
                        });
                    }
                }
            }
            snapshot = py.clone();
            checkpoint *= 2;
        }
    }
}

/// Iterates the threshold-rule profile with the tilted-kernel update and
/// returns the best objective seen (nats) with its threshold.
fn threshold_rule_fixed_point(
    px: &[f64],
    ball: &BallTable,
    eps: f64,
    opts: &SolverOptions,
) -> Option<(f64, f64)> {
    let mut py = initial_py(ball);
    let mut best: Option<(f64, f64)> = None;
    let mut previous = f64::INFINITY;
    for _ in 0..opts.max_iter.max(1) {
        let masses = ball.ball_masses(&py);
        let alpha = alpha_threshold_from_masses(&masses, px, eps).ok()?;
        let value = objective(px, &alpha, &masses);
        if best.is_none_or(|(b, _)| value < b) {
            best = Some((value, alpha.q));
        }
        if (previous - value).abs() < opts.tol {
            break;
        }
        previous = value;
        let kernel = construct_kernel_cond(&py, ball, &alpha).ok()?;
        py = kernel.marginal(px);
        clamp_support(&mut py);
    }
    best
}
