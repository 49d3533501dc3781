//! Optimality-condition residuals.

use crate::model::{AlphaProfile, BallTable, ConditionalKernel};

use super::alpha::optimal_alpha;
use super::{Criterion, ProxySolution};

/// Largest deviation `|ln(K(y|x) / P_Y(y)) - ln rhs(x, y)|` over supported
/// `(x, y)` with `K(y|x) > 0`, where `P_Y` is `marginal` and
/// `rhs = alpha(x) / P_Y(B) on the ball, (1 - alpha(x)) / P_Y(B^c) off it`.
/// Kernel mass where the right-hand side vanishes gives `+inf`.
///
/// Letters outside the support of `marginal` must satisfy
/// `sum_x px(x) rhs(x, y) <= 1`; the excess of its logarithm over zero is
/// folded into the maximum.
pub(crate) fn kernel_residual(
    px: &[f64],
    kernel: &ConditionalKernel,
    marginal: &[f64],
    ball: &BallTable,
    alpha: &AlphaProfile,
) -> f64 {
    let masses = ball.ball_masses(marginal);
    let mut worst: f64 = 0.0;
    for (x, row) in kernel.rows().iter().enumerate() {
        if px[x] <= 0.0 {
            continue;
        }
        let a = alpha.alpha[x];
        let inside = masses[x];
        let outside: f64 = marginal
            .iter()
            .zip(ball.row(x))
            .filter(|(_, &b)| !b)
            .map(|(&p, _)| p)
            .sum();
        for (y, &k) in row.iter().enumerate() {
            if k <= 0.0 {
                continue;
            }
            let rhs = if ball.contains(x, y) {
                if inside > 0.0 {
                    a / inside
                } else {
                    0.0
                }
            } else if outside > 0.0 {
                (1.0 - a) / outside
            } else {
                0.0
            };
            if rhs <= 0.0 || marginal[y] <= 0.0 {
                return f64::INFINITY;
            }
            let dev = ((k / marginal[y]).ln() - rhs.ln()).abs();
            worst = worst.max(dev);
        }
    }
    for y in (0..marginal.len()).filter(|&y| marginal[y] <= 0.0) {
        let mut gain = 0.0;
        for x in (0..px.len()).filter(|&x| px[x] > 0.0) {
            let a = alpha.alpha[x];
            let (weight, mass) = if ball.contains(x, y) {
                (a, masses[x])
            } else {
                (1.0 - a, 1.0 - masses[x])
            };
            if weight > 0.0 {
                gain += px[x] * weight / mass.max(0.0);
            }
        }
        worst = worst.max(gain.ln());
    }
    worst
}

/// Residual of the kernel optimality condition for `solution` (see the
/// module docs of [`crate::proxies`]), measured against the kernel's own
/// output marginal.
///
/// * guaranteed: `dP_{Y|X=x}/dP_Y = 1{y in B_d(x)} / P_Y(B_d(x))`;
/// * conditional excess: the two-part tilt with
///   `alpha(x) = max(1 - eps(x), P_Y(B_d(x)))`;
/// * excess: the two-part tilt with the solution's `alpha`, which must be
///   feasible and optimal for `P_Y`; constraint violations and the distance
///   to the optimal profile are folded into the returned maximum.
pub fn verify_optimality(solution: &ProxySolution, px: &[f64], ball: &BallTable) -> f64 {
    let kernel = &solution.kernel;
    let marginal = kernel.marginal(px);
    let masses = ball.ball_masses(&marginal);
    match &solution.criterion {
        Criterion::Guaranteed => {
            kernel_residual(px, kernel, &marginal, ball, &AlphaProfile::ones(px.len()))
        }
        Criterion::CondExcess(eps) => {
            let alpha = AlphaProfile {
                alpha: masses
                    .iter()
                    .zip(eps)
                    .map(|(&b, &e)| (1.0 - e).max(b))
                    .collect(),
                q: 0.0,
            };
            kernel_residual(px, kernel, &marginal, ball, &alpha)
        }
        Criterion::Excess(eps) => {
            let alpha = &solution.alpha;
            let mut worst = kernel_residual(px, kernel, &marginal, ball, alpha);
            for (&a, &b) in alpha.alpha.iter().zip(&masses) {
                worst = worst.max(b - a);
            }
            worst = worst.max(1.0 - eps - alpha.mean(px));
            match optimal_alpha(&masses, px, *eps) {
                Ok((best, _)) => {
                    for (&a, &b) in alpha.alpha.iter().zip(&best.alpha) {
                        worst = worst.max((a - b).abs());
                    }
                }
                Err(_) => return f64::INFINITY,
            }
            worst
        }
    }
}
