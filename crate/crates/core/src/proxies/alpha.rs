//! Success-probability profiles for the averaged excess-distortion budget.

use crate::model::{AlphaProfile, BallTable};

use super::ProxyError;

const BUDGET_SLACK: f64 = 1e-15;

/// Threshold rule: letters whose ball mass `B(x)` reaches the threshold `q`
/// get `alpha(x) = 1`, the rest keep `alpha(x) = B(x)`. `q` is the largest
/// candidate in `{B(x)} ∪ {0, 1}` for which the resulting mean still meets
/// `1 - eps`.
pub fn alpha_threshold(
    py: &[f64],
    ball: &BallTable,
    px: &[f64],
    eps: f64,
) -> Result<AlphaProfile, ProxyError> {
    let masses = ball.ball_masses(py);
    alpha_threshold_from_masses(&masses, px, eps)
}

pub(crate) fn alpha_threshold_from_masses(
    masses: &[f64],
    px: &[f64],
    eps: f64,
) -> Result<AlphaProfile, ProxyError> {
    let target = 1.0 - eps;
    let mean_at = |q: f64| -> f64 {
        masses
            .iter()
            .zip(px)
            .map(|(&b, &p)| if b >= q { p } else { p * b })
            .sum()
    };
    let mut candidates: Vec<f64> = masses.to_vec();
    candidates.extend([0.0, 1.0]);
    candidates.sort_by(|a, b| b.total_cmp(a));
    candidates.dedup();

    // A zero budget makes every letter typical; report the bottom threshold.
    let q = if eps <= 0.0 {
        0.0
    } else {
        candidates
            .iter()
            .copied()
            .find(|&q| mean_at(q) + BUDGET_SLACK >= target)
            .ok_or(ProxyError::InfeasibleBudget { eps })?
    };

    let mut alpha: Vec<f64> = masses
        .iter()
        .map(|&b| if b >= q { 1.0 } else { b })
        .collect();

    // Boundary completion: raise the atypical letters closest to the
    // threshold until the budget is met with equality.
    let mut deficit = target - alpha.iter().zip(px).map(|(a, p)| a * p).sum::<f64>();
    if deficit > BUDGET_SLACK {
        let mut order: Vec<usize> = (0..masses.len()).filter(|&x| alpha[x] < 1.0).collect();
        order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
        for x in order {
            if deficit <= 0.0 {
                break;
            }
            let room = (1.0 - alpha[x]) * px[x];
            let take = room.min(deficit);
            alpha[x] += take / px[x];
            deficit -= take;
        }
        if deficit > BUDGET_SLACK {
            return Err(ProxyError::InfeasibleBudget { eps });
        }
    }
    Ok(AlphaProfile { alpha, q })
}

/// Success probability minimizing `d(alpha || b) - lambda * alpha` over
/// `alpha >= b`: the logit of `b` shifted by `lambda`.
#[inline]
pub(crate) fn tilted_alpha(b: f64, lambda: f64) -> f64 {
    if b <= 0.0 {
        0.0
    } else if b >= 1.0 {
        1.0
    } else {
        b / (b + (1.0 - b) * (-lambda).exp())
    }
}

/// Exact minimizer of `E[d(alpha(X) || B(X))]` subject to `alpha >= B` and
/// `E[alpha(X)] >= 1 - eps`, for fixed ball masses.
///
/// The objective is separable and convex, so the optimum is a common logit
/// shift `lambda >= 0` chosen to meet the budget with equality; `lambda` is
/// returned alongside the profile (`+inf` when the budget forces
/// `alpha = 1` on every letter with positive ball mass).
pub fn optimal_alpha(
    masses: &[f64],
    px: &[f64],
    eps: f64,
) -> Result<(AlphaProfile, f64), ProxyError> {
    let target = 1.0 - eps;
    let mean = |lambda: f64| -> f64 {
        masses
            .iter()
            .zip(px)
            .map(|(&b, &p)| p * tilted_alpha(b, lambda))
            .sum()
    };
    let profile = |lambda: f64| AlphaProfile {
        alpha: masses.iter().map(|&b| tilted_alpha(b, lambda)).collect(),
        q: 0.0,
    };

    if mean(0.0) + BUDGET_SLACK >= target {
        return Ok((
            AlphaProfile {
                alpha: masses.to_vec(),
                q: 0.0,
            },
            0.0,
        ));
    }
    let cap: f64 = masses
        .iter()
        .zip(px)
        .filter(|(&b, _)| b > 0.0)
        .map(|(_, &p)| p)
        .sum();
    if target > cap + BUDGET_SLACK {
        return Err(ProxyError::InfeasibleBudget { eps });
    }
    let saturated = || AlphaProfile {
        alpha: masses
            .iter()
            .map(|&b| if b > 0.0 { 1.0 } else { 0.0 })
            .collect(),
        q: 0.0,
    };
    if target >= cap - BUDGET_SLACK {
        return Ok((saturated(), f64::INFINITY));
    }

    let mut hi = 1.0;
    while mean(hi) < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Ok((saturated(), f64::INFINITY));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `hi` always satisfies the budget.
    Ok((profile(hi), hi))
}
