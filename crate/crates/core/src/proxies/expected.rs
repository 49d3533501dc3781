//! Rate-distortion function under an expected-distortion constraint,
//! computed by Blahut–Arimoto iterations with a bisection on the slope.

use serde::Serialize;

use crate::infotheory::{mutual_information, tilted_information, InfoValue};
use crate::model::{ConditionalKernel, InstanceSpec, ReproductionDistribution};

use super::solve::{PRUNE_MASS, PRUNE_START};
use super::{ProxyError, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedSolution {
    pub d: f64,
    pub value: InfoValue,
    pub py: ReproductionDistribution,
    pub kernel: ConditionalKernel,
    /// Expected distortion of `kernel`.
    pub distortion: f64,
    /// Slope parameter at which the Blahut–Arimoto solution meets `d`.
    pub slope: f64,
    /// `-R'(d)` estimated by a two-sided secant on the (distortion, rate) curve.
    pub lambda_star: f64,
    pub iterations: usize,
    /// Largest deviation from the tilted-information kernel condition at
    /// `lambda_star`, in nats.
    pub residual: f64,
    pub converged: bool,
}

struct BaPoint {
    kernel: Vec<Vec<f64>>,
    distortion: f64,
    rate: f64,
    iterations: usize,
    converged: bool,
}

/// Kernel rows `K(y|x) ∝ q(y) exp(-s dist(x, y))`, computed with a max shift.
fn ba_kernel(dist: &[Vec<f64>], q: &[f64], s: f64) -> Vec<Vec<f64>> {
    dist.iter()
        .map(|d_row| {
            let logs: Vec<f64> = q
                .iter()
                .zip(d_row)
                .map(|(&p, &dv)| {
                    if p > 0.0 {
                        p.ln() - s * dv
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = logs.iter().map(|l| (l - shift).exp()).sum();
            logs.iter().map(|l| (l - shift).exp() / total).collect()
        })
        .collect()
}

/// `max_y ln c_y` with
/// `c_y = sum_x px(x) exp(-s dist(x, y)) / sum_y' q(y') exp(-s dist(x, y'))`.
/// Always nonnegative; it bounds the distance of the current iterate's
/// Lagrangian value from the optimum and vanishes exactly at fixed points
/// satisfying the optimality conditions.
fn ba_gap(px: &[f64], dist: &[Vec<f64>], q: &[f64], s: f64) -> f64 {
    let mut c = vec![0.0; q.len()];
    for (&p, d_row) in px.iter().zip(dist) {
        let dmin = d_row.iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = d_row.iter().map(|&dv| (-s * (dv - dmin)).exp()).collect();
        let z: f64 = q.iter().zip(&weights).map(|(&w, &e)| w * e).sum();
        for (cy, &e) in c.iter_mut().zip(&weights) {
            *cy += p * e / z;
        }
    }
    c.iter().map(|v| v.ln()).fold(f64::NEG_INFINITY, f64::max)
}

/// Iterates the Blahut–Arimoto map from `q`; letters that shrink slowly
/// towards zero are periodically dropped, and the reduced run is accepted
/// only if the dropped letters satisfy the optimality condition.
fn ba_iterate(
    px: &[f64],
    dist: &[Vec<f64>],
    s: f64,
    mut q: Vec<f64>,
    tol: f64,
    budget: usize,
) -> (Vec<f64>, usize, bool) {
    let n = q.len();
    let mut checkpoint = PRUNE_START;
    let mut snapshot = q.clone();
    let mut own = 0;
    let mut iterations = 0;
    while own < budget {
        own += 1;
        iterations += 1;
        let kernel = ba_kernel(dist, &q, s);
        let mut next = vec![0.0; n];
        for (row, &p) in kernel.iter().zip(px) {
            for (o, &k) in next.iter_mut().zip(row) {
                *o += p * k;
            }
        }
        for v in next.iter_mut() {
            if *v < super::solve::SUPPORT_FLOOR {
                *v = 0.0;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        q = next;
        if ba_gap(px, dist, &q, s) <= tol {
            return (q, iterations, true);
        }
        if own >= checkpoint {
            let shrinking: Vec<usize> = (0..n)
                .filter(|&y| q[y] > 0.0 && q[y] < PRUNE_MASS && q[y] < snapshot[y])
                .collect();
            if !shrinking.is_empty() {
                let mut pruned = q.clone();
                for &y in &shrinking {
                    pruned[y] = 0.0;
                }
                let total: f64 = pruned.iter().sum();
                pruned.iter_mut().for_each(|v| *v /= total);
                let sub_budget = checkpoint.min(budget - own).max(1);
                let (sub, used, ok) = ba_iterate(px, dist, s, pruned, tol, sub_budget);
                iterations += used;
                if ok {
                    return (sub, iterations, true);
                }
            }
            snapshot = q.clone();
            checkpoint *= 2;
        }
    }
    (q, iterations, false)
}

/// Fixed point of the Blahut–Arimoto map at slope `s` (nats per unit of
/// distortion), started from the uniform distribution.
fn blahut_arimoto(px: &[f64], dist: &[Vec<f64>], s: f64, tol: f64, max_iter: usize) -> BaPoint {
    let n = dist[0].len();
    let (q, iterations, converged) =
        ba_iterate(px, dist, s, vec![1.0 / n as f64; n], tol, max_iter);
    let k = ConditionalKernel::from_rows_unchecked(ba_kernel(dist, &q, s));
    let distortion = k
        .rows()
        .iter()
        .zip(px)
        .zip(dist)
        .map(|((row, &p), d_row)| p * row.iter().zip(d_row).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    let rate = mutual_information(px, &k).nats();
    BaPoint {
        kernel: k.rows().to_vec(),
        distortion,
        rate,
        iterations,
        converged,
    }
}

/// `R_X(d)`: minimal mutual information subject to `E[dist(X, Y)] <= d`.
///
/// Requires `d > d_min = E[min_y dist(X, y)]`.
pub fn solve_r_expected(
    instance: &InstanceSpec,
    d: f64,
    opts: &SolverOptions,
) -> Result<ExpectedSolution, ProxyError> {
    let px = instance.px();
    let dist = instance.dist();
    let n = instance.n();
    let d_min: f64 = px
        .iter()
        .zip(dist)
        .map(|(&p, row)| p * row.iter().copied().fold(f64::INFINITY, f64::min))
        .sum();
    if d <= d_min {
        return Err(ProxyError::DminViolation { d, d_min });
    }
    let column_cost = |y: usize| -> f64 { px.iter().zip(dist).map(|(&p, r)| p * r[y]).sum() };
    let (best_y, d_max) = (0..n)
        .map(|y| (y, column_cost(y)))
        .fold(
            (0, f64::INFINITY),
            |acc, c| if c.1 < acc.1 { c } else { acc },
        );

    if d >= d_max {
        let py = ReproductionDistribution::point_mass(n, best_y);
        let kernel = ConditionalKernel::deterministic(&vec![best_y; px.len()], n);
        return Ok(ExpectedSolution {
            d,
            value: InfoValue::ZERO,
            residual: csiszar_residual(px, dist, &kernel, 0.0, d),
            py,
            kernel,
            distortion: d_max,
            slope: 0.0,
            lambda_star: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let inner_tol = (opts.tol * 1e-2).max(1e-15);
    let run = |s: f64| blahut_arimoto(px, dist, s, inner_tol, opts.max_iter);
    let mut iterations = 0;
    let mut converged = true;
    let mut track = |p: &BaPoint| {
        iterations += p.iterations;
        converged &= p.converged;
    };

    // D(s) decreases from d_max-like values to d_min as s grows.
    let mut lo_s = 0.0;
    let mut hi_s = 1.0;
    let mut hi = run(hi_s);
    track(&hi);
    while hi.distortion > d {
        lo_s = hi_s;
        hi_s *= 2.0;
        if hi_s > 1e8 {
            return Err(ProxyError::DminViolation { d, d_min });
        }
        hi = run(hi_s);
        track(&hi);
    }
    let mut lo = run(lo_s);
    track(&lo);
    for _ in 0..200 {
        if hi_s - lo_s <= 1e-13 * hi_s.max(1.0) || (hi.distortion - d).abs() < 1e-14 {
            break;
        }
        let mid_s = 0.5 * (lo_s + hi_s);
        let mid = run(mid_s);
        track(&mid);
        if mid.distortion > d {
            lo_s = mid_s;
            lo = mid;
        } else {
            hi_s = mid_s;
            hi = mid;
        }
    }

    // Time-share the bracketing solutions so the distortion is exactly d
    // (covers linear stretches of R(d), where D(s) jumps).
    let (kernel_rows, value, slope) =
        if (hi.distortion - d).abs() < 1e-12 || lo.distortion <= hi.distortion {
            (hi.kernel.clone(), hi.rate, hi_s)
        } else {
            let theta = ((d - hi.distortion) / (lo.distortion - hi.distortion)).clamp(0.0, 1.0);
            let rows = lo
                .kernel
                .iter()
                .zip(&hi.kernel)
                .map(|(a, b)| {
                    a.iter()
                        .zip(b)
                        .map(|(u, v)| theta * u + (1.0 - theta) * v)
                        .collect()
                })
                .collect();
            (
                rows,
                theta * lo.rate + (1.0 - theta) * hi.rate,
                0.5 * (lo_s + hi_s),
            )
        };
    let kernel = ConditionalKernel::from_rows_unchecked(kernel_rows);
    let py = kernel.marginal(px);
    let distortion = kernel
        .rows()
        .iter()
        .zip(px)
        .zip(dist)
        .map(|((row, &p), d_row)| p * row.iter().zip(d_row).map(|(a, b)| a * b).sum::<f64>())
        .sum();

    let delta = 1e-4 * slope.max(1e-3);
    let plus = run(slope + delta);
    let minus = run((slope - delta).max(0.0));
    track(&plus);
    track(&minus);
    let lambda_star = if (minus.distortion - plus.distortion).abs() > 0.0 {
        (plus.rate - minus.rate) / (minus.distortion - plus.distortion)
    } else {
        slope
    };
    let residual = csiszar_residual(px, dist, &kernel, lambda_star, d);

    Ok(ExpectedSolution {
        d,
        value: InfoValue::from_nats(value),
        py: ReproductionDistribution::from_normalized(py),
        kernel,
        distortion,
        slope,
        lambda_star,
        iterations,
        residual,
        converged,
    })
}

/// Largest deviation of `ln dP_{Y|X=x}/dP_Y(y)` from
/// `Lambda_Y(x, lambda) - lambda dist(x, y) + lambda d` over kernel support.
pub fn csiszar_residual(
    px: &[f64],
    dist: &[Vec<f64>],
    kernel: &ConditionalKernel,
    lambda: f64,
    d: f64,
) -> f64 {
    let py = kernel.marginal(px);
    let mut worst: f64 = 0.0;
    for ((row, d_row), &p) in kernel.rows().iter().zip(dist).zip(px) {
        if p <= 0.0 {
            continue;
        }
        let tilt = tilted_information(&py, d_row, lambda, d);
        for ((&k, &q), &dv) in row.iter().zip(&py).zip(d_row) {
            if k <= 0.0 {
                continue;
            }
            let lhs = (k / q).ln();
            let rhs = tilt - lambda * dv + lambda * d;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}
