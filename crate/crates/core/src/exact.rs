//! Minimum output entropy of quantizers on small instances, by exhaustive
//! search, and the sandwich bounds relating it to the proxies.
//!
//! For the conditional excess criterion the search runs over the vertices of
//! the per-row feasible polytopes `{p : p(B_d(x)) >= 1 - eps}`. `H(P_Y)` is
//! concave in `P_Y` and `P_Y` is linear in every kernel row, so the minimum
//! over the product of polytopes is attained at a product of vertices. The
//! vertices of a simplex cut by one halfspace are the simplex vertices inside
//! it (point masses in the ball) and the points where the cutting hyperplane
//! crosses an edge (`1 - eps` on a ball letter, `eps` on a letter outside).

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::infotheory::{entropy_nats, InfoValue, LOG2_E};
use crate::model::{
    ball_table, check_feasibility, BallTable, ConditionalKernel, Feasibility, InstanceSpec, Mode,
};

/// Largest number of candidate quantizers an exhaustive search will visit.
pub const SEARCH_LIMIT: f64 = 1e7;
/// Numerical slack (bits) allowed on the lower sandwich inequality.
pub const SANDWICH_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("constraint set is empty; letters with empty balls: {:?}", .0.empty_balls)]
    Infeasible(Feasibility),
    #[error("search space has {size:.3e} candidates, limit is {limit:.0e}")]
    SearchTooLarge { size: f64, limit: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantizerSolution {
    pub value: InfoValue,
    pub py: Vec<f64>,
    pub kernel: ConditionalKernel,
    /// `true` when `value` is a proven minimum, `false` for an upper bound.
    pub exact: bool,
}

/// Sparse kernel row: `(letter, weight)` pairs.
type Vertex = Vec<(usize, f64)>;

fn check_size(choices: &[Vec<Vertex>]) -> Result<(), ExactError> {
    let size: f64 = choices.iter().map(|c| c.len() as f64).product();
    if size > SEARCH_LIMIT {
        return Err(ExactError::SearchTooLarge {
            size,
            limit: SEARCH_LIMIT,
        });
    }
    Ok(())
}

fn induced(px: &[f64], rows: &[&Vertex], n: usize) -> Vec<f64> {
    let mut py = vec![0.0; n];
    for (row, &p) in rows.iter().zip(px) {
        for &(y, w) in row.iter() {
            py[y] += p * w;
        }
    }
    py
}

/// Minimizes `H(Y)` over one vertex per row. The first minimum in
/// lexicographic order of the choice indices (row 0 slowest) wins.
fn min_over_vertices(px: &[f64], choices: &[Vec<Vertex>], n: usize) -> (f64, Vec<usize>) {
    let m = choices.len();
    let search_from = |first: usize| -> (f64, Vec<usize>) {
        let mut idx = vec![0usize; m];
        idx[0] = first;
        let mut best = (f64::INFINITY, idx.clone());
        loop {
            let rows: Vec<&Vertex> = idx.iter().zip(choices).map(|(&i, c)| &c[i]).collect();
            let h = entropy_nats(&induced(px, &rows, n));
            if h < best.0 {
                best = (h, idx.clone());
            }
            // odometer over rows 1..m, last row fastest
            let mut pos = m;
            loop {
                if pos == 1 {
                    return best;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < choices[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    };
    if m == 1 {
        return (0..choices[0].len())
            .map(|i| {
                let rows = [&choices[0][i]];
                (entropy_nats(&induced(px, &rows, n)), vec![i])
            })
            .fold(
                (f64::INFINITY, vec![0]),
                |a, b| if b.0 < a.0 { b } else { a },
            );
    }
    (0..choices[0].len())
        .into_par_iter()
        .map(search_from)
        .collect::<Vec<_>>()
        .into_iter()
        .fold(
            (f64::INFINITY, vec![0; m]),
            |a, b| if b.0 < a.0 { b } else { a },
        )
}

fn dense_kernel(choices: &[Vec<Vertex>], idx: &[usize], n: usize) -> ConditionalKernel {
    ConditionalKernel::from_rows_unchecked(
        idx.iter()
            .zip(choices)
            .map(|(&i, c)| {
                let mut row = vec![0.0; n];
                for &(y, w) in &c[i] {
                    row[y] += w;
                }
                row
            })
            .collect(),
    )
}

fn solution_from(px: &[f64], kernel: ConditionalKernel, exact: bool) -> QuantizerSolution {
    let py = kernel.marginal(px);
    QuantizerSolution {
        value: InfoValue::from_nats(entropy_nats(&py)),
        py,
        kernel,
        exact,
    }
}

fn point_masses(ball: &BallTable, x: usize) -> Vec<Vertex> {
    ball.members(x)
        .into_iter()
        .map(|y| vec![(y, 1.0)])
        .collect()
}

/// `H_X(d, 0)`: minimum of `H(f(X))` over deterministic maps with
/// `f(x) in B_d(x)` for every supported `x`.
pub fn exact_h_guaranteed(
    instance: &InstanceSpec,
    d: f64,
) -> Result<QuantizerSolution, ExactError> {
    let ball = ball_table(instance, d);
    let px = instance.px();
    let feas = check_feasibility(&ball, px, Mode::Guaranteed, 0.0);
    if !feas.feasible {
        return Err(ExactError::Infeasible(feas));
    }
    let choices: Vec<Vec<Vertex>> = (0..instance.m()).map(|x| point_masses(&ball, x)).collect();
    check_size(&choices)?;
    let (_, idx) = min_over_vertices(px, &choices, instance.n());
    Ok(solution_from(
        px,
        dense_kernel(&choices, &idx, instance.n()),
        true,
    ))
}

/// Vertices of `{p in simplex : p(B_d(x)) >= 1 - eps}`.
fn cond_vertices(ball: &BallTable, x: usize, eps: f64) -> Vec<Vertex> {
    let inside = ball.members(x);
    let outside: Vec<usize> = (0..ball.n()).filter(|&y| !ball.contains(x, y)).collect();
    if eps <= 0.0 || outside.is_empty() {
        return point_masses(ball, x);
    }
    if eps >= 1.0 {
        return (0..ball.n()).map(|y| vec![(y, 1.0)]).collect();
    }
    let mut v = point_masses(ball, x);
    for &yi in &inside {
        for &yo in &outside {
            v.push(vec![(yi, 1.0 - eps), (yo, eps)]);
        }
    }
    v
}

/// `H_X^c(d, eps)`: minimum output entropy over randomized quantizers that
/// exceed distortion `d` with probability at most `eps` for every `x`.
pub fn exact_h_cond_excess(
    instance: &InstanceSpec,
    d: f64,
    eps: f64,
) -> Result<QuantizerSolution, ExactError> {
    let ball = ball_table(instance, d);
    let px = instance.px();
    let feas = check_feasibility(&ball, px, Mode::CondExcess, eps);
    if !feas.feasible {
        return Err(ExactError::Infeasible(feas));
    }
    let choices: Vec<Vec<Vertex>> = (0..instance.m())
        .map(|x| cond_vertices(&ball, x, eps))
        .collect();
    check_size(&choices)?;
    let (_, idx) = min_over_vertices(px, &choices, instance.n());
    Ok(solution_from(
        px,
        dense_kernel(&choices, &idx, instance.n()),
        true,
    ))
}

/// Cap on base maps tried by [`upper_h_excess`] before falling back to a
/// single greedy covering map.
const BASE_LIMIT: f64 = 2e5;

/// Upper bound on `H_X(d, eps)` (averaged excess constraint).
///
/// Each base deterministic quantizer is improved by redirecting source mass
/// to the most probable output letter, spending the excess budget greedily on
/// the moves with the largest entropy reduction per unit of budget. The exact
/// conditional-excess optimum, when small enough to compute, is also a
/// candidate since it is feasible for the averaged constraint.
pub fn upper_h_excess(
    instance: &InstanceSpec,
    d: f64,
    eps: f64,
) -> Result<QuantizerSolution, ExactError> {
    let ball = ball_table(instance, d);
    let px = instance.px();
    let n = instance.n();
    let m = instance.m();
    let feas = check_feasibility(&ball, px, Mode::Excess, eps);
    if !feas.feasible {
        return Err(ExactError::Infeasible(feas));
    }
    let covered: Vec<usize> = (0..m).filter(|&x| !feas.empty_balls.contains(&x)).collect();
    let choices: Vec<Vec<usize>> = covered.iter().map(|&x| ball.members(x)).collect();
    let size: f64 = choices.iter().map(|c| c.len() as f64).product();

    let bases: Vec<Vec<usize>> = if size <= BASE_LIMIT {
        let mut out = Vec::new();
        let mut idx = vec![0usize; choices.len()];
        loop {
            out.push(idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect());
            let mut pos = choices.len();
            let done = loop {
                if pos == 0 {
                    break true;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < choices[pos].len() {
                    break false;
                }
                idx[pos] = 0;
            };
            if done {
                break;
            }
        }
        out
    } else {
        vec![greedy_cover(&covered, &choices, px, n)]
    };

    let mut best: Option<QuantizerSolution> = None;
    let mut consider = |cand: QuantizerSolution| {
        if best
            .as_ref()
            .is_none_or(|b| cand.value.nats() < b.value.nats())
        {
            best = Some(cand);
        }
    };
    for base in &bases {
        let mut assignment = vec![usize::MAX; m];
        for (&x, &y) in covered.iter().zip(base) {
            assignment[x] = y;
        }
        consider(redirect(px, &ball, &assignment, eps, n));
    }
    if let Ok(mut cond) = exact_h_cond_excess(instance, d, eps) {
        cond.exact = false;
        consider(cond);
    }
    let mut best = best.expect("at least one base quantizer");
    best.exact = false;
    Ok(best)
}

/// Assigns letters one at a time to the reproduction letter covering the
/// most still-unassigned source mass.
fn greedy_cover(covered: &[usize], choices: &[Vec<usize>], px: &[f64], n: usize) -> Vec<usize> {
    let mut result = vec![usize::MAX; covered.len()];
    let mut remaining: Vec<usize> = (0..covered.len()).collect();
    while !remaining.is_empty() {
        let mut weight = vec![0.0; n];
        for &i in &remaining {
            for &y in &choices[i] {
                weight[y] += px[covered[i]];
            }
        }
        let y = (0..n).fold(0, |b, y| if weight[y] > weight[b] { y } else { b });
        remaining.retain(|&i| {
            if choices[i].contains(&y) {
                result[i] = y;
                false
            } else {
                true
            }
        });
    }
    result
}

/// Starting from `assignment` (`usize::MAX` marks letters with empty balls),
/// redirects mass to the most probable output letter under budget `eps`.
fn redirect(
    px: &[f64],
    ball: &BallTable,
    assignment: &[usize],
    eps: f64,
    n: usize,
) -> QuantizerSolution {
    let m = px.len();
    let mut py = vec![0.0; n];
    for (x, &y) in assignment.iter().enumerate() {
        if y != usize::MAX {
            py[y] += px[x];
        }
    }
    let target = (0..n).fold(0, |b, y| if py[y] > py[b] { y } else { b });
    // moved[x]: fraction of x's mass sent to `target`.
    let mut moved = vec![0.0; m];
    let mut budget = eps;
    for (x, &y) in assignment.iter().enumerate() {
        if y == usize::MAX {
            moved[x] = 1.0;
            py[target] += px[x];
            budget -= px[x];
        } else if y != target && ball.contains(x, target) {
            // Free move: the target is inside the ball.
            moved[x] = 1.0;
            py[y] -= px[x];
            py[target] += px[x];
        }
    }
    loop {
        if budget <= 0.0 {
            break;
        }
        let h_now = entropy_nats(&py);
        let mut pick: Option<(usize, f64, f64)> = None;
        for x in 0..m {
            let y = assignment[x];
            if y == usize::MAX || y == target || moved[x] >= 1.0 {
                continue;
            }
            let amount = ((1.0 - moved[x]) * px[x]).min(budget);
            if amount <= 0.0 {
                continue;
            }
            let mut trial = py.clone();
            trial[y] -= amount;
            trial[target] += amount;
            let score = (h_now - entropy_nats(&trial)) / amount;
            if pick.is_none_or(|(_, s, _)| score > s) {
                pick = Some((x, score, amount));
            }
        }
        let Some((x, score, amount)) = pick else {
            break;
        };
        if score <= 0.0 {
            break;
        }
        moved[x] = (moved[x] + amount / px[x]).min(1.0);
        py[assignment[x]] -= amount;
        py[target] += amount;
        budget -= amount;
    }
    let rows = (0..m)
        .map(|x| {
            let mut row = vec![0.0; n];
            if assignment[x] != usize::MAX {
                row[assignment[x]] += 1.0 - moved[x];
            }
            row[target] += moved[x];
            row
        })
        .collect();
    solution_from(px, ConditionalKernel::from_rows_unchecked(rows), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SandwichMode {
    /// `R <= H <= R + log2(R + 1) + log2 e`.
    Guaranteed,
    /// `R <= H <= R + log2(R + 2) + 1 + log2 e` (conditional and averaged
    /// excess distortion).
    ExcessFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichVerdict {
    pub r_bits: f64,
    pub h_bits: f64,
    /// `None` when the lower inequality was not checked (inexact `h`).
    pub lower_ok: Option<bool>,
    pub upper_ok: bool,
    pub lower_slack: f64,
    pub upper_bound: f64,
    pub upper_slack: f64,
}

impl SandwichVerdict {
    pub fn passed(&self) -> bool {
        self.upper_ok && self.lower_ok.unwrap_or(true)
    }
}

/// Upper end of the sandwich, in bits, for proxy value `r_bits`.
pub fn sandwich_upper(r_bits: f64, mode: SandwichMode) -> f64 {
    match mode {
        SandwichMode::Guaranteed => r_bits + (r_bits + 1.0).log2() + LOG2_E,
        SandwichMode::ExcessFamily => r_bits + (r_bits + 2.0).log2() + 1.0 + LOG2_E,
    }
}

/// Checks `r <= h` (when `h_exact`) and the upper bound on `h`.
pub fn sandwich_check(
    h: InfoValue,
    r: InfoValue,
    mode: SandwichMode,
    h_exact: bool,
) -> SandwichVerdict {
    let (h_bits, r_bits) = (h.bits(), r.bits());
    let upper_bound = sandwich_upper(r_bits, mode);
    SandwichVerdict {
        r_bits,
        h_bits,
        lower_ok: h_exact.then_some(r_bits <= h_bits + SANDWICH_TOL),
        upper_ok: h_bits <= upper_bound,
        lower_slack: h_bits - r_bits,
        upper_bound,
        upper_slack: upper_bound - h_bits,
    }
}
