//! Brute-force minimization of the ball-mass objectives over a simplex grid
//! of reproduction distributions. Used to cross-check the iterative solvers
//! on small instances.

use rayon::prelude::*;

use crate::infotheory::{binary_divergence_nats, InfoValue};
use crate::model::{ball_table, InstanceSpec};

use super::{Criterion, ProxyError};

/// Largest reproduction alphabet the grid oracle accepts.
pub const ORACLE_MAX_N: usize = 4;

/// Minimum of the proxy objective over all `P_Y` whose entries are
/// multiples of `step` (which must divide 1 up to rounding and be at most
/// 0.01).
///
/// For the excess criterion the inner minimization over success profiles
/// is solved exactly at each grid point through its Lagrange dual.
pub fn oracle_grid_min(
    instance: &InstanceSpec,
    d: f64,
    criterion: &Criterion,
    step: f64,
) -> Result<InfoValue, ProxyError> {
    let n = instance.n();
    if n > ORACLE_MAX_N {
        return Err(ProxyError::TooLarge {
            n,
            max: ORACLE_MAX_N,
        });
    }
    if !(step > 0.0 && step <= 0.01) {
        return Err(ProxyError::InvalidArgument(format!(
            "grid step {step} must lie in (0, 0.01]"
        )));
    }
    let steps = (1.0 / step).round() as usize;
    let ball = ball_table(instance, d);
    let px = instance.px().to_vec();
    let m = instance.m();

    // Bitmask of the source letters whose ball contains each y.
    let covers: Vec<u32> = (0..n)
        .map(|y| {
            (0..m)
                .filter(|&x| ball.contains(x, y))
                .fold(0u32, |acc, x| acc | (1 << x))
        })
        .collect();

    let scorer = Scorer::new(criterion, &px, steps)?;

    let best = (0..=steps)
        .into_par_iter()
        .map(|first| {
            let mut counts = vec![0u32; m];
            add(&mut counts, covers[0], first as u32);
            let mut best = f64::INFINITY;
            recurse(&covers, 1, steps - first, &mut counts, &scorer, &mut best);
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(InfoValue::from_nats(best))
}

fn add(counts: &mut [u32], mask: u32, c: u32) {
    for (x, k) in counts.iter_mut().enumerate() {
        if mask & (1 << x) != 0 {
            *k += c;
        }
    }
}

fn sub(counts: &mut [u32], mask: u32, c: u32) {
    for (x, k) in counts.iter_mut().enumerate() {
        if mask & (1 << x) != 0 {
            *k -= c;
        }
    }
}

fn recurse(
    covers: &[u32],
    y: usize,
    remaining: usize,
    counts: &mut Vec<u32>,
    scorer: &Scorer,
    best: &mut f64,
) {
    if y == covers.len() {
        if remaining == 0 {
            let v = scorer.score(counts);
            if v < *best {
                *best = v;
            }
        }
        return;
    }
    if y + 1 == covers.len() {
        add(counts, covers[y], remaining as u32);
        let v = scorer.score(counts);
        if v < *best {
            *best = v;
        }
        sub(counts, covers[y], remaining as u32);
        return;
    }
    for c in 0..=remaining {
        add(counts, covers[y], c as u32);
        recurse(covers, y + 1, remaining - c, counts, scorer, best);
        sub(counts, covers[y], c as u32);
    }
}

enum Scorer {
    /// Per-letter cost tables indexed by the ball-mass numerator.
    Table {
        px: Vec<f64>,
        tables: Vec<Vec<f64>>,
    },
    Excess {
        px: Vec<f64>,
        steps: f64,
        eps: f64,
    },
}

impl Scorer {
    fn new(criterion: &Criterion, px: &[f64], steps: usize) -> Result<Self, ProxyError> {
        let grid = |k: usize| k as f64 / steps as f64;
        Ok(match criterion {
            Criterion::Guaranteed => Scorer::Table {
                px: px.to_vec(),
                tables: vec![
                    (0..=steps)
                        .map(|k| if k == 0 { f64::INFINITY } else { -grid(k).ln() })
                        .collect();
                    px.len()
                ],
            },
            Criterion::CondExcess(eps) => {
                if eps.len() != px.len() {
                    return Err(ProxyError::InvalidArgument("eps profile length".into()));
                }
                Scorer::Table {
                    px: px.to_vec(),
                    tables: eps
                        .iter()
                        .map(|&e| {
                            (0..=steps)
                                .map(|k| {
                                    let b = grid(k);
                                    binary_divergence_nats((1.0 - e).max(b), b)
                                })
                                .collect()
                        })
                        .collect(),
                }
            }
            Criterion::Excess(eps) => Scorer::Excess {
                px: px.to_vec(),
                steps: steps as f64,
                eps: *eps,
            },
        })
    }

    fn score(&self, counts: &[u32]) -> f64 {
        match self {
            Scorer::Table { px, tables } => counts
                .iter()
                .zip(px)
                .zip(tables)
                .map(|((&k, &p), t)| p * t[k as usize])
                .sum(),
            Scorer::Excess { px, steps, eps } => {
                let masses: Vec<f64> = counts.iter().map(|&k| k as f64 / steps).collect();
                excess_inner_min(&masses, px, *eps)
            }
        }
    }
}

/// `min sum_x px d(alpha_x || b_x)` over `b_x <= alpha_x <= 1` with
/// `sum_x px alpha_x >= 1 - eps`, by maximizing the concave dual
/// `g(l) = l (1 - eps) + sum_x px min_a [d(a || b_x) - l a]` over `l >= 0`
/// with golden-section search.
fn excess_inner_min(masses: &[f64], px: &[f64], eps: f64) -> f64 {
    let target = 1.0 - eps;
    let covered: f64 = masses.iter().zip(px).map(|(b, p)| b * p).sum();
    if covered >= target {
        return 0.0;
    }
    let reachable: f64 = masses
        .iter()
        .zip(px)
        .filter(|(&b, _)| b > 0.0)
        .map(|(_, &p)| p)
        .sum();
    if reachable < target - 1e-15 {
        return f64::INFINITY;
    }
    // Inner minimizer over a in [b, 1]: stationary point of
    // ln(a (1 - b) / ((1 - a) b)) = l.
    let inner = |b: f64, l: f64| -> (f64, f64) {
        if b <= 0.0 {
            return (0.0, 0.0);
        }
        if b >= 1.0 {
            return (1.0, -l);
        }
        let odds = b / (1.0 - b) * l.exp();
        let a = if odds.is_infinite() {
            1.0
        } else {
            odds / (1.0 + odds)
        };
        (a, binary_divergence_nats(a, b) - l * a)
    };
    let dual = |l: f64| -> f64 {
        l * target
            + masses
                .iter()
                .zip(px)
                .map(|(&b, &p)| p * inner(b, l).1)
                .sum::<f64>()
    };
    // Bracket: the dual increases while the primal budget is unmet.
    let mut hi = 1.0;
    while hi < 700.0 {
        let mean: f64 = masses
            .iter()
            .zip(px)
            .map(|(&b, &p)| p * inner(b, hi).0)
            .sum();
        if mean >= target {
            break;
        }
        hi *= 2.0;
    }
    let hi = hi.min(700.0);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - ratio * (b - a);
    let mut e = a + ratio * (b - a);
    let (mut fc, mut fe) = (dual(c), dual(e));
    for _ in 0..200 {
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - ratio * (b - a);
            fc = dual(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + ratio * (b - a);
            fe = dual(e);
        }
        if b - a < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    dual(0.5 * (a + b)).max(dual(hi)).max(0.0)
}
