//! Information measures. Everything is computed in nats; conversion to bits
//! happens only through [`InfoValue::bits`].

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::model::ConditionalKernel;

pub const LN_2: f64 = std::f64::consts::LN_2;
/// `log2(e)`.
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// A nonnegative amount of information, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InfoValue(f64);

impl InfoValue {
    pub const ZERO: InfoValue = InfoValue(0.0);
    pub const INFINITY: InfoValue = InfoValue(f64::INFINITY);

    /// Wraps a value in nats. Tiny negative round-off is clamped to zero.
    pub fn from_nats(nats: f64) -> Self {
        debug_assert!(!nats.is_nan(), "information value is NaN");
        Self(if nats < 0.0 { 0.0 } else { nats })
    }

    pub fn from_bits(bits: f64) -> Self {
        Self::from_nats(bits * LN_2)
    }

    pub fn nats(self) -> f64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 / LN_2
    }

    pub fn in_units(self, units: Units) -> f64 {
        match units {
            Units::Bits => self.bits(),
            Units::Nats => self.nats(),
        }
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl Add for InfoValue {
    type Output = InfoValue;

    fn add(self, rhs: Self) -> Self {
        InfoValue(self.0 + rhs.0)
    }
}

impl fmt::Display for InfoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} bits", self.bits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Bits,
    Nats,
}

/// `-p ln p` with `0 ln 0 = 0`.
#[inline]
pub(crate) fn neg_plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// `a ln(a / b)` with the conventions `0 ln(0/b) = 0` and `a ln(a/0) = +inf`.
#[inline]
pub(crate) fn plogp_ratio(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else if b <= 0.0 {
        f64::INFINITY
    } else {
        a * (a / b).ln()
    }
}

/// Raw-nats Shannon entropy.
pub(crate) fn entropy_nats(p: &[f64]) -> f64 {
    p.iter().map(|&v| neg_plogp(v)).sum()
}

/// Raw-nats relative entropy `D(p || q)`.
pub(crate) fn kl_nats(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&a, &b)| plogp_ratio(a, b)).sum()
}

/// Raw-nats binary relative entropy.
#[inline]
pub(crate) fn binary_divergence_nats(alpha: f64, q: f64) -> f64 {
    if alpha == q {
        return 0.0;
    }
    plogp_ratio(alpha, q) + plogp_ratio(1.0 - alpha, 1.0 - q)
}

/// Shannon entropy `H(p)`.
pub fn entropy(p: &[f64]) -> InfoValue {
    InfoValue::from_nats(entropy_nats(p))
}

/// Binary relative entropy `d(alpha || q)`.
pub fn binary_divergence(alpha: f64, q: f64) -> InfoValue {
    InfoValue::from_nats(binary_divergence_nats(alpha, q))
}

/// Binary entropy `h(alpha)`.
pub fn binary_entropy(alpha: f64) -> InfoValue {
    InfoValue::from_nats(neg_plogp(alpha) + neg_plogp(1.0 - alpha))
}

/// Relative entropy `D(p || q)` between two vectors on the same alphabet.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> InfoValue {
    InfoValue::from_nats(kl_nats(p, q))
}

/// `D(P_{Y|X} || q | P_X)`. Rows with zero source mass are skipped.
pub fn conditional_divergence(px: &[f64], kernel: &ConditionalKernel, q: &[f64]) -> InfoValue {
    let total = px
        .iter()
        .zip(kernel.rows())
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, row)| p * kl_nats(row, q))
        .sum();
    InfoValue::from_nats(total)
}

/// `I(X; Y)` for `X ~ px` and `Y | X ~ kernel`.
pub fn mutual_information(px: &[f64], kernel: &ConditionalKernel) -> InfoValue {
    let py = kernel.marginal(px);
    conditional_divergence(px, kernel, &py)
}

/// Generalized tilted information
/// `-ln sum_y py(y) exp(lambda * d - lambda * dist(x, y))`, evaluated with a
/// max shift so that large `lambda` does not overflow. Returns nats; the
/// value may be negative.
pub fn tilted_information(py: &[f64], dist_row: &[f64], lambda: f64, d: f64) -> f64 {
    let exps: Vec<f64> = py
        .iter()
        .zip(dist_row)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &dist)| p.ln() + lambda * (d - dist))
        .collect();
    let shift = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = exps.iter().map(|e| (e - shift).exp()).sum();
    -(shift + sum.ln())
}
