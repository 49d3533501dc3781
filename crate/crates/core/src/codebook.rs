//! Random-codebook encoders and a Monte Carlo harness for their expected
//! code lengths.
//!
//! Randomness comes from ChaCha8 keyed by `(seed, purpose)` with the trial
//! number as the stream id, so every trial is reproducible on its own and
//! trials can run in any order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::infotheory::{binary_divergence_nats, binary_entropy, LOG2_E};
use crate::model::{ball_table, AlphaProfile, BallTable, InstanceSpec, ReproductionDistribution};

pub const GENERATOR_ID: &str = "chacha8-inverse-cdf";
/// Exhaustion rate at or above which a report flags the codebook length.
pub const EXHAUSTION_LIMIT: f64 = 1e-3;
/// Codebooks are extended by doubling at most this many times.
const MAX_DOUBLINGS: u32 = 24;

const PURPOSE_CODEBOOK: u64 = 1;
const PURPOSE_SOURCE: u64 = 2;
const PURPOSE_GIVEUP: u64 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodebookError {
    #[error("no match for source letter {x} within {len} codewords")]
    CodebookExhausted { x: usize, len: usize },
    #[error("source letter {0} has an empty distortion ball")]
    EmptyBall(usize),
    #[error("source letter {x} needs a match but its ball has zero reproduction mass")]
    ZeroBallMass { x: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub(crate) fn keyed_rng(seed: u64, purpose: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&purpose.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Inverse-CDF sampler over a finite alphabet.
#[derive(Debug, Clone)]
struct Sampler {
    cdf: Vec<f64>,
    last: usize,
}

impl Sampler {
    fn new(p: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = p
            .iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect();
        let last = p.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        Self { cdf, last }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.last)
    }
}

/// A finite prefix `Y_1, ..., Y_len` of an i.i.d. `P_Y` codeword sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Codebook {
    pub entries: Vec<usize>,
    pub seed: u64,
    pub stream: u64,
    pub generator: String,
}

impl Codebook {
    /// Draws `len` codewords. A longer codebook with the same seed and stream
    /// extends a shorter one.
    pub fn generate(py: &ReproductionDistribution, len: usize, seed: u64, stream: u64) -> Self {
        let sampler = Sampler::new(py.as_slice());
        let mut rng = keyed_rng(seed, PURPOSE_CODEBOOK, stream);
        Self {
            entries: (0..len).map(|_| sampler.sample(&mut rng)).collect(),
            seed,
            stream,
            generator: GENERATOR_ID.to_string(),
        }
    }

    pub fn from_entries(entries: Vec<usize>) -> Self {
        Self {
            entries,
            seed: 0,
            stream: 0,
            generator: "explicit".to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Index (1-based) of the first codeword within distortion `d` of `x`.
pub fn encode_waiting(
    x: usize,
    codebook: &Codebook,
    ball: &BallTable,
) -> Result<u64, CodebookError> {
    if ball.ball_sizes()[x] == 0 {
        return Err(CodebookError::EmptyBall(x));
    }
    codebook
        .entries
        .iter()
        .position(|&y| ball.contains(x, y))
        .map(|i| i as u64 + 1)
        .ok_or(CodebookError::CodebookExhausted {
            x,
            len: codebook.len(),
        })
}

/// With probability `alpha_x` runs the waiting-time encoder, otherwise gives
/// up and sends index 1.
pub fn encode_giveup<R: Rng>(
    x: usize,
    codebook: &Codebook,
    ball: &BallTable,
    alpha_x: f64,
    rng: &mut R,
) -> Result<u64, CodebookError> {
    if !(0.0..=1.0).contains(&alpha_x) {
        return Err(CodebookError::InvalidArgument(format!(
            "alpha {alpha_x} outside [0, 1]"
        )));
    }
    let u: f64 = rng.random();
    if u < alpha_x {
        encode_waiting(x, codebook, ball)
    } else {
        Ok(1)
    }
}

/// Elias gamma code of `w`: `floor(log2 w)` zeros followed by `w` in binary.
///
/// # Panics
/// If `w == 0`.
pub fn elias_gamma(w: u64) -> String {
    assert!(w >= 1, "elias gamma is defined for positive integers");
    let bits = format!("{w:b}");
    format!("{}{}", "0".repeat(bits.len() - 1), bits)
}

/// `floor(log2 w)` for `w >= 1`.
fn floor_log2(w: u64) -> u32 {
    63 - w.leading_zeros()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    fn from_samples(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        if n == 0.0 {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.clone().sum::<f64>() / n;
        let var = if n > 1.0 {
            values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LetterExcess {
    pub x: usize,
    pub trials: u64,
    pub rate: Estimate,
    /// `1 - alpha(x)`.
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    pub codebook_len: usize,
    pub generator: String,
    pub d: f64,
    /// `L = floor(log2 W)`, bits.
    pub mean_code_length: Estimate,
    /// Elias gamma length `2L + 1`, bits.
    pub mean_gamma_length: Estimate,
    /// Plug-in entropy of `W`, bits.
    pub empirical_entropy_w: f64,
    pub empirical_excess_rate: Estimate,
    pub per_letter_excess: Vec<LetterExcess>,
    /// `sum_x px(x) (-log2 P_Y(B_d(x)))`.
    pub elub_rhs: f64,
    /// `sum_x px(x) [d(alpha(x) || P_Y(B_d(x))) + h(alpha(x))]`, bits.
    pub elubcc_rhs: f64,
    /// `E[L] + log2(1 + E[L]) + log2 e` at the empirical mean of `L`.
    pub entropy_chain_rhs: f64,
    /// Trials whose match lay beyond `codebook_len`.
    pub exhausted_trials: u64,
    pub exhaustion_rate: f64,
    pub insufficient_length: bool,
    /// `(w, count)` in increasing `w`.
    pub w_histogram: Vec<(u64, u64)>,
}

struct Trial {
    x: usize,
    w: u64,
    excess: bool,
    exhausted: bool,
}

fn run_trial(
    t: u64,
    seed: u64,
    source: &Sampler,
    codewords: &Sampler,
    ball: &BallTable,
    alpha: &[f64],
    codebook_len: usize,
) -> Result<Trial, CodebookError> {
    let x = source.sample(&mut keyed_rng(seed, PURPOSE_SOURCE, t));
    let u: f64 = keyed_rng(seed, PURPOSE_GIVEUP, t).random();
    // Lazily walks the same sequence `Codebook::generate` would produce, so
    // doubling the length only appends codewords.
    let mut book = keyed_rng(seed, PURPOSE_CODEBOOK, t);
    let first = codewords.sample(&mut book);
    let max_len = (codebook_len.max(1) as u64) << MAX_DOUBLINGS;
    let (w, y) = if u < alpha[x] {
        let mut w = 1u64;
        let mut y = first;
        while !ball.contains(x, y) {
            w += 1;
            if w > max_len {
                return Err(CodebookError::CodebookExhausted {
                    x,
                    len: max_len as usize,
                });
            }
            y = codewords.sample(&mut book);
        }
        (w, y)
    } else {
        (1, first)
    };
    Ok(Trial {
        x,
        w,
        excess: !ball.contains(x, y),
        exhausted: w > codebook_len as u64,
    })
}

/// Monte Carlo estimate of the give-up waiting-time encoder's performance.
///
/// Each trial draws `X ~ px`, a give-up coin, and a fresh codebook from `py`.
/// A trial whose match lies beyond `codebook_len` continues into the doubled
/// codebook and counts as exhausted.
pub fn simulate(
    instance: &InstanceSpec,
    d: f64,
    py: &ReproductionDistribution,
    alpha: &AlphaProfile,
    trials: u64,
    codebook_len: usize,
    seed: u64,
) -> Result<SimulationReport, CodebookError> {
    let px = instance.px();
    if trials == 0 {
        return Err(CodebookError::InvalidArgument(
            "trials must be positive".into(),
        ));
    }
    if py.len() != instance.n() || alpha.alpha.len() != instance.m() {
        return Err(CodebookError::InvalidArgument(format!(
            "expected py of length {} and alpha of length {}",
            instance.n(),
            instance.m()
        )));
    }
    if let Some(&a) = alpha.alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(CodebookError::InvalidArgument(format!(
            "alpha {a} outside [0, 1]"
        )));
    }
    let ball = ball_table(instance, d);
    let masses = ball.ball_masses(py.as_slice());
    for (x, (&b, &a)) in masses.iter().zip(&alpha.alpha).enumerate() {
        if a > 0.0 && b <= 0.0 {
            return Err(CodebookError::ZeroBallMass { x });
        }
    }

    let source = Sampler::new(px);
    let codewords = Sampler::new(py.as_slice());
    let records = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_trial(
                t,
                seed,
                &source,
                &codewords,
                &ball,
                &alpha.alpha,
                codebook_len,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    let lengths = records.iter().map(|r| floor_log2(r.w) as f64);
    let mean_code_length = Estimate::from_samples(lengths.clone());
    let mean_gamma_length = Estimate::from_samples(lengths.map(|l| 2.0 * l + 1.0));
    let excess = records.iter().map(|r| if r.excess { 1.0 } else { 0.0 });
    let empirical_excess_rate = Estimate::from_samples(excess);

    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    for r in &records {
        *histogram.entry(r.w).or_default() += 1;
    }
    let empirical_entropy_w = histogram
        .values()
        .map(|&c| {
            let p = c as f64 / trials as f64;
            -p * p.log2()
        })
        .sum();

    let per_letter_excess = (0..instance.m())
        .map(|x| {
            let hits = records
                .iter()
                .filter(|r| r.x == x)
                .map(|r| if r.excess { 1.0 } else { 0.0 });
            LetterExcess {
                x,
                trials: hits.clone().count() as u64,
                rate: Estimate::from_samples(hits),
                allowed: 1.0 - alpha.alpha[x],
            }
        })
        .collect();

    let elub_rhs = px
        .iter()
        .zip(&masses)
        .map(|(&p, &b)| if p > 0.0 { -p * b.log2() } else { 0.0 })
        .sum();
    let elubcc_rhs = px
        .iter()
        .zip(&masses)
        .zip(&alpha.alpha)
        .map(|((&p, &b), &a)| {
            p * (binary_divergence_nats(a, b) * LOG2_E + binary_entropy(a).bits())
        })
        .sum();
    let l = mean_code_length.mean;
    let exhausted_trials = records.iter().filter(|r| r.exhausted).count() as u64;
    let exhaustion_rate = exhausted_trials as f64 / trials as f64;

    Ok(SimulationReport {
        trials,
        seed,
        codebook_len,
        generator: GENERATOR_ID.to_string(),
        d,
        mean_code_length,
        mean_gamma_length,
        empirical_entropy_w,
        empirical_excess_rate,
        per_letter_excess,
        elub_rhs,
        elubcc_rhs,
        entropy_chain_rhs: l + (1.0 + l).log2() + LOG2_E,
        exhausted_trials,
        exhaustion_rate,
        insufficient_length: exhaustion_rate >= EXHAUSTION_LIMIT,
        w_histogram: histogram.into_iter().collect(),
    })
}
