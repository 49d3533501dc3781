//! Problem instances, distributions on the reproduction alphabet, kernels,
//! and distortion-ball geometry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when validating that a vector is a probability vector.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("px is empty")]
    EmptySource,
    #[error("distortion matrix has {rows} rows but px has {expected} entries")]
    RowCount { rows: usize, expected: usize },
    #[error("distortion matrix has no columns")]
    EmptyReproduction,
    #[error("distortion row {row} has {len} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("px[{index}] = {value} is negative or not finite")]
    BadProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, off by more than 1e-12 from 1")]
    NotNormalized { sum: f64 },
    #[error("dist[{row}][{col}] = {value} is negative or not finite")]
    BadDistortion { row: usize, col: usize, value: f64 },
    #[error("{which} has {len} labels, expected {expected}")]
    LabelCount {
        which: &'static str,
        len: usize,
        expected: usize,
    },
    #[error("kernel row {row} is not a probability vector")]
    BadKernelRow { row: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid instance JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Validates a probability vector to [`PROB_TOL`] and returns it renormalized.
pub fn validate_probability(p: &[f64]) -> Result<Vec<f64>, ModelError> {
    for (index, &value) in p.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(ModelError::BadProbability { index, value });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(ModelError::NotNormalized { sum });
    }
    Ok(p.iter().map(|v| v / sum).collect())
}

/// On-disk form of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub px: Vec<f64>,
    pub dist: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_x: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_y: Option<Vec<String>>,
}

/// A validated problem instance: source distribution and distortion matrix.
///
/// Source letters with zero probability are dropped at construction; the
/// original row index of each retained letter is kept in `source_rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    px: Vec<f64>,
    dist: Vec<Vec<f64>>,
    labels_x: Vec<String>,
    labels_y: Vec<String>,
    source_rows: Vec<usize>,
}

impl InstanceSpec {
    pub fn new(px: Vec<f64>, dist: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        Self::with_labels(px, dist, None, None)
    }

    pub fn with_labels(
        px: Vec<f64>,
        dist: Vec<Vec<f64>>,
        labels_x: Option<Vec<String>>,
        labels_y: Option<Vec<String>>,
    ) -> Result<Self, ModelError> {
        let m = px.len();
        if m == 0 {
            return Err(ModelError::EmptySource);
        }
        if dist.len() != m {
            return Err(ModelError::RowCount {
                rows: dist.len(),
                expected: m,
            });
        }
        let n = dist[0].len();
        if n == 0 {
            return Err(ModelError::EmptyReproduction);
        }
        for (row, r) in dist.iter().enumerate() {
            if r.len() != n {
                return Err(ModelError::RaggedRow {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
            for (col, &value) in r.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(ModelError::BadDistortion { row, col, value });
                }
            }
        }
        let px = validate_probability(&px)?;
        let labels_x = check_labels("labels_x", labels_x, m, "x")?;
        let labels_y = check_labels("labels_y", labels_y, n, "y")?;

        let source_rows: Vec<usize> = (0..m).filter(|&i| px[i] > 0.0).collect();
        Ok(Self {
            px: source_rows.iter().map(|&i| px[i]).collect(),
            dist: source_rows.iter().map(|&i| dist[i].clone()).collect(),
            labels_x: source_rows.iter().map(|&i| labels_x[i].clone()).collect(),
            labels_y,
            source_rows,
        })
    }

    pub fn from_file(file: InstanceFile) -> Result<Self, ModelError> {
        Self::with_labels(file.px, file.dist, file.labels_x, file.labels_y)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    /// Source distribution restricted to its support.
    pub fn px(&self) -> &[f64] {
        &self.px
    }

    pub fn dist(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn labels_x(&self) -> &[String] {
        &self.labels_x
    }

    pub fn labels_y(&self) -> &[String] {
        &self.labels_y
    }

    /// Row index in the original file of each retained source letter.
    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    /// Number of (supported) source letters.
    pub fn m(&self) -> usize {
        self.px.len()
    }

    /// Number of reproduction letters.
    pub fn n(&self) -> usize {
        self.dist[0].len()
    }

    pub fn max_distortion(&self) -> f64 {
        self.dist
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Smallest d at which every source letter has a nonempty ball.
    pub fn min_covering_distortion(&self) -> f64 {
        self.dist
            .iter()
            .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    /// Sorted distinct distortion values.
    pub fn distortion_levels(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.dist.iter().flat_map(|r| r.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Random instance with source masses drawn from `[0.05, 1)` (then
    /// normalized) and integer distortions in `0..=max_dist`, reproducible
    /// from `seed`.
    pub fn random(seed: u64, m: usize, n: usize, max_dist: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let dist = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| rng.random_range(0..=max_dist) as f64)
                    .collect()
            })
            .collect();
        Self::new(weights.iter().map(|w| w / total).collect(), dist)
            .expect("random instance is valid")
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            px: self.px.clone(),
            dist: self.dist.clone(),
            labels_x: Some(self.labels_x.clone()),
            labels_y: Some(self.labels_y.clone()),
        }
    }
}

fn check_labels(
    which: &'static str,
    labels: Option<Vec<String>>,
    expected: usize,
    prefix: &str,
) -> Result<Vec<String>, ModelError> {
    match labels {
        Some(l) if l.len() != expected => Err(ModelError::LabelCount {
            which,
            len: l.len(),
            expected,
        }),
        Some(l) => Ok(l),
        None => Ok((0..expected).map(|i| format!("{prefix}{i}")).collect()),
    }
}

/// Incidence of the distortion balls `{y : dist(x, y) <= d}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallTable {
    incidence: Vec<Vec<bool>>,
    d_bits: u64,
}

impl BallTable {
    pub fn new(instance: &InstanceSpec, d: f64) -> Self {
        let incidence = instance
            .dist()
            .iter()
            .map(|row| row.iter().map(|&v| v <= d).collect())
            .collect();
        Self {
            incidence,
            d_bits: d.to_bits(),
        }
    }

    /// Builds a table directly from an incidence matrix (threshold recorded as `d`).
    pub fn from_incidence(incidence: Vec<Vec<bool>>, d: f64) -> Self {
        Self {
            incidence,
            d_bits: d.to_bits(),
        }
    }

    pub fn d(&self) -> f64 {
        f64::from_bits(self.d_bits)
    }

    pub fn m(&self) -> usize {
        self.incidence.len()
    }

    pub fn n(&self) -> usize {
        self.incidence.first().map_or(0, Vec::len)
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.incidence[x][y]
    }

    pub fn row(&self, x: usize) -> &[bool] {
        &self.incidence[x]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.incidence
    }

    pub fn ball_sizes(&self) -> Vec<usize> {
        self.incidence
            .iter()
            .map(|r| r.iter().filter(|&&b| b).count())
            .collect()
    }

    /// Members of the ball around `x`, in increasing order.
    pub fn members(&self, x: usize) -> Vec<usize> {
        (0..self.n()).filter(|&y| self.incidence[x][y]).collect()
    }

    /// `P_Y(B_d(x))` for every source letter.
    pub fn ball_masses(&self, py: &[f64]) -> Vec<f64> {
        self.incidence
            .iter()
            .map(|r| r.iter().zip(py).filter(|(&b, _)| b).map(|(_, &p)| p).sum())
            .collect()
    }

    /// True if every entry of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BallTable) -> bool {
        self.incidence
            .iter()
            .zip(&other.incidence)
            .all(|(a, b)| a.iter().zip(b).all(|(&u, &v)| !u || v))
    }
}

/// Builds the ball table of `instance` at threshold `d`.
pub fn ball_table(instance: &InstanceSpec, d: f64) -> BallTable {
    BallTable::new(instance, d)
}

/// Fidelity criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Guaranteed,
    CondExcess,
    Excess,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// Supported source letters whose ball is empty.
    pub empty_balls: Vec<usize>,
    /// Probability mass of the letters with empty balls.
    pub uncovered_mass: f64,
}

/// Decides whether the constraint set of the given criterion is nonempty.
pub fn check_feasibility(ball: &BallTable, px: &[f64], mode: Mode, eps: f64) -> Feasibility {
    let empty_balls: Vec<usize> = (0..ball.m())
        .filter(|&x| px[x] > 0.0 && !ball.row(x).iter().any(|&b| b))
        .collect();
    let uncovered_mass: f64 = empty_balls.iter().map(|&x| px[x]).sum();
    let feasible = match mode {
        Mode::Guaranteed => empty_balls.is_empty(),
        Mode::CondExcess => eps >= 1.0 || empty_balls.is_empty(),
        Mode::Excess => uncovered_mass <= eps,
    };
    Feasibility {
        feasible,
        empty_balls,
        uncovered_mass,
    }
}

/// A probability distribution on the reproduction alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ReproductionDistribution(Vec<f64>);

impl ReproductionDistribution {
    pub fn new(py: Vec<f64>) -> Result<Self, ModelError> {
        validate_probability(&py).map(Self)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, y: usize) -> Self {
        let mut v = vec![0.0; n];
        v[y] = 1.0;
        Self(v)
    }

    /// Wraps a vector the caller has already normalized.
    pub(crate) fn from_normalized(py: Vec<f64>) -> Self {
        Self(py)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// A row-stochastic matrix `P_{Y|X}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ConditionalKernel {
    rows: Vec<Vec<f64>>,
}

impl ConditionalKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = rows.first().map_or(0, Vec::len);
        let mut out = Vec::with_capacity(rows.len());
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(ModelError::Dimension(format!(
                    "kernel row {row} has {} entries, expected {n}",
                    r.len()
                )));
            }
            out.push(validate_probability(&r).map_err(|_| ModelError::BadKernelRow { row })?);
        }
        Ok(Self { rows: out })
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Output marginal induced by the source distribution `px`.
    pub fn marginal(&self, px: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (row, &p) in self.rows.iter().zip(px) {
            if p > 0.0 {
                for (o, &k) in out.iter_mut().zip(row) {
                    *o += p * k;
                }
            }
        }
        out
    }

    /// Deterministic kernel of the map `x -> f[x]`.
    pub fn deterministic(f: &[usize], n: usize) -> Self {
        Self {
            rows: f
                .iter()
                .map(|&y| {
                    let mut r = vec![0.0; n];
                    r[y] = 1.0;
                    r
                })
                .collect(),
        }
    }
}

/// Per-source-letter probability of meeting the distortion threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaProfile {
    pub alpha: Vec<f64>,
    /// Typicality threshold on `P_Y(B_d(x))`.
    pub q: f64,
}

impl AlphaProfile {
    pub fn ones(m: usize) -> Self {
        Self {
            alpha: vec![1.0; m],
            q: 0.0,
        }
    }

    /// Constant-budget form `alpha(x) = 1 - eps(x)`.
    pub fn from_eps(eps: &[f64]) -> Self {
        Self {
            alpha: eps.iter().map(|e| 1.0 - e).collect(),
            q: 0.0,
        }
    }

    /// Implied per-letter excess probabilities `1 - alpha(x)`.
    pub fn eps_profile(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| 1.0 - a).collect()
    }

    /// `alpha(x) >= P_Y(B_d(x))` for every letter, up to `tol`.
    pub fn dominates(&self, ball_mass: &[f64], tol: f64) -> bool {
        self.alpha
            .iter()
            .zip(ball_mass)
            .all(|(&a, &b)| a + tol >= b)
    }

    /// `E[alpha(X)]`.
    pub fn mean(&self, px: &[f64]) -> f64 {
        self.alpha.iter().zip(px).map(|(a, p)| a * p).sum()
    }
}
