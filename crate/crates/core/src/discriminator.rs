//! Channel matrices `P(j|i)` induced by discriminators on a symmetric ensemble,
//! their symmetrization, and the cosine-form check.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ensemble::{check_priors, decomposition_pair, mixing_coefficient, SymmetricEnsemble};
use crate::error::{Error, Result};
use crate::merit::{score, FigureOfMerit};
use crate::qubit::{born_probabilities, Povm};

/// Entries within this distance outside `[0, 1]` are rounding noise.
pub const ENTRY_SLACK: f64 = 1e-12;
/// Allowed deviation of a row sum from 1.
pub const ROW_SUM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ChannelRows {
    #[serde(rename = "N")]
    n: usize,
    rows: Vec<Vec<f64>>,
}

/// Row-stochastic `N x N` matrix, `entries[i * N + j] = P(j|i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRows", into = "ChannelRows")]
pub struct ChannelMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl TryFrom<ChannelRows> for ChannelMatrix {
    type Error = Error;
    fn try_from(c: ChannelRows) -> Result<Self> {
        if c.rows.len() != c.n {
            return Err(Error::DimensionMismatch {
                expected: c.n,
                got: c.rows.len(),
            });
        }
        ChannelMatrix::from_rows(c.rows)
    }
}

impl From<ChannelMatrix> for ChannelRows {
    fn from(c: ChannelMatrix) -> Self {
        ChannelRows {
            n: c.n,
            rows: c.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl ChannelMatrix {
    /// Validates and clamps a row-major matrix.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, v) in row.into_iter().enumerate() {
                if !v.is_finite() || !(-ENTRY_SLACK..=1.0 + ENTRY_SLACK).contains(&v) {
                    return Err(Error::EntryOutOfRange { row: i, col: j, value: v });
                }
                entries.push(v.clamp(0.0, 1.0));
            }
        }
        let c = Self { n, entries };
        for (row, values) in c.rows().enumerate() {
            let sum: f64 = values.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotStochastic { row, sum });
            }
        }
        Ok(c)
    }

    /// Builds a channel from `P(j|i) = f(i, j)`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::from_rows((0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect())
    }

    /// Circulant channel `P(j|i) = profile[(j - i) mod N]`.
    pub fn circulant(profile: &[f64]) -> Result<Self> {
        let n = profile.len();
        Self::from_fn(n, |i, j| profile[(j + n - i) % n])
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        (0..n).for_each(|i| entries[i * n + i] = 1.0);
        Self { n, entries }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            entries: vec![1.0 / n as f64; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `P(j|i)`, row = input `i`, column = output `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// `P(j|i)` with both indices taken mod `N`.
    pub fn get_mod(&self, i: usize, j: usize) -> f64 {
        self.get(i % self.n, j % self.n)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.n)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `w self + (1 - w) other`.
    pub fn mix(w: f64, a: &Self, b: &Self) -> Result<Self> {
        if a.n != b.n {
            return Err(Error::DimensionMismatch { expected: a.n, got: b.n });
        }
        Self::from_fn(a.n, |i, j| w * a.get(i, j) + (1.0 - w) * b.get(i, j))
    }

    /// Relabels outputs `j -> j + shift`: the new channel reports `j + shift`
    /// whenever the old one reported `j`.
    pub fn relabel_outputs(&self, shift: usize) -> Self {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + (j + shift) % n] = self.get(i, j);
            }
        }
        Self { n, entries }
    }

    /// Largest `|P(j|i) - P(i|j)|` and `|P(j|i) - P(j+n|i+n)|` over all indices.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
                worst = worst.max((self.get(i, j) - self.get_mod(i + 1, j + 1)).abs());
            }
        }
        worst
    }
}

/// Born-rule channel `P(j|i) = Re Tr(E_j rho_i)`.
pub fn channel_from_measurement(povm: &Povm, e: &SymmetricEnsemble) -> Result<ChannelMatrix> {
    let n = e.state_count();
    if povm.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: povm.len(),
        });
    }
    let rows = e
        .states()
        .iter()
        .map(|rho| born_probabilities(povm, rho))
        .collect::<Result<Vec<_>>>()?;
    ChannelMatrix::from_rows(rows)
}

/// `P'(j|i) = (1/2N) [sum_n P(j+n | i+n) + sum_m P(i+m | j+m)]`, indices mod `N`.
pub fn symmetrize(c: &ChannelMatrix) -> ChannelMatrix {
    let n = c.size();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let forward: f64 = (0..n).map(|k| c.get_mod(i + k, j + k)).sum();
            let backward: f64 = (0..n).map(|k| c.get_mod(j + k, i + k)).sum();
            entries[i * n + j] = (forward + backward) / (2 * n) as f64;
        }
    }
    ChannelMatrix { n, entries }
}

/// `(score(c), score(symmetrize(c)))` under uniform priors.
pub fn check_score_invariance(
    c: &ChannelMatrix,
    f: &FigureOfMerit,
    priors: &[f64],
) -> Result<(f64, f64)> {
    check_priors(priors)?;
    let uniform = 1.0 / priors.len() as f64;
    if priors.iter().any(|q| (q - uniform).abs() > 1e-12) {
        return Err(Error::NonUniformPriors);
    }
    let before = score(c, f, priors)?.score;
    let after = score(&symmetrize(c), f, priors)?.score;
    Ok((before, after))
}

/// Largest residual of
/// `(1/2) P(k|s+m) + (1/2) P(k|s-m) - p P(k|s) - (1-p) P(k|s+M)`
/// over outputs `k`, frames `s` and `m in 1..M`.
pub fn check_nosignaling_constraint(c: &ChannelMatrix, e: &SymmetricEnsemble) -> Result<f64> {
    let n = e.state_count();
    let big_m = e.half_count();
    if c.size() != n {
        return Err(Error::DimensionMismatch { expected: n, got: c.size() });
    }
    let mut worst: f64 = 0.0;
    for m in 1..big_m {
        let p = mixing_coefficient(m, big_m)?;
        for s in 0..n {
            for k in 0..n {
                let left = 0.5 * c.get_mod(s + m, k) + 0.5 * c.get_mod(s + n - m, k);
                let right = p * c.get_mod(s, k) + (1.0 - p) * c.get_mod(s + big_m, k);
                worst = worst.max((left - right).abs());
            }
        }
    }
    Ok(worst)
}

/// Coefficients of `P(j|i) = alpha cos^2(|i - j| pi / 2M) + beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineFit {
    pub alpha: f64,
    pub beta: f64,
    /// Max absolute deviation of the channel from the reconstructed form.
    pub residual: f64,
}

impl CosineFit {
    /// `A = P(0|0) = alpha + beta`.
    pub fn peak(&self) -> f64 {
        self.alpha + self.beta
    }

    pub fn value(&self, distance: usize, half_count: usize) -> f64 {
        let c = (distance as f64 * PI / (2.0 * half_count as f64)).cos();
        self.alpha * c * c + self.beta
    }
}

/// Reads `alpha = P(0|0) - P(0|M)` and `beta = P(0|M)`, then measures how far
/// every entry is from the implied cosine profile.
pub fn fit_cosine_form(c: &ChannelMatrix, e: &SymmetricEnsemble) -> Result<CosineFit> {
    let n = e.state_count();
    let big_m = e.half_count();
    if c.size() != n {
        return Err(Error::DimensionMismatch { expected: n, got: c.size() });
    }
    let beta = c.get(big_m, 0);
    let alpha = c.get(0, 0) - beta;
    let mut fit = CosineFit { alpha, beta, residual: 0.0 };
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            residual = residual.max((c.get(i, j) - fit.value(i.abs_diff(j), big_m)).abs());
        }
    }
    fit.residual = residual;
    Ok(fit)
}

/// Both sides of the decomposition identity pushed through a POVM: the
/// outcome distributions of `(rho_{s+m} + rho_{s-m}) / 2` and `p rho_s + (1-p) rho_{s+M}`.
pub fn decomposition_outcomes(
    povm: &Povm,
    e: &SymmetricEnsemble,
    m: usize,
    shift: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (left, right) = decomposition_pair(e, m, shift)?;
    let left = crate::qubit::DensityOperator::new(left)?;
    let right = crate::qubit::DensityOperator::new(right)?;
    Ok((born_probabilities(povm, &left)?, born_probabilities(povm, &right)?))
}
