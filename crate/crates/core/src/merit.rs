//! Symmetric figures of merit `f(i, j)` and the average scores they induce.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::discriminator::ChannelMatrix;
use crate::ensemble::check_priors;
use crate::error::{Error, Result};

/// Score matrix over (prepared, guessed) index pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureOfMerit {
    n: usize,
    scores: Vec<f64>,
}

/// On-disk forms accepted for a merit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeritSpec {
    Profile {
        #[serde(rename = "N")]
        n: usize,
        profile: Vec<f64>,
    },
    Matrix {
        #[serde(rename = "N")]
        n: usize,
        matrix: Vec<Vec<f64>>,
    },
}

impl MeritSpec {
    /// Builds the merit and rejects anything that is not symmetric.
    pub fn build(&self) -> Result<FigureOfMerit> {
        let f = match self {
            MeritSpec::Profile { n, profile } => {
                if profile.len() != *n {
                    return Err(Error::DimensionMismatch {
                        expected: *n,
                        got: profile.len(),
                    });
                }
                make_fom(profile)?
            }
            MeritSpec::Matrix { n, matrix } => {
                if matrix.len() != *n {
                    return Err(Error::DimensionMismatch {
                        expected: *n,
                        got: matrix.len(),
                    });
                }
                FigureOfMerit::from_matrix(matrix.clone())?
            }
        };
        let violations = validate_fom(&f);
        if let Some(v) = violations.first() {
            return Err(Error::InvalidMerit(format!(
                "{} symmetry violation(s), first: {v:?}",
                violations.len()
            )));
        }
        Ok(f)
    }
}

impl FigureOfMerit {
    /// Wraps an arbitrary finite square matrix; symmetry is checked by [`validate_fom`].
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidMerit("empty matrix".into()));
        }
        let mut scores = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMerit("non-finite score".into()));
            }
            scores.extend(row);
        }
        Ok(Self { n, scores })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[(i % self.n) * self.n + j % self.n]
    }

    /// `g(d) = f(0, d)` for `d = 0..N`.
    pub fn profile(&self) -> Vec<f64> {
        (0..self.n).map(|d| self.get(0, d)).collect()
    }

    pub fn to_spec(&self) -> MeritSpec {
        MeritSpec::Profile {
            n: self.n,
            profile: self.profile(),
        }
    }
}

/// `min(d, N - d)` for `d = j - i mod N`.
pub fn circular_distance(i: usize, j: usize, n: usize) -> usize {
    let d = (j + n - i % n) % n;
    d.min(n - d)
}

/// `f(i, j) = g((j - i) mod N)`; requires `g(d) = g(N - d)`.
pub fn make_fom(profile: &[f64]) -> Result<FigureOfMerit> {
    let n = profile.len();
    if n == 0 {
        return Err(Error::InvalidMerit("empty profile".into()));
    }
    if profile.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMerit("non-finite score".into()));
    }
    for d in 1..n {
        if profile[d] != profile[n - d] {
            return Err(Error::InvalidMerit(format!(
                "profile breaks g(d) = g(N-d) at d = {d}: {} vs {}",
                profile[d],
                profile[n - d]
            )));
        }
    }
    let scores = (0..n)
        .flat_map(|i| (0..n).map(move |j| profile[(j + n - i) % n]))
        .collect();
    Ok(FigureOfMerit { n, scores })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum MeritViolation {
    /// `f(i, j) != f(j, i)`.
    Exchange { i: usize, j: usize },
    /// `f(i, j) != f(i + 1, j + 1)` (mod N).
    Covariance { i: usize, j: usize },
}

/// Lists exact violations of exchange symmetry and cyclic covariance. Each
/// unordered pair is reported once for exchange; covariance is checked for
/// the unit shift, which generates all others.
pub fn validate_fom(f: &FigureOfMerit) -> Vec<MeritViolation> {
    let n = f.n;
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if f.get(i, j) != f.get(j, i) {
                out.push(MeritViolation::Exchange { i, j });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if f.get(i, j) != f.get(i + 1, j + 1) {
                out.push(MeritViolation::Covariance { i, j });
            }
        }
    }
    out
}

/// Non-increasing distance profile on `0..=N/2` with at least one strict drop.
pub fn is_monotonous(f: &FigureOfMerit) -> bool {
    let g = f.profile();
    let half = f.n / 2;
    let steps: Vec<f64> = (0..half).map(|d| g[d + 1] - g[d]).collect();
    steps.iter().all(|&s| s <= 0.0) && steps.iter().any(|&s| s < 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinMerit {
    /// `g(d) = [d = 0]`, minimum-error discrimination.
    Delta,
    /// `g(d) = cos^2(d pi / N)`.
    CosineSquared,
    /// `g(d) = 1 - 2d/N`.
    LinearDecay,
    Constant,
    /// `g(d) = [d = 1]`, rewards guesses one step away.
    Neighbor,
}

impl BuiltinMerit {
    pub const MONOTONOUS: [BuiltinMerit; 3] = [Self::Delta, Self::CosineSquared, Self::LinearDecay];

    pub fn name(self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::CosineSquared => "cos2",
            Self::LinearDecay => "linear",
            Self::Constant => "constant",
            Self::Neighbor => "neighbor",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            Self::Delta,
            Self::CosineSquared,
            Self::LinearDecay,
            Self::Constant,
            Self::Neighbor,
        ]
        .into_iter()
        .find(|b| b.name() == name)
    }

    /// Profile over `d = 0..N` in circular distance.
    pub fn profile(self, n: usize) -> Vec<f64> {
        let half = (n / 2).max(1) as f64;
        (0..n)
            .map(|k| {
                let d = circular_distance(0, k, n);
                match self {
                    Self::Delta => (d == 0) as u8 as f64,
                    Self::CosineSquared => {
                        let c = (d as f64 * PI / (2.0 * half)).cos();
                        c * c
                    }
                    Self::LinearDecay => 1.0 - d as f64 / half,
                    Self::Constant => 1.0,
                    Self::Neighbor => (d == 1) as u8 as f64,
                }
            })
            .collect()
    }

    pub fn build(self, n: usize) -> FigureOfMerit {
        make_fom(&self.profile(n)).expect("builtin profiles are symmetric")
    }
}

/// Average score `S` and its per-input split.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreReport {
    pub score: f64,
    /// `q_i sum_j f(i, j) P(j|i)`.
    pub per_input: Vec<f64>,
}

/// `S = sum_i q_i sum_j f(i, j) P(j|i)`.
pub fn score(channel: &ChannelMatrix, f: &FigureOfMerit, priors: &[f64]) -> Result<ScoreReport> {
    let n = channel.size();
    if f.size() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.size() });
    }
    if priors.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: priors.len(),
        });
    }
    check_priors(priors)?;
    let per_input: Vec<f64> = (0..n)
        .map(|i| priors[i] * (0..n).map(|j| f.get(i, j) * channel.get(i, j)).sum::<f64>())
        .collect();
    Ok(ScoreReport {
        score: per_input.iter().sum(),
        per_input,
    })
}

/// Shannon mutual information (bits) of the joint law `q_i P(j|i)`.
pub fn mutual_information(channel: &ChannelMatrix, priors: &[f64]) -> Result<f64> {
    let n = channel.size();
    if priors.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: priors.len(),
        });
    }
    check_priors(priors)?;
    let output: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| priors[i] * channel.get(i, j)).sum())
        .collect();
    let mut info = 0.0;
    for i in 0..n {
        for j in 0..n {
            let joint = priors[i] * channel.get(i, j);
            if joint > 0.0 {
                info += joint * (channel.get(i, j) / output[j]).log2();
            }
        }
    }
    Ok(info.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::guessing_probability;

    #[test]
    fn delta_profile_builds_kronecker_delta() {
        let f = make_fom(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(f.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        assert!(validate_fom(&f).is_empty());
        assert_eq!(BuiltinMerit::Delta.build(4), f);
    }

    #[test]
    fn rejects_asymmetric_profile() {
        assert!(matches!(make_fom(&[1.0, 0.5, 0.0, 0.0]), Err(Error::InvalidMerit(_))));
        assert!(make_fom(&[]).is_err());
    }

    #[test]
    fn validation_reports_violations() {
        let mut rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        rows[0][1] = 0.5;
        let f = FigureOfMerit::from_matrix(rows).unwrap();
        let v = validate_fom(&f);
        let exchange: Vec<_> = v.iter().filter(|x| matches!(x, MeritViolation::Exchange { .. })).collect();
        assert_eq!(exchange, vec![&MeritViolation::Exchange { i: 0, j: 1 }]);

        // Symmetric but not circulant.
        let f = FigureOfMerit::from_matrix(vec![
            vec![2.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let v = validate_fom(&f);
        assert!(!v.is_empty());
        assert!(v.iter().all(|x| matches!(x, MeritViolation::Covariance { .. })));
    }

    #[test]
    fn monotonicity() {
        for n in [2, 4, 6, 10] {
            assert!(is_monotonous(&BuiltinMerit::Delta.build(n)));
            assert!(is_monotonous(&BuiltinMerit::CosineSquared.build(n)));
            assert!(is_monotonous(&BuiltinMerit::LinearDecay.build(n)));
            assert!(!is_monotonous(&BuiltinMerit::Constant.build(n)));
        }
        assert!(!is_monotonous(&BuiltinMerit::Neighbor.build(6)));
    }

    #[test]
    fn builtin_names_round_trip() {
        for b in [
            BuiltinMerit::Delta,
            BuiltinMerit::CosineSquared,
            BuiltinMerit::LinearDecay,
            BuiltinMerit::Constant,
            BuiltinMerit::Neighbor,
        ] {
            assert_eq!(BuiltinMerit::parse(b.name()), Some(b));
        }
        assert_eq!(BuiltinMerit::parse("fidelity"), None);
    }

    #[test]
    fn delta_score_is_guessing_probability() {
        let c = ChannelMatrix::from_rows(vec![
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.6, 0.3],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        let priors = [0.2, 0.5, 0.3];
        let s = score(&c, &BuiltinMerit::Delta.build(3), &priors).unwrap();
        assert!((s.score - guessing_probability(&c, &priors).unwrap()).abs() < 1e-15);
        assert!((s.score - s.per_input.iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn uniform_channel_scores_profile_mean() {
        let profile = [0.9, 0.4, -0.2, 0.1, -0.2, 0.4];
        let f = make_fom(&profile).unwrap();
        let s = score(&ChannelMatrix::uniform(6), &f, &[1.0 / 6.0; 6]).unwrap();
        let mean: f64 = profile.iter().sum::<f64>() / 6.0;
        assert!((s.score - mean).abs() < 1e-15);
        let s = score(&ChannelMatrix::identity(6), &BuiltinMerit::Constant.build(6), &[1.0 / 6.0; 6]).unwrap();
        assert!((s.score - 1.0).abs() < 1e-15);
    }

    #[test]
    fn score_dimension_checks() {
        let f = BuiltinMerit::Delta.build(4);
        assert!(score(&ChannelMatrix::uniform(3), &f, &[1.0 / 3.0; 3]).is_err());
        assert!(score(&ChannelMatrix::uniform(4), &f, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let mi = mutual_information(&ChannelMatrix::identity(4), &[0.25; 4]).unwrap();
        assert!((mi - 2.0).abs() < 1e-15);
        let mi = mutual_information(&ChannelMatrix::uniform(4), &[0.25; 4]).unwrap();
        assert!(mi.abs() < 1e-15);
        // Binary symmetric channel with crossover 0.1: 1 - h(0.1).
        let bsc = ChannelMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let h = -(0.1f64 * 0.1f64.log2() + 0.9 * 0.9f64.log2());
        assert!((mutual_information(&bsc, &[0.5, 0.5]).unwrap() - (1.0 - h)).abs() < 1e-14);
    }

    #[test]
    fn spec_json_forms() {
        let p: MeritSpec = serde_json::from_str(r#"{"N":4,"profile":[1,0,0,0]}"#).unwrap();
        assert_eq!(p.build().unwrap(), BuiltinMerit::Delta.build(4));
        let m: MeritSpec =
            serde_json::from_str(r#"{"N":2,"matrix":[[1,0.5],[0.5,1]]}"#).unwrap();
        assert_eq!(m.build().unwrap().profile(), vec![1.0, 0.5]);
        let bad: MeritSpec = serde_json::from_str(r#"{"N":2,"matrix":[[1,0.5],[0.4,1]]}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
