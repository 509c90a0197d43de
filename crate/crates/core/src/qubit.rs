//! Exact 2x2 complex linear algebra for single qubits.
//!
//! Every Hermitian 2x2 matrix is written in the Pauli basis as
//! `a0 I + a . sigma`, which gives its eigenvalues `a0 +- |a|` and its
//! spectral projectors `(I +- a_hat . sigma) / 2` in closed form. All matrix
//! functions used by the crate (square roots, inverse square roots, PSD
//! clipping) go through that decomposition.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the Bloch norm bound `|v| <= 1`.
pub const EPS_GEOM: f64 = 1e-12;
/// Entrywise slack for Hermiticity checks.
pub const EPS_HERM: f64 = 1e-12;
/// Slack on the unit-trace condition of density operators.
pub const EPS_TRACE: f64 = 1e-12;
/// Eigenvalues down to `-EPS_PSD` count as non-negative.
pub const EPS_PSD: f64 = 1e-12;
/// Entrywise slack on `sum_i E_i = I`.
pub const EPS_COMPLETE: f64 = 1e-10;
/// Probabilities down to `-EPS_PROB` are rounding noise and get clamped to 0.
pub const EPS_PROB: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexMatrix2 {
    pub entries: [[Complex64; 2]; 2],
}

impl ComplexMatrix2 {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let m = Self { entries };
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub const fn zero() -> Self {
        Self {
            entries: [[ZERO, ZERO], [ZERO, ZERO]],
        }
    }

    pub const fn identity() -> Self {
        Self {
            entries: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub const fn pauli_x() -> Self {
        Self {
            entries: [[ZERO, ONE], [ONE, ZERO]],
        }
    }

    pub fn pauli_y() -> Self {
        Self {
            entries: [[ZERO, -I], [I, ZERO]],
        }
    }

    pub fn pauli_z() -> Self {
        Self {
            entries: [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    /// `a0 I + a[0] sigma_x + a[1] sigma_y + a[2] sigma_z`.
    pub fn from_pauli(a0: f64, a: [f64; 3]) -> Self {
        Self {
            entries: [
                [Complex64::new(a0 + a[2], 0.0), Complex64::new(a[0], -a[1])],
                [Complex64::new(a[0], a[1]), Complex64::new(a0 - a[2], 0.0)],
            ],
        }
    }

    /// Pauli coefficients `(a0, a)` of the Hermitian part of the matrix.
    pub fn pauli_coefficients(&self) -> (f64, [f64; 3]) {
        let [[m00, m01], [m10, m11]] = self.entries;
        let a0 = 0.5 * (m00.re + m11.re);
        let ax = 0.5 * (m01.re + m10.re);
        let ay = 0.5 * (m10.im - m01.im);
        let az = 0.5 * (m00.re - m11.re);
        (a0, [ax, ay, az])
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        let [[a, b], [c, d]] = self.entries;
        Self {
            entries: [[a.conj(), c.conj()], [b.conj(), d.conj()]],
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        let [[a, b], [c, d]] = self.entries;
        a * d - b * c
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.entries.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Eigenvalues `(low, high)` of the Hermitian part, from trace and determinant.
    pub fn hermitian_eigenvalues(&self) -> (f64, f64) {
        let [[a, b], [c, d]] = self.entries;
        let half_trace = 0.5 * (a.re + d.re);
        let half_gap = 0.5 * (a.re - d.re);
        let off = 0.5 * (b + c.conj());
        let radius = (half_gap * half_gap + off.norm_sqr()).sqrt();
        (half_trace - radius, half_trace + radius)
    }

    /// Applies `f` to the spectrum of the Hermitian part.
    pub fn map_hermitian(&self, f: impl Fn(f64) -> f64) -> Self {
        let (a0, a) = self.pauli_coefficients();
        let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        if norm <= f64::EPSILON * a0.abs().max(1e-300) {
            return Self::identity().scale(f(a0));
        }
        let hi = f(a0 + norm);
        let lo = f(a0 - norm);
        let c0 = 0.5 * (hi + lo);
        let c1 = 0.5 * (hi - lo) / norm;
        Self::from_pauli(c0, [c1 * a[0], c1 * a[1], c1 * a[2]])
    }

    /// Nearest PSD matrix in Frobenius norm: negative eigenvalues set to zero.
    pub fn psd_clip(&self) -> Self {
        self.map_hermitian(|x| x.max(0.0))
    }

    /// Inverse square root of a positive definite Hermitian matrix, `None` if
    /// the smallest eigenvalue is below `floor`.
    pub fn inv_sqrt(&self, floor: f64) -> Option<Self> {
        let (lo, _) = self.hermitian_eigenvalues();
        (lo > floor).then(|| self.map_hermitian(|x| 1.0 / x.sqrt()))
    }

    pub fn sqrt_psd(&self) -> Self {
        self.map_hermitian(|x| x.max(0.0).sqrt())
    }

    /// `Re Tr(self * other)`.
    pub fn trace_product_re(&self, other: &Self) -> f64 {
        let a = &self.entries;
        let b = &other.entries;
        (a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]).re
    }

    /// `self * inner * self^dag`.
    pub fn sandwich(&self, inner: &Self) -> Self {
        *self * *inner * self.adjoint()
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for (o, r) in out.entries.iter_mut().flatten().zip(rhs.entries.iter().flatten()) {
            *o += r;
        }
        out
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(-1.0)
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.entries[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }
}

impl std::iter::Sum for ComplexMatrix2 {
    fn sum<It: Iterator<Item = Self>>(iter: It) -> Self {
        iter.fold(Self::zero(), |acc, m| acc + m)
    }
}

/// Real 3-vector parameterizing a qubit state, `|v| <= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        let norm = v.norm();
        if !norm.is_finite() || norm > 1.0 + EPS_GEOM {
            return Err(Error::UnphysicalBloch(norm));
        }
        Ok(v)
    }

    /// `radius (sin(theta) cos(phi), sin(theta) sin(phi), cos(theta))`.
    pub fn from_spherical(radius: f64, theta: f64, phi: f64) -> Result<Self> {
        Self::new(
            radius * theta.sin() * phi.cos(),
            radius * theta.sin() * phi.sin(),
            radius * theta.cos(),
        )
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn polar_angle(&self) -> f64 {
        let n = self.norm();
        if n == 0.0 {
            0.0
        } else {
            (self.z / n).clamp(-1.0, 1.0).acos()
        }
    }

    pub fn azimuth(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

/// Unit-trace, positive semidefinite, Hermitian 2x2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix2,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix2) -> Result<Self> {
        check_effect_like(&matrix)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > EPS_TRACE || tr.im.abs() > EPS_TRACE {
            return Err(Error::InvalidTrace(tr.re));
        }
        Ok(Self { matrix })
    }

    /// The maximally mixed state `I / 2`.
    pub fn maximally_mixed() -> Self {
        Self {
            matrix: ComplexMatrix2::identity().scale(0.5),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix2 {
        &self.matrix
    }

    /// Convex combination `w a + (1 - w) b`.
    pub fn mix(w: f64, a: &Self, b: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfRange {
                name: "weight",
                value: w,
                expected: "[0, 1]",
            });
        }
        Self::new(a.matrix.scale(w) + b.matrix.scale(1.0 - w))
    }
}

fn check_effect_like(m: &ComplexMatrix2) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let defect = m.hermiticity_defect();
    if defect > EPS_HERM {
        return Err(Error::NotHermitian(defect));
    }
    let (lo, _) = m.hermitian_eigenvalues();
    if lo < -EPS_PSD {
        return Err(Error::NotPositive(lo));
    }
    Ok(())
}

/// One positive semidefinite element of a POVM.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PovmEffect {
    matrix: ComplexMatrix2,
}

impl PovmEffect {
    pub fn new(matrix: ComplexMatrix2) -> Result<Self> {
        check_effect_like(&matrix)?;
        Ok(Self { matrix })
    }

    /// `weight (I + d . sigma)`; requires `weight >= 0` and `|d| <= 1`.
    pub fn from_bloch(weight: f64, direction: [f64; 3]) -> Result<Self> {
        let d = direction;
        Self::new(ComplexMatrix2::from_pauli(
            weight,
            [weight * d[0], weight * d[1], weight * d[2]],
        ))
    }

    pub fn matrix(&self) -> &ComplexMatrix2 {
        &self.matrix
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct EffectRepr {
    re: [[f64; 2]; 2],
    im: [[f64; 2]; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PovmRepr {
    #[serde(rename = "N")]
    n: usize,
    effects: Vec<EffectRepr>,
}

/// Serialized as `{"N": n, "effects": [{"re": [[..],[..]], "im": [[..],[..]]}, ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PovmRepr", into = "PovmRepr")]
pub struct Povm {
    effects: Vec<PovmEffect>,
}

impl Povm {
    pub fn new(effects: Vec<PovmEffect>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::EmptyPovm);
        }
        let total: ComplexMatrix2 = effects.iter().map(|e| e.matrix).sum();
        let deviation = total.max_abs_diff(&ComplexMatrix2::identity());
        if deviation > EPS_COMPLETE {
            return Err(Error::IncompletePovm(deviation));
        }
        Ok(Self { effects })
    }

    /// Builds a POVM from raw matrices, validating each effect.
    pub fn from_matrices(matrices: impl IntoIterator<Item = ComplexMatrix2>) -> Result<Self> {
        let effects = matrices
            .into_iter()
            .map(PovmEffect::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(effects)
    }

    pub fn effects(&self) -> &[PovmEffect] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// Largest entrywise deviation of `sum_i E_i` from the identity.
    pub fn completeness_defect(&self) -> f64 {
        let total: ComplexMatrix2 = self.effects.iter().map(|e| e.matrix).sum();
        total.max_abs_diff(&ComplexMatrix2::identity())
    }

    /// Effectwise convex mixture `w self + (1 - w) other`.
    pub fn mix(w: f64, a: &Self, b: &Self) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfRange {
                name: "weight",
                value: w,
                expected: "[0, 1]",
            });
        }
        Self::from_matrices(
            a.effects
                .iter()
                .zip(&b.effects)
                .map(|(x, y)| x.matrix.scale(w) + y.matrix.scale(1.0 - w)),
        )
    }

    /// `N` copies of `I / N`: the measurement that ignores its input.
    pub fn trivial(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyPovm);
        }
        Self::from_matrices((0..n).map(|_| ComplexMatrix2::identity().scale(1.0 / n as f64)))
    }
}

impl TryFrom<PovmRepr> for Povm {
    type Error = Error;
    fn try_from(r: PovmRepr) -> Result<Self> {
        if r.effects.len() != r.n {
            return Err(Error::DimensionMismatch {
                expected: r.n,
                got: r.effects.len(),
            });
        }
        Povm::from_matrices(r.effects.into_iter().map(|e| ComplexMatrix2 {
            entries: [
                [Complex64::new(e.re[0][0], e.im[0][0]), Complex64::new(e.re[0][1], e.im[0][1])],
                [Complex64::new(e.re[1][0], e.im[1][0]), Complex64::new(e.re[1][1], e.im[1][1])],
            ],
        }))
    }
}

impl From<Povm> for PovmRepr {
    fn from(p: Povm) -> Self {
        PovmRepr {
            n: p.len(),
            effects: p
                .effects
                .iter()
                .map(|e| {
                    let m = &e.matrix.entries;
                    EffectRepr {
                        re: [[m[0][0].re, m[0][1].re], [m[1][0].re, m[1][1].re]],
                        im: [[m[0][0].im, m[0][1].im], [m[1][0].im, m[1][1].im]],
                    }
                })
                .collect(),
        }
    }
}

/// `(1/2)(I + v . sigma)`.
pub fn bloch_to_density(v: &BlochVector) -> Result<DensityOperator> {
    let norm = v.norm();
    if norm > 1.0 + EPS_GEOM {
        return Err(Error::UnphysicalBloch(norm));
    }
    let m = ComplexMatrix2::from_pauli(0.5, [0.5 * v.x, 0.5 * v.y, 0.5 * v.z]);
    // Within EPS_GEOM of the sphere the low eigenvalue may dip below zero by
    // rounding; validation absorbs that through EPS_PSD.
    DensityOperator::new(m)
}

/// Components `Tr(rho sigma_k)`.
pub fn density_to_bloch(rho: &DensityOperator) -> BlochVector {
    let (_, a) = rho.matrix.pauli_coefficients();
    BlochVector {
        x: 2.0 * a[0],
        y: 2.0 * a[1],
        z: 2.0 * a[2],
    }
}

/// Born-rule outcome distribution `p_j = Re Tr(E_j rho)`.
pub fn born_probabilities(povm: &Povm, rho: &DensityOperator) -> Result<Vec<f64>> {
    let defect = povm.completeness_defect();
    if defect > EPS_COMPLETE {
        return Err(Error::IncompletePovm(defect));
    }
    povm.effects
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let value = e.matrix.trace_product_re(&rho.matrix);
            if value < -EPS_PROB {
                Err(Error::NegativeProbability { index, value })
            } else {
                Ok(value.clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// Optimal success probability for telling apart two equiprobable states:
/// `1/2 + (1/4) Tr|rho0 - rho1|`.
pub fn helstrom_guess_probability(rho0: &DensityOperator, rho1: &DensityOperator) -> f64 {
    let diff = rho0.matrix - rho1.matrix;
    let (lo, hi) = diff.hermitian_eigenvalues();
    0.5 + 0.25 * (lo.abs() + hi.abs())
}
