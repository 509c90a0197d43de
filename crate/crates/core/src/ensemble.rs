//! Symmetric qubit ensembles: `2M` states with common Bloch radius and polar
//! angle, evenly spaced in azimuth, drawn with uniform priors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::discriminator::ChannelMatrix;
use crate::error::{Error, Result};
use crate::qubit::{bloch_to_density, BlochVector, ComplexMatrix2, DensityOperator, EPS_GEOM};

/// Below this value of `r sin(theta)` an ensemble has no transverse spread.
pub const DEGENERACY_EPS: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    #[serde(rename = "M")]
    pub half_count: usize,
    pub r: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleParams", into = "EnsembleParams")]
pub struct SymmetricEnsemble {
    half_count: usize,
    radius: f64,
    polar_angle: f64,
    states: Vec<DensityOperator>,
}

impl TryFrom<EnsembleParams> for SymmetricEnsemble {
    type Error = Error;
    fn try_from(p: EnsembleParams) -> Result<Self> {
        make_symmetric_ensemble(p.half_count, p.r, p.theta)
    }
}

impl From<SymmetricEnsemble> for EnsembleParams {
    fn from(e: SymmetricEnsemble) -> Self {
        e.params()
    }
}

/// Builds the ensemble `rho_i = (1/2)(I + r_i . sigma)` with
/// `r_i = r (sin(theta) cos(phi_i), sin(theta) sin(phi_i), cos(theta))`, `phi_i = pi i / M`.
pub fn make_symmetric_ensemble(half_count: usize, r: f64, theta: f64) -> Result<SymmetricEnsemble> {
    if half_count == 0 {
        return Err(Error::OutOfRange {
            name: "M",
            value: 0.0,
            expected: "M >= 1",
        });
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            expected: "[0, 1]",
        });
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            expected: "[0, pi]",
        });
    }
    let states = (0..2 * half_count)
        .map(|i| {
            let phi = PI * i as f64 / half_count as f64;
            bloch_to_density(&BlochVector::from_spherical(r, theta, phi)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SymmetricEnsemble {
        half_count,
        radius: r,
        polar_angle: theta,
        states,
    })
}

impl SymmetricEnsemble {
    pub fn params(&self) -> EnsembleParams {
        EnsembleParams {
            half_count: self.half_count,
            r: self.radius,
            theta: self.polar_angle,
        }
    }

    /// `M`.
    pub fn half_count(&self) -> usize {
        self.half_count
    }

    /// `N = 2M`.
    pub fn state_count(&self) -> usize {
        2 * self.half_count
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn polar_angle(&self) -> f64 {
        self.polar_angle
    }

    /// `r |sin(theta)|`, the length of each Bloch vector's projection onto the xy plane.
    pub fn transverse_radius(&self) -> f64 {
        self.radius * self.polar_angle.sin().abs()
    }

    pub fn is_degenerate(&self) -> bool {
        self.transverse_radius() <= DEGENERACY_EPS
    }

    pub fn priors(&self) -> Vec<f64> {
        vec![1.0 / self.state_count() as f64; self.state_count()]
    }

    /// `phi_i = pi i / M`, index taken mod `N`.
    pub fn azimuth(&self, i: usize) -> f64 {
        PI * (i % self.state_count()) as f64 / self.half_count as f64
    }

    /// State `i mod N`.
    pub fn state(&self, i: usize) -> &DensityOperator {
        &self.states[i % self.state_count()]
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn bloch(&self, i: usize) -> BlochVector {
        crate::qubit::density_to_bloch(self.state(i))
    }
}

/// `cos^2(pi m / (2M))`, the weight with which `(rho_m + rho_{2M-m}) / 2` splits
/// into `rho_0` and `rho_M`.
pub fn mixing_coefficient(m: usize, half_count: usize) -> Result<f64> {
    if m == 0 || m >= half_count {
        return Err(Error::OutOfRange {
            name: "m",
            value: m as f64,
            expected: "1 <= m <= M-1",
        });
    }
    let c = (PI * m as f64 / (2.0 * half_count as f64)).cos();
    Ok(c * c)
}

/// Max entrywise residual of `(1/2) rho_m + (1/2) rho_{2M-m} = p rho_0 + (1-p) rho_M`.
pub fn verify_decomposition_identity(e: &SymmetricEnsemble, m: usize) -> Result<f64> {
    let (left, right) = decomposition_pair(e, m, 0)?;
    Ok(left.max_abs_diff(&right))
}

/// Both sides of the decomposition identity in the frame rotated by `shift`
/// states: `((rho_{s+m} + rho_{s-m}) / 2, p rho_s + (1-p) rho_{s+M})`.
pub fn decomposition_pair(
    e: &SymmetricEnsemble,
    m: usize,
    shift: usize,
) -> Result<(ComplexMatrix2, ComplexMatrix2)> {
    let big_m = e.half_count();
    let n = e.state_count();
    let p = mixing_coefficient(m, big_m)?;
    let s = shift % n;
    let left = (*e.state(s + m).matrix() + *e.state(s + n - m).matrix()).scale(0.5);
    let right = e.state(s).matrix().scale(p) + e.state(s + big_m).matrix().scale(1.0 - p);
    Ok((left, right))
}

/// Shadow states completing every ensemble member to one common operator:
/// `p rho_i + (1 - p) sigma_i = L` for all `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowDecomposition {
    pub mixing: f64,
    pub shadows: Vec<DensityOperator>,
    pub common_state: DensityOperator,
}

impl ShadowDecomposition {
    /// Max entrywise deviation of `p rho_i + (1 - p) sigma_i` from `L` over all `i`.
    pub fn residual(&self, e: &SymmetricEnsemble) -> f64 {
        e.states()
            .iter()
            .zip(&self.shadows)
            .map(|(rho, sigma)| {
                let mixed = rho.matrix().scale(self.mixing) + sigma.matrix().scale(1.0 - self.mixing);
                mixed.max_abs_diff(self.common_state.matrix())
            })
            .fold(0.0, f64::max)
    }

    /// `sum_i p_i`, which is `N p` for equal priors.
    pub fn mixing_sum(&self) -> f64 {
        self.mixing * self.shadows.len() as f64
    }
}

/// `p = 1 / (1 + r sin(theta))`, `sigma_i` the pure equatorial state antipodal to
/// the azimuth of `rho_i`, and `L = (1/2)(I + p r cos(theta) sigma_z)`.
pub fn make_shadow_decomposition(e: &SymmetricEnsemble) -> Result<ShadowDecomposition> {
    if e.is_degenerate() {
        return Err(Error::DegenerateEnsemble);
    }
    let p = 1.0 / (1.0 + e.transverse_radius());
    let shadows = (0..e.state_count())
        .map(|i| {
            let phi = e.azimuth(i);
            bloch_to_density(&BlochVector::new(-phi.cos(), -phi.sin(), 0.0)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let lz = p * e.radius() * e.polar_angle().cos();
    let common_state = bloch_to_density(&BlochVector::new(0.0, 0.0, lz)?)?;
    debug_assert!(lz.abs() <= 1.0 + EPS_GEOM);
    Ok(ShadowDecomposition {
        mixing: p,
        shadows,
        common_state,
    })
}

/// `sum_i q_i P(i|i)`.
pub fn guessing_probability(channel: &ChannelMatrix, priors: &[f64]) -> Result<f64> {
    let n = channel.size();
    if priors.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: priors.len(),
        });
    }
    check_priors(priors)?;
    Ok(priors.iter().enumerate().map(|(i, q)| q * channel.get(i, i)).sum())
}

pub(crate) fn check_priors(priors: &[f64]) -> Result<()> {
    let sum: f64 = priors.iter().sum();
    if priors.iter().any(|q| !(0.0..=1.0).contains(q)) || (sum - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidPriors(sum));
    }
    Ok(())
}
