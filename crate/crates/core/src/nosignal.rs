//! Guessing bound from the shadow decomposition, the extremal channel `Q`, and
//! the admissible `(alpha, beta)` rectangle.

use std::f64::consts::PI;

use serde::Serialize;

use crate::discriminator::{fit_cosine_form, ChannelMatrix, CosineFit};
use crate::ensemble::{guessing_probability, make_shadow_decomposition, SymmetricEnsemble};
use crate::error::{Error, Result};

/// Max fit residual for a channel to count as cosine-form.
pub const COSINE_TOL: f64 = 1e-10;
/// Slack on the admissible-region endpoints and on the guessing bound.
pub const REGION_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    /// Common shadow weight `p` (1 for degenerate ensembles).
    pub p: f64,
    /// `sum_i p_i = N p`.
    pub sum_p: f64,
    /// Upper bound on `sum_i q_i P(i|i)` for any discriminator.
    pub bound: f64,
    /// Cosine coefficients of the channel that attains the bound.
    pub saturated_by: Option<CosineFit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdmissibleRegion {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl AdmissibleRegion {
    pub fn contains(&self, alpha: f64, beta: f64, slack: f64) -> bool {
        alpha >= self.alpha_min - slack
            && alpha <= self.alpha_max + slack
            && beta >= self.beta_min - slack
            && beta <= self.beta_max + slack
    }
}

/// `(1 / 2M)(1 + r sin(theta))`, computed as `1 / (N p)` from the shadow decomposition.
pub fn guessing_bound(e: &SymmetricEnsemble) -> BoundReport {
    let n = e.state_count() as f64;
    let (p, bound) = match make_shadow_decomposition(e) {
        Ok(sd) => (sd.mixing, 1.0 / sd.mixing_sum()),
        Err(_) => (1.0, 1.0 / n),
    };
    let region = admissible_region(e);
    BoundReport {
        p,
        sum_p: n * p,
        bound,
        saturated_by: Some(CosineFit {
            alpha: region.alpha_max,
            beta: region.beta_min,
            residual: 0.0,
        }),
    }
}

/// `Q(d) = (r sin(theta) / M) cos^2(d pi / 2M) + (1 - r sin(theta)) / 2M`.
pub fn q_channel(e: &SymmetricEnsemble) -> ChannelMatrix {
    let big_m = e.half_count() as f64;
    let s = e.transverse_radius();
    ChannelMatrix::from_fn(e.state_count(), |i, j| {
        let c = (i.abs_diff(j) as f64 * PI / (2.0 * big_m)).cos();
        s / big_m * c * c + (1.0 - s) / (2.0 * big_m)
    })
    .expect("Q rows sum to one in closed form")
}

pub fn admissible_region(e: &SymmetricEnsemble) -> AdmissibleRegion {
    let big_m = e.half_count() as f64;
    let s = e.transverse_radius();
    AdmissibleRegion {
        alpha_min: 0.0,
        alpha_max: s / big_m,
        beta_min: (1.0 - s) / (2.0 * big_m),
        beta_max: 1.0 / (2.0 * big_m),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum Verdict {
    Admissible { fit: CosineFit },
    /// Guesses better than any discriminator may; a signaling witness.
    ViolatesBound { guess: f64, bound: f64, fit: CosineFit },
    NotCosineForm { fit: CosineFit },
    /// Cosine-form and within the bound, but below the rectangle (`alpha < 0`):
    /// an anti-discriminating measurement. Not a signaling witness.
    OutsideRegion { fit: CosineFit },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Admissible { .. } => "admissible",
            Verdict::ViolatesBound { .. } => "violates_bound",
            Verdict::NotCosineForm { .. } => "not_cosine_form",
            Verdict::OutsideRegion { .. } => "outside_region",
        }
    }
}

/// Classifies a channel on the ensemble.
///
/// A channel whose uniform-prior guessing probability exceeds the bound is
/// `ViolatesBound` whatever its shape. Otherwise a channel that does not fit
/// the cosine form within [`COSINE_TOL`] is `NotCosineForm`, and a cosine
/// channel is tested against the admissible rectangle. Cosine channels with
/// `alpha < 0` obey the bound yet miss the rectangle: `OutsideRegion`.
pub fn check_channel_admissible(c: &ChannelMatrix, e: &SymmetricEnsemble) -> Result<Verdict> {
    if c.size() != e.state_count() {
        return Err(Error::DimensionMismatch {
            expected: e.state_count(),
            got: c.size(),
        });
    }
    let fit = fit_cosine_form(c, e)?;
    let guess = guessing_probability(c, &e.priors())?;
    let bound = guessing_bound(e).bound;
    if guess > bound + REGION_SLACK {
        return Ok(Verdict::ViolatesBound { guess, bound, fit });
    }
    if fit.residual > COSINE_TOL {
        return Ok(Verdict::NotCosineForm { fit });
    }
    let region = admissible_region(e);
    if region.contains(fit.alpha, fit.beta, REGION_SLACK) {
        Ok(Verdict::Admissible { fit })
    } else if fit.alpha > region.alpha_max + REGION_SLACK {
        Ok(Verdict::ViolatesBound { guess, bound, fit })
    } else {
        Ok(Verdict::OutsideRegion { fit })
    }
}
