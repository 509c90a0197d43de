//! The equatorial symmetric POVM, random POVM generators, and two independent
//! score maximizers over measurements.
//!
//! [`optimize_covariant`] searches the covariant family generated by one seed
//! effect; [`optimize_general`] runs projected gradient ascent over all
//! `N`-outcome POVMs. Agreement between them, and with the score of the
//! extremal channel, is the numerical evidence that the symmetric POVM is
//! optimal for monotonous merits.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::discriminator::channel_from_measurement;
use crate::ensemble::SymmetricEnsemble;
use crate::error::{Error, Result};
use crate::merit::FigureOfMerit;
use crate::nosignal::q_channel;
use crate::qubit::{ComplexMatrix2, Povm, PovmEffect};

const MAX_SEED_RETRIES: usize = 10;
/// Orbit sums with smallest eigenvalue below this are treated as singular.
const SINGULAR_FLOOR: f64 = 1e-9;

/// `E_i = (1/2M)(I + d_i . sigma)`, `d_i = (cos(pi i/M), sin(pi i/M), 0)`.
pub fn symmetric_povm(e: &SymmetricEnsemble) -> Povm {
    equatorial_povm(e.state_count(), 0.0)
}

/// Equatorial covariant POVM with its first effect pointing at azimuth `offset`.
pub fn equatorial_povm(n: usize, offset: f64) -> Povm {
    let effects = (0..n)
        .map(|i| {
            let a = offset + 2.0 * PI * i as f64 / n as f64;
            PovmEffect::from_bloch(1.0 / n as f64, [a.cos(), a.sin(), 0.0])
                .expect("unit equatorial direction")
        })
        .collect();
    Povm::new(effects).expect("equatorial directions sum to zero")
}

/// Max entrywise gap between the symmetric POVM's channel and `Q`.
pub fn verify_optimal_channel(e: &SymmetricEnsemble) -> Result<f64> {
    let c = channel_from_measurement(&symmetric_povm(e), e)?;
    Ok(c.max_abs_diff(&q_channel(e)))
}

/// Unitary that rotates Bloch vectors about `z` by `angle`.
pub fn z_rotation(angle: f64) -> ComplexMatrix2 {
    use num_complex::Complex64;
    let h = 0.5 * angle;
    ComplexMatrix2 {
        entries: [
            [Complex64::from_polar(1.0, -h), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, h)],
        ],
    }
}

/// A seed effect whose orbit under the `N`-fold azimuthal rotation group,
/// after normalization, forms a covariant POVM.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariantPovmSeed {
    pub seed_effect: PovmEffect,
    pub group_order: usize,
}

impl CovariantPovmSeed {
    /// `G = sum_i U_i F U_i^dag`.
    pub fn orbit_sum(&self) -> ComplexMatrix2 {
        let n = self.group_order;
        (0..n)
            .map(|i| z_rotation(2.0 * PI * i as f64 / n as f64).sandwich(self.seed_effect.matrix()))
            .sum()
    }

    /// `{U_i G^{-1/2} F G^{-1/2} U_i^dag}`; fails if `G` is singular.
    pub fn povm(&self) -> Result<Povm> {
        let n = self.group_order;
        let g = self.orbit_sum();
        let g_inv_sqrt = g.inv_sqrt(SINGULAR_FLOOR).ok_or(Error::SingularOrbit(1))?;
        let base = g_inv_sqrt.sandwich(self.seed_effect.matrix());
        Povm::from_matrices((0..n).map(|i| z_rotation(2.0 * PI * i as f64 / n as f64).sandwich(&base)))
    }
}

fn random_ball(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        ];
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

/// Random positive operator `w (I + v . sigma)` with `w` in `(0, 1]`, `v` uniform in the ball.
fn random_positive(rng: &mut impl Rng) -> ComplexMatrix2 {
    let w: f64 = 1.0 - rng.gen::<f64>();
    let v = random_ball(rng);
    ComplexMatrix2::from_pauli(w, [w * v[0], w * v[1], w * v[2]])
}

/// Covariant POVM from a random positive seed; retries singular orbit sums.
pub fn random_covariant_povm(n: usize, rng_seed: u64) -> Result<Povm> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    random_covariant_povm_with(n, &mut rng)
}

fn random_covariant_povm_with(n: usize, rng: &mut impl Rng) -> Result<Povm> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::OutOfRange {
            name: "N",
            value: n as f64,
            expected: "even, >= 2",
        });
    }
    for _ in 0..MAX_SEED_RETRIES {
        let seed = CovariantPovmSeed {
            seed_effect: PovmEffect::new(random_positive(rng))?,
            group_order: n,
        };
        match seed.povm() {
            Ok(p) => return Ok(p),
            Err(Error::SingularOrbit(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SingularOrbit(MAX_SEED_RETRIES))
}

/// Generic `n`-outcome POVM `T^{-1/2} F_k T^{-1/2}` from random positive `F_k`.
pub fn random_povm(n: usize, rng_seed: u64) -> Result<Povm> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    random_povm_with(n, &mut rng)
}

fn random_povm_with(n: usize, rng: &mut impl Rng) -> Result<Povm> {
    if n == 0 {
        return Err(Error::EmptyPovm);
    }
    for _ in 0..MAX_SEED_RETRIES {
        let raw: Vec<ComplexMatrix2> = (0..n).map(|_| random_positive(rng)).collect();
        if let Some(p) = normalize_effects(&raw) {
            return Povm::from_matrices(p);
        }
    }
    Err(Error::SingularOrbit(MAX_SEED_RETRIES))
}

/// Sandwiches by `T^{-1/2}`, `T = sum_k F_k`, so the results sum to identity.
fn normalize_effects(raw: &[ComplexMatrix2]) -> Option<Vec<ComplexMatrix2>> {
    let total: ComplexMatrix2 = raw.iter().copied().sum();
    let t = total.inv_sqrt(SINGULAR_FLOOR)?;
    Some(raw.iter().map(|f| hermitize(t.sandwich(f))).collect())
}

fn hermitize(m: ComplexMatrix2) -> ComplexMatrix2 {
    (m + m.adjoint()).scale(0.5)
}

/// `R_j = sum_i q_i f(i, j) rho_i`; the score of a POVM is `sum_j Re Tr(E_j R_j)`.
pub fn score_operators(e: &SymmetricEnsemble, f: &FigureOfMerit) -> Result<Vec<ComplexMatrix2>> {
    let n = e.state_count();
    if f.size() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.size() });
    }
    let q = 1.0 / n as f64;
    Ok((0..n)
        .map(|j| (0..n).map(|i| e.state(i).matrix().scale(q * f.get(i, j))).sum())
        .collect())
}

fn povm_score(effects: &[ComplexMatrix2], ops: &[ComplexMatrix2]) -> f64 {
    effects.iter().zip(ops).map(|(e, r)| e.trace_product_re(r)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub povm: Povm,
    pub score: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best score after each iteration; non-decreasing.
    pub trace: Vec<f64>,
}

/// Seed direction `radius (sin(polar) cos(azimuth), sin(polar) sin(azimuth), cos(polar))`.
fn covariant_from_params(n: usize, params: [f64; 3]) -> Option<Povm> {
    let [radius, polar, azimuth] = params;
    let d = [
        radius * polar.sin() * azimuth.cos(),
        radius * polar.sin() * azimuth.sin(),
        radius * polar.cos(),
    ];
    let seed = CovariantPovmSeed {
        seed_effect: PovmEffect::from_bloch(1.0 / n as f64, d).ok()?,
        group_order: n,
    };
    seed.povm().ok()
}

fn effect_matrices(p: &Povm) -> Vec<ComplexMatrix2> {
    p.effects().iter().map(|e| *e.matrix()).collect()
}

/// Maximizes the score over covariant POVMs generated by a seed
/// `(1/N)(I + e . sigma)`, `|e| <= 1`: dense grid in (radius, polar, azimuth),
/// then compass-search refinement from the best grid point.
pub fn optimize_covariant(e: &SymmetricEnsemble, f: &FigureOfMerit) -> Result<OptimizationResult> {
    const RADII: usize = 8;
    const POLARS: usize = 12;
    const AZIMUTHS: usize = 48;
    const MIN_STEP: f64 = 1e-11;
    const MAX_ROUNDS: usize = 5000;

    let n = e.state_count();
    let ops = score_operators(e, f)?;
    let eval = |params: [f64; 3]| -> Option<(f64, Povm)> {
        let p = covariant_from_params(n, params)?;
        Some((povm_score(&effect_matrices(&p), &ops), p))
    };

    let mut best: Option<([f64; 3], f64, Povm)> = None;
    for ri in 1..=RADII {
        let radius = ri as f64 / RADII as f64;
        for pi_ in 0..=POLARS {
            let polar = PI * pi_ as f64 / POLARS as f64;
            for ai in 0..AZIMUTHS {
                let azimuth = 2.0 * PI * ai as f64 / AZIMUTHS as f64;
                let params = [radius, polar, azimuth];
                if let Some((s, p)) = eval(params) {
                    if best.as_ref().is_none_or(|b| s > b.1) {
                        best = Some((params, s, p));
                    }
                }
            }
        }
    }
    let (mut params, mut best_score, mut best_povm) = best.ok_or(Error::SingularOrbit(0))?;

    let lower = [0.0, 0.0, f64::NEG_INFINITY];
    let upper = [1.0, PI, f64::INFINITY];
    let mut step = [0.5 / RADII as f64, 0.5 * PI / POLARS as f64, PI / AZIMUTHS as f64];
    let mut trace = vec![best_score];
    let mut rounds = 0;
    while rounds < MAX_ROUNDS && step.iter().any(|&s| s > MIN_STEP) {
        rounds += 1;
        let mut improved = false;
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut cand = params;
                cand[axis] = (cand[axis] + sign * step[axis]).clamp(lower[axis], upper[axis]);
                if cand == params {
                    continue;
                }
                if let Some((s, p)) = eval(cand) {
                    if s > best_score {
                        params = cand;
                        best_score = s;
                        best_povm = p;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
        trace.push(best_score);
    }
    Ok(OptimizationResult {
        povm: best_povm,
        score: best_score,
        iterations: rounds,
        converged: step.iter().all(|&s| s <= MIN_STEP),
        trace,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct GeneralOptions {
    pub max_iter: usize,
    /// Stop once an accepted step improves the score by less than this.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-10,
            restarts: 8,
            seed: 0,
        }
    }
}

/// Nearest point of `{E_j >= 0, sum_j E_j = I}` to `y` in Frobenius norm
/// (Dykstra's alternating projections), followed by a `T^{-1/2}` sandwich that
/// removes the remaining completeness drift.
fn project_to_povm(y: &[ComplexMatrix2]) -> Option<Vec<ComplexMatrix2>> {
    const ROUNDS: usize = 2000;
    const TOL: f64 = 1e-15;
    let n = y.len();
    let id = ComplexMatrix2::identity();
    let mut x = y.to_vec();
    let mut p = vec![ComplexMatrix2::zero(); n];
    let mut q = vec![ComplexMatrix2::zero(); n];
    for _ in 0..ROUNDS {
        // Affine step: remove the mean completeness defect from every effect.
        let shifted: Vec<ComplexMatrix2> = x.iter().zip(&p).map(|(a, b)| *a + *b).collect();
        let total: ComplexMatrix2 = shifted.iter().copied().sum();
        let correction = (total - id).scale(1.0 / n as f64);
        let a: Vec<ComplexMatrix2> = shifted.iter().map(|s| *s - correction).collect();
        for j in 0..n {
            p[j] = shifted[j] - a[j];
        }
        let mut change: f64 = 0.0;
        for j in 0..n {
            let t = a[j] + q[j];
            let clipped = t.psd_clip();
            q[j] = t - clipped;
            change = change.max(clipped.max_abs_diff(&x[j]));
            x[j] = clipped;
        }
        if change < TOL {
            break;
        }
    }
    normalize_effects(&x)
}

fn run_ascent(
    start: Vec<ComplexMatrix2>,
    ops: &[ComplexMatrix2],
    opts: &GeneralOptions,
) -> (Vec<ComplexMatrix2>, f64, usize, bool, Vec<f64>) {
    let r_max = ops
        .iter()
        .map(|r| {
            let (lo, hi) = r.hermitian_eigenvalues();
            lo.abs().max(hi.abs())
        })
        .fold(0.0, f64::max);
    let mut effects = start;
    let mut current = povm_score(&effects, ops);
    let mut trace = vec![current];
    if r_max == 0.0 {
        return (effects, current, 0, true, trace);
    }
    let base_step = 0.1 / r_max;
    let mut step = base_step;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let moved: Vec<ComplexMatrix2> = effects.iter().zip(ops).map(|(e, r)| *e + r.scale(step)).collect();
        match project_to_povm(&moved) {
            Some(next) => {
                let s = povm_score(&next, ops);
                if s >= current {
                    let gain = s - current;
                    effects = next;
                    current = s;
                    trace.push(current);
                    if gain < opts.tol {
                        converged = true;
                        break;
                    }
                } else {
                    step *= 0.5;
                    trace.push(current);
                }
            }
            None => {
                step *= 0.5;
                trace.push(current);
            }
        }
        if step < base_step * 1e-12 {
            converged = true;
            break;
        }
    }
    (effects, current, iterations, converged, trace)
}

/// Projected gradient ascent over all `N`-outcome POVMs.
///
/// Restarts alternate between random covariant and random generic starting
/// POVMs and run in parallel; the best restart wins (ties go to the lowest
/// restart index, so results are deterministic for a given seed).
pub fn optimize_general(
    e: &SymmetricEnsemble,
    f: &FigureOfMerit,
    opts: &GeneralOptions,
) -> Result<OptimizationResult> {
    let n = e.state_count();
    let ops = score_operators(e, f)?;
    let restarts = opts.restarts.max(1);
    let runs = (0..restarts)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
            let start = if k % 2 == 0 {
                random_covariant_povm_with(n, &mut rng)?
            } else {
                random_povm_with(n, &mut rng)?
            };
            Ok(run_ascent(effect_matrices(&start), &ops, opts))
        })
        .collect::<Result<Vec<_>>>()?;
    let (effects, score, iterations, converged, trace) = runs
        .into_iter()
        .reduce(|best, run| if run.1 > best.1 { run } else { best })
        .expect("at least one restart");
    Ok(OptimizationResult {
        povm: Povm::from_matrices(effects)?,
        score,
        iterations,
        converged,
        trace,
    })
}
