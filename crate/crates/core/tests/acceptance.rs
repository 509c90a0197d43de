//! Acceptance suite. Each criterion prints one PASS/FAIL line with its
//! measured worst case and wall time; the test fails if any criterion does.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};
use std::time::{Duration, Instant};

use qsd_core::discriminator::{
    channel_from_measurement, check_score_invariance, decomposition_outcomes, fit_cosine_form, symmetrize,
};
use qsd_core::ensemble::make_symmetric_ensemble;
use qsd_core::merit::{make_fom, mutual_information, score, BuiltinMerit};
use qsd_core::nosignal::{admissible_region, check_channel_admissible, guessing_bound, q_channel};
use qsd_core::optimal::{
    optimize_covariant, optimize_general, random_covariant_povm, random_povm, symmetric_povm, GeneralOptions,
};
use qsd_core::qubit::helstrom_guess_probability;
use qsd_core::{ChannelMatrix, SymmetricEnsemble};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RADII: [f64; 3] = [0.3, 0.7, 1.0];
const ANGLES: [f64; 3] = [FRAC_PI_6, FRAC_PI_3, FRAC_PI_2];

fn grid(half_counts: impl IntoIterator<Item = usize>) -> Vec<SymmetricEnsemble> {
    let mut out = Vec::new();
    for m in half_counts {
        for r in RADII {
            for t in ANGLES {
                out.push(make_symmetric_ensemble(m, r, t).unwrap());
            }
        }
    }
    out
}

fn full_grid() -> Vec<SymmetricEnsemble> {
    grid(1..=5)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(id: u32, name: &str, budget: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = outcome.pass && in_time;
    println!(
        "criterion {id}: {} {name}: {} [{:.3}s of {:.0}s budget{}]",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64(),
        if in_time { "" } else { ", over budget" },
    );
    pass
}

fn bound_reproduction() -> Outcome {
    let (mut bound_err, mut diag_err) = (0.0f64, 0.0f64);
    for e in full_grid() {
        let m = e.half_count() as f64;
        let closed = (1.0 + e.radius() * e.polar_angle().sin()) / (2.0 * m);
        let bound = guessing_bound(&e).bound;
        bound_err = bound_err.max((bound - closed).abs());
        let c = channel_from_measurement(&symmetric_povm(&e), &e).unwrap();
        for i in 0..e.state_count() {
            diag_err = diag_err.max((c.get(i, i) - bound).abs());
        }
    }
    Outcome {
        pass: bound_err <= 1e-14 && diag_err <= 1e-12,
        detail: format!("bound err {bound_err:.2e} (tol 1e-14), diagonal err {diag_err:.2e} (tol 1e-12)"),
    }
}

fn optimal_channel_identity() -> Outcome {
    let worst = full_grid()
        .iter()
        .map(|e| {
            channel_from_measurement(&symmetric_povm(e), e)
                .unwrap()
                .max_abs_diff(&q_channel(e))
        })
        .fold(0.0, f64::max);
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max |P - Q| {worst:.2e} (tol 1e-12)"),
    }
}

fn cosine_universality() -> Outcome {
    let mut worst_residual = 0.0f64;
    let mut outside = 0usize;
    let mut above_bound = 0usize;
    let mut total = 0usize;
    for (g, e) in full_grid().iter().enumerate() {
        let region = admissible_region(e);
        for k in 0..100u64 {
            let povm = random_covariant_povm(e.state_count(), 10_000 * g as u64 + k).unwrap();
            let c = symmetrize(&channel_from_measurement(&povm, e).unwrap());
            let fit = fit_cosine_form(&c, e).unwrap();
            worst_residual = worst_residual.max(fit.residual);
            if !region.contains(fit.alpha, fit.beta, 1e-10) {
                outside += 1;
            }
            if fit.alpha > region.alpha_max + 1e-10 {
                above_bound += 1;
            }
            total += 1;
        }
    }
    Outcome {
        pass: worst_residual <= 1e-10 && outside == 0,
        detail: format!(
            "max residual {worst_residual:.2e} (tol 1e-10); {outside}/{total} fits outside the region, \
             {above_bound}/{total} above alpha_max (the rest have alpha < 0)"
        ),
    }
}

fn random_channel(n: usize, rng: &mut ChaCha8Rng) -> ChannelMatrix {
    let rows = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect();
    ChannelMatrix::from_rows(rows).unwrap()
}

fn symmetrization_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for k in 0..500 {
        let n = 2 * (1 + k % 5);
        let c = random_channel(n, &mut rng);
        let half: Vec<f64> = (0..=n / 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let profile: Vec<f64> = (0..n).map(|d| half[d.min(n - d)]).collect();
        let f = make_fom(&profile).unwrap();
        let (a, b) = check_score_invariance(&c, &f, &vec![1.0 / n as f64; n]).unwrap();
        worst = worst.max((a - b).abs());
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max score gap {worst:.2e} over 500 pairs (tol 1e-12)"),
    }
}

fn decomposition_indistinguishability() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for (g, e) in full_grid().iter().enumerate() {
        let n = e.state_count();
        for k in 0..100u64 {
            let povm = random_povm(n, 7_000 * g as u64 + k).unwrap();
            for m in 1..e.half_count() {
                for shift in 0..n {
                    let (l, r) = decomposition_outcomes(&povm, e, m, shift).unwrap();
                    let gap = l.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    worst = worst.max(gap);
                    cases += 1;
                }
            }
        }
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("max outcome gap {worst:.2e} over {cases} cases (tol 1e-10)"),
    }
}

fn helstrom_agreement() -> Outcome {
    let worst = grid([1])
        .iter()
        .map(|e| (guessing_bound(e).bound - helstrom_guess_probability(e.state(0), e.state(1))).abs())
        .fold(0.0, f64::max);
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max |bound - helstrom| {worst:.2e} (tol 1e-12)"),
    }
}

fn optimizer_concordance() -> Outcome {
    let opts = GeneralOptions {
        restarts: 8,
        ..GeneralOptions::default()
    };
    let (mut general, mut covariant) = (0.0f64, 0.0f64);
    let mut runs = 0usize;
    for e in grid(1..=3) {
        for merit in BuiltinMerit::MONOTONOUS {
            let f = merit.build(e.state_count());
            let target = score(&q_channel(&e), &f, &e.priors()).unwrap().score;
            let g = optimize_general(&e, &f, &opts).unwrap().score;
            let c = optimize_covariant(&e, &f).unwrap().score;
            general = general.max((g - target).abs());
            covariant = covariant.max((c - target).abs());
            runs += 1;
        }
    }
    Outcome {
        pass: general <= 1e-6 && covariant <= 1e-6,
        detail: format!("{runs} runs; max gap general {general:.2e}, covariant {covariant:.2e} (tol 1e-6)"),
    }
}

fn signaling_tripwire() -> Outcome {
    let mut checked = 0usize;
    let mut missed = Vec::new();
    for e in full_grid() {
        let orthogonal = e.half_count() == 1 && (e.transverse_radius() - 1.0).abs() < 1e-15;
        if orthogonal {
            continue;
        }
        checked += 1;
        let v = check_channel_admissible(&ChannelMatrix::identity(e.state_count()), &e).unwrap();
        if v.name() != "violates_bound" {
            missed.push(format!("(M={}, r={}, theta={:.4}) -> {}", e.half_count(), e.radius(), e.polar_angle(), v.name()));
        }
    }
    Outcome {
        pass: missed.is_empty(),
        detail: format!("{} of {checked} ensembles flagged {:?}", checked - missed.len(), missed),
    }
}

fn information_gain() -> Outcome {
    let mut misplaced = 0usize;
    let mut ensembles = 0usize;
    for e in full_grid() {
        let n = e.state_count();
        let q = q_channel(&e);
        let priors = e.priors();
        let curve: Vec<f64> = (0..=100)
            .map(|k| {
                let c = ChannelMatrix::mix(k as f64 / 100.0, &q, &ChannelMatrix::uniform(n)).unwrap();
                mutual_information(&c, &priors).unwrap()
            })
            .collect();
        let peak = curve[100];
        if curve[..100].iter().any(|&v| v > peak) {
            misplaced += 1;
        }
        ensembles += 1;
    }
    Outcome {
        pass: misplaced == 0,
        detail: format!("maximum at lambda = 1 on {} of {ensembles} ensembles", ensembles - misplaced),
    }
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "bound reproduction", s(1), bound_reproduction),
        criterion(2, "optimal channel identity", s(1), optimal_channel_identity),
        criterion(3, "cosine-form universality", s(30), cosine_universality),
        criterion(4, "symmetrization score invariance", s(10), symmetrization_invariance),
        criterion(5, "decomposition indistinguishability", s(10), decomposition_indistinguishability),
        criterion(6, "helstrom oracle agreement", s(1), helstrom_agreement),
        criterion(7, "optimizer concordance", s(60), optimizer_concordance),
        criterion(8, "signaling tripwire", s(1), signaling_tripwire),
        criterion(9, "information-gain maximum", s(5), information_gain),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
