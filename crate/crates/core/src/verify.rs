//! Self-check suite: operator invariants, agreement with the dense-matrix
//! reference, symmetries of the probability landscape and fit consistency.
//! Everything runs at small coin sizes and takes a few seconds.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hill::{
    fit_hill, robustness_from_curve, robustness_from_samples, FitOptions, HillCurve,
};
use crate::schedule::{iteration_count, schedule_phases, PhaseSchedule, PolarPoint, SequenceKind};
use crate::walk::dense::dense_reference_run;
use crate::walk::{run_walk, CoinPhases, WalkConfig, WalkState};

/// Schedules per sequence kind and coin size in the dense comparison.
pub const DENSE_SCHEDULES: usize = 20;

const SEED: u64 = 0x5eed_cafe;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation and the bound it was held to.
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

fn bounded(name: &'static str, worst: f64, bound: f64) -> Check {
    Check {
        name,
        passed: worst.is_finite() && worst < bound,
        detail: format!("max deviation {worst:.3e} (bound {bound:.0e})"),
    }
}

fn exact(name: &'static str, mismatches: usize, cases: usize) -> Check {
    Check {
        name,
        passed: mismatches == 0,
        detail: format!("{mismatches} of {cases} cases differ"),
    }
}

fn random_state(m: usize, rng: &mut ChaCha8Rng) -> WalkState {
    let len = 2 * (m << m);
    let mut amps: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    WalkState::from_amplitudes(m, amps).expect("valid coin size")
}

fn random_phases(rng: &mut ChaCha8Rng) -> CoinPhases {
    CoinPhases::new(rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU))
}

/// Every operator keeps a random state normalized.
pub fn norm_preservation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for m in 2..=6 {
        for _ in 0..10 {
            let mut s = random_state(m, &mut rng);
            let marked = [rng.gen_range(0..1usize << m)];
            s.apply_oracle(&marked);
            worst = worst.max((s.norm_sqr() - 1.0).abs());
            s.apply_coins(random_phases(&mut rng));
            worst = worst.max((s.norm_sqr() - 1.0).abs());
            s.apply_shift();
            worst = worst.max((s.norm_sqr() - 1.0).abs());
        }
    }
    bounded("norm preservation", worst, 1e-10)
}

/// Oracle and shift applied twice give back the state bit for bit.
pub fn involutions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut mismatches = 0;
    let mut cases = 0;
    for m in 2..=6 {
        for _ in 0..5 {
            let s = random_state(m, &mut rng);
            let marked = [rng.gen_range(0..1usize << m), rng.gen_range(0..1usize << m)];
            let mut t = s.clone();
            t.apply_oracle(&marked);
            t.apply_oracle(&marked);
            mismatches += usize::from(t != s);
            let mut t = s.clone();
            t.apply_shift();
            t.apply_shift();
            mismatches += usize::from(t != s);
            cases += 2;
        }
    }
    exact("oracle and shift involutions", mismatches, cases)
}

/// Fast simulation against explicit matrices for `m ∈ {2, 3, 4}` and
/// [`DENSE_SCHEDULES`] random schedules per sequence kind.
pub fn dense_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst: f64 = 0.0;
    for m in 2..=4 {
        let config = WalkConfig::single(m).expect("valid coin size");
        let k_iter = config.iterations();
        for kind in SequenceKind::ALL {
            for _ in 0..DENSE_SCHEDULES {
                let schedule = PhaseSchedule::from_base(kind, random_phases(&mut rng), k_iter);
                let fast = run_walk(&config, &schedule.phases).expect("matching schedule");
                let dense = dense_reference_run(&config, &schedule.phases).expect("small m");
                worst = worst.max((fast - dense).abs());
            }
        }
    }
    bounded("dense-matrix equivalence", worst, 1e-10)
}

/// `p(φ, ζ) = p(2π − φ, 2π − ζ)` for every sequence kind.
pub fn conjugation_symmetry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst: f64 = 0.0;
    for m in 2..=5 {
        let config = WalkConfig::single(m).expect("valid coin size");
        let k_iter = config.iterations();
        for kind in SequenceKind::ALL {
            for _ in 0..5 {
                let base = random_phases(&mut rng);
                let mirror = CoinPhases::new(TAU - base.phi, TAU - base.zeta);
                let a = run_walk(
                    &config,
                    &PhaseSchedule::from_base(kind, base, k_iter).phases,
                );
                let b = run_walk(
                    &config,
                    &PhaseSchedule::from_base(kind, mirror, k_iter).phases,
                );
                worst = worst.max((a.expect("valid") - b.expect("valid")).abs());
            }
        }
    }
    bounded("conjugation symmetry", worst, 1e-12)
}

/// At `ω = 0` every sequence reduces to the Grover coin.
pub fn center_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    for m in 2..=6 {
        let config = WalkConfig::single(m).expect("valid coin size");
        let k_iter = iteration_count(m);
        for theta in [0.0, 0.3, PI / 2.0, 2.0, PI] {
            let center = PolarPoint::new(0.0, theta).expect("valid angle");
            let pm = run_walk(
                &config,
                &schedule_phases(SequenceKind::PM, center, k_iter).phases,
            )
            .expect("valid");
            for kind in SequenceKind::ALL {
                let p = run_walk(&config, &schedule_phases(kind, center, k_iter).phases)
                    .expect("valid");
                worst = worst.max((p - pm).abs());
            }
        }
    }
    bounded("center equivalence across kinds", worst, 1e-12)
}

fn synthetic(curve: &HillCurve, points: usize) -> (Vec<f64>, Vec<f64>) {
    let omega: Vec<f64> = (0..points)
        .map(|i| -PI + TAU * i as f64 / (points - 1) as f64)
        .collect();
    let prob = omega.iter().map(|&w| curve.eval(w)).collect();
    (omega, prob)
}

/// Noiseless Hill data is fitted back to its parameters.
pub fn hill_self_consistency() -> Check {
    let mut worst: f64 = 0.0;
    for truth in [
        HillCurve::new(0.4, 2.0, 3.0, 0.0),
        HillCurve::new(0.39, 0.6, 3.3, 0.0),
        HillCurve::new(0.44, 1.2, 5.0, 0.15),
    ] {
        let (omega, prob) = synthetic(&truth, 201);
        match fit_hill(&omega, &prob, &FitOptions::default()) {
            Ok(p) => {
                let c = p.curve;
                for (got, want) in [
                    (c.b, truth.b),
                    (c.k, truth.k),
                    (c.n, truth.n),
                    (c.c, truth.c),
                ] {
                    worst = worst.max((got - want).abs());
                }
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    bounded("Hill fit self-consistency", worst, 1e-6)
}

/// Sampled and closed-form robustness intervals agree within one grid step.
pub fn robustness_agreement() -> Check {
    let mut worst_steps: f64 = 0.0;
    for (curve, omega_threshold) in [
        (HillCurve::new(0.4, 2.0, 3.0, 0.0), 0.9),
        (HillCurve::new(0.4, 0.7, 4.0, 0.0), 0.8),
        (HillCurve::new(0.35, 1.5, 2.0, 0.0), 0.95),
    ] {
        let (omega, prob) = synthetic(&curve, 401);
        let step = omega[1] - omega[0];
        let data = robustness_from_samples(&omega, &prob, omega_threshold);
        let analytic = robustness_from_curve(&curve, omega_threshold);
        worst_steps = worst_steps.max((data.epsilon - analytic.epsilon).abs() / step);
    }
    Check {
        name: "robustness interval agreement",
        passed: worst_steps <= 1.0,
        detail: format!("max gap {worst_steps:.3} grid steps (bound 1)"),
    }
}

/// Runs every check in a fixed order.
pub fn run_all() -> Vec<Check> {
    vec![
        norm_preservation(),
        involutions(),
        dense_equivalence(),
        conjugation_symmetry(),
        center_equivalence(),
        hill_self_consistency(),
        robustness_agreement(),
    ]
}
