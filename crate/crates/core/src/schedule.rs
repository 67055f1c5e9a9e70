//! Per-iteration coin phases.
//!
//! A straight line through `(π, π)` in the `(φ, ζ)` plane is described by
//! its angle `Θ ∈ [0, π]` to the φ axis and the signed offset `ω` along it.
//! Each [`SequenceKind`] then decides which of the two phases get their sign
//! flipped in which iteration.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::walk::CoinPhases;

/// Slack allowed on the `|ω| ≤ omega_bound(Θ)` check.
const OMEGA_SLACK: f64 = 1e-12;

/// Angle of the line `ζ = −2φ + 3π`: high robustness.
pub const THETA_BEST_REF: f64 = 233.0 * PI / 360.0;
/// Angle of the line `ζ = 2φ − π`, the mirror image of the high-robustness
/// line about `ζ = π`; used as the low-robustness reference.
pub const THETA_WORST_REF: f64 = 127.0 * PI / 360.0;
/// Angle of the line `ζ = φ/2 + π/2`, perpendicular to [`THETA_BEST_REF`].
pub const THETA_PERPENDICULAR_REF: f64 = 53.0 * PI / 360.0;
/// Angle of the line `ζ = −φ/2 − 3π/2` (mirror of the perpendicular line).
pub const THETA_MIRRORED_PERPENDICULAR_REF: f64 = 307.0 * PI / 360.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("theta = {0} is outside [0, pi]")]
    Theta(f64),
    #[error("omega = {omega} exceeds the bound {bound} for theta = {theta}")]
    Omega { omega: f64, theta: f64, bound: f64 },
    #[error("unknown sequence kind {0:?} (expected one of PM, A1, A2, A3, H1, H2, H3)")]
    UnknownKind(String),
}

/// Signed offset `omega` along the line through `(π, π)` at angle `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    omega: f64,
    theta: f64,
}

impl PolarPoint {
    pub fn new(omega: f64, theta: f64) -> Result<Self, ScheduleError> {
        if !(0.0..=PI).contains(&theta) {
            return Err(ScheduleError::Theta(theta));
        }
        let bound = omega_bound(theta);
        if !omega.is_finite() || omega.abs() > bound + OMEGA_SLACK {
            return Err(ScheduleError::Omega {
                omega,
                theta,
                bound,
            });
        }
        Ok(Self { omega, theta })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phases(&self) -> CoinPhases {
        CoinPhases::new(
            PI + self.omega * self.theta.cos(),
            PI + self.omega * self.theta.sin(),
        )
    }
}

/// `φ = π + ω cos Θ`, `ζ = π + ω sin Θ`.
pub fn polar_to_phases(omega: f64, theta: f64) -> Result<CoinPhases, ScheduleError> {
    Ok(PolarPoint::new(omega, theta)?.phases())
}

/// Largest `|ω|` keeping both phases inside `[0, 2π]` on the line at angle
/// `theta`: `min(π/|sin Θ|, π/|cos Θ|)`.
pub fn omega_bound(theta: f64) -> f64 {
    let by_sin = PI / theta.sin().abs();
    let by_cos = PI / theta.cos().abs();
    by_sin.min(by_cos)
}

/// Number of search iterations for one marked node,
/// `⌈(π/2)·√(2^(m−1))⌉`.
pub fn iteration_count(m: usize) -> usize {
    assert!(m >= 1, "coin size must be positive");
    let half_nodes = (1u64 << (m - 1)) as f64;
    (PI / 2.0 * half_nodes.sqrt()).ceil() as usize
}

/// `(−1)^⌈j/2⌉` for the 1-based iteration `j`.
pub fn sign_alternating(j: usize) -> f64 {
    assert!(j >= 1, "iterations are 1-based");
    if j.div_ceil(2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `(−1)^round(j/k_iter)`; exact halves round up.
pub fn sign_halves(j: usize, k_iter: usize) -> f64 {
    assert!(
        (1..=k_iter).contains(&j),
        "iteration {j} outside 1..={k_iter}"
    );
    // f64::round rounds half away from zero
    let r = (j as f64 / k_iter as f64).round() as u64;
    if r.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SequenceKind {
    /// Same phases in every iteration.
    PM,
    A1,
    A2,
    A3,
    H1,
    H2,
    H3,
}

impl SequenceKind {
    pub const ALL: [SequenceKind; 7] = [
        SequenceKind::PM,
        SequenceKind::A1,
        SequenceKind::A2,
        SequenceKind::A3,
        SequenceKind::H1,
        SequenceKind::H2,
        SequenceKind::H3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::PM => "PM",
            SequenceKind::A1 => "A1",
            SequenceKind::A2 => "A2",
            SequenceKind::A3 => "A3",
            SequenceKind::H1 => "H1",
            SequenceKind::H2 => "H2",
            SequenceKind::H3 => "H3",
        }
    }

    /// Signs applied to `(φ, ζ)` in iteration `j` of `k_iter`.
    pub fn signs(self, j: usize, k_iter: usize) -> (f64, f64) {
        use SequenceKind::*;
        match self {
            PM => (1.0, 1.0),
            A1 => (1.0, sign_alternating(j)),
            A2 => (sign_alternating(j), 1.0),
            A3 => {
                let s = sign_alternating(j);
                (s, s)
            }
            H1 => (1.0, sign_halves(j, k_iter)),
            H2 => (sign_halves(j, k_iter), 1.0),
            H3 => {
                let s = sign_halves(j, k_iter);
                (s, s)
            }
        }
    }

    pub fn apply(self, base: CoinPhases, j: usize, k_iter: usize) -> CoinPhases {
        let (sp, sz) = self.signs(j, k_iter);
        CoinPhases::new(sp * base.phi, sz * base.zeta)
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SequenceKind {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SequenceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ScheduleError::UnknownKind(s.to_string()))
    }
}

/// Coin phases for every iteration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    pub kind: SequenceKind,
    /// Set when the base phases came from a point on a polar line.
    pub polar: Option<PolarPoint>,
    pub base: CoinPhases,
    pub phases: Vec<CoinPhases>,
}

impl PhaseSchedule {
    /// Applies the sign rule of `kind` directly to `base`.
    pub fn from_base(kind: SequenceKind, base: CoinPhases, k_iter: usize) -> Self {
        let phases = (1..=k_iter).map(|j| kind.apply(base, j, k_iter)).collect();
        Self {
            kind,
            polar: None,
            base,
            phases,
        }
    }

    pub fn k_iter(&self) -> usize {
        self.phases.len()
    }
}

pub fn schedule_phases(kind: SequenceKind, polar: PolarPoint, k_iter: usize) -> PhaseSchedule {
    let mut s = PhaseSchedule::from_base(kind, polar.phases(), k_iter);
    s.polar = Some(polar);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn polar_examples() {
        let c = polar_to_phases(0.0, 1.234).unwrap();
        assert_eq!(c, CoinPhases::new(PI, PI));
        let a = polar_to_phases(PI / 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(a.phi, 3.0 * PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.zeta, PI, epsilon = 1e-15);
        let p = polar_to_phases(1.0, THETA_BEST_REF).unwrap();
        assert_abs_diff_eq!(p.phi, 2.695395, epsilon = 1e-6);
        assert_abs_diff_eq!(p.zeta, 4.036527, epsilon = 1e-6);
    }

    #[test]
    fn polar_rejects_out_of_domain() {
        assert!(matches!(
            polar_to_phases(3.2, 0.0),
            Err(ScheduleError::Omega { .. })
        ));
        assert!(matches!(
            polar_to_phases(0.0, -0.1),
            Err(ScheduleError::Theta(_))
        ));
        assert!(matches!(
            polar_to_phases(0.0, 3.2),
            Err(ScheduleError::Theta(_))
        ));
        assert!(polar_to_phases(-PI, 0.0).is_ok());
    }

    #[test]
    fn omega_bound_examples() {
        assert_abs_diff_eq!(omega_bound(0.0), PI);
        assert_abs_diff_eq!(omega_bound(PI / 2.0), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(omega_bound(PI / 4.0), PI * 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(omega_bound(PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(
            omega_bound(3.0 * PI / 4.0),
            PI * 2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(iteration_count(4), 5);
        assert_eq!(iteration_count(8), 18);
        assert_eq!(iteration_count(9), 26);
        assert_eq!(iteration_count(6), 9);
    }

    #[test]
    fn alternating_signs() {
        let s: Vec<f64> = (1..=6).map(sign_alternating).collect();
        assert_eq!(s, vec![-1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn halves_signs() {
        let s: Vec<f64> = (1..=5).map(|j| sign_halves(j, 5)).collect();
        assert_eq!(s, vec![1.0, 1.0, -1.0, -1.0, -1.0]);
        assert_eq!(sign_halves(2, 4), -1.0);
        assert_eq!(sign_halves(4, 9), 1.0);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SequenceKind::ALL {
            assert_eq!(k.name().parse::<SequenceKind>().unwrap(), k);
        }
        assert!(matches!(
            "A4".parse::<SequenceKind>(),
            Err(ScheduleError::UnknownKind(_))
        ));
        assert!("pm".parse::<SequenceKind>().is_err());
    }

    #[test]
    fn pm_schedule_is_constant() {
        let p = PolarPoint::new(0.7, 1.0).unwrap();
        let s = schedule_phases(SequenceKind::PM, p, 9);
        assert!(s.phases.iter().all(|&c| c == p.phases()));
        assert_eq!(s.k_iter(), 9);
    }

    #[test]
    fn a3_schedule_flips_jointly() {
        let p = PolarPoint::new(1.0, 0.0).unwrap();
        let s = schedule_phases(SequenceKind::A3, p, 4);
        let base = CoinPhases::new(PI + 1.0, PI);
        let expected =
            [-1.0, -1.0, 1.0, 1.0].map(|sg| CoinPhases::new(sg * base.phi, sg * base.zeta));
        assert_eq!(s.phases, expected.to_vec());
    }

    #[test]
    fn center_schedules_are_equivalent_mod_tau() {
        let p = PolarPoint::new(0.0, 0.4).unwrap();
        for kind in SequenceKind::ALL {
            for c in schedule_phases(kind, p, 7).phases {
                let n = c.normalized();
                assert_abs_diff_eq!(n.phi, PI, epsilon = 1e-15);
                assert_abs_diff_eq!(n.zeta, PI, epsilon = 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn polar_stays_in_range(theta_step in 0usize..=360, frac in -1.0f64..=1.0) {
            let theta = theta_step as f64 * PI / 360.0;
            let omega = frac * omega_bound(theta);
            let c = polar_to_phases(omega, theta).unwrap();
            prop_assert!(c.phi >= -1e-12 && c.phi <= 2.0 * PI + 1e-12);
            prop_assert!(c.zeta >= -1e-12 && c.zeta <= 2.0 * PI + 1e-12);
        }

        #[test]
        fn halves_are_a_single_split(k_iter in 1usize..200) {
            let signs: Vec<f64> = (1..=k_iter).map(|j| sign_halves(j, k_iter)).collect();
            let leading = signs.iter().take_while(|&&s| s > 0.0).count();
            prop_assert_eq!(leading, k_iter.div_ceil(2) - 1);
            prop_assert!(signs[leading..].iter().all(|&s| s < 0.0));
        }

        #[test]
        fn alternating_has_period_four(j in 1usize..1000) {
            prop_assert_eq!(sign_alternating(j), sign_alternating(j + 4));
            let pair_start = 2 * ((j - 1) / 2) + 1;
            prop_assert_eq!(sign_alternating(j), sign_alternating(pair_start));
            prop_assert_eq!(sign_alternating(pair_start), -sign_alternating(pair_start + 2));
        }

        #[test]
        fn schedule_follows_sign_rule(kind_idx in 0usize..7, omega_frac in -1.0f64..1.0, theta in 0.0f64..PI, k_iter in 1usize..30) {
            let kind = SequenceKind::ALL[kind_idx];
            let p = PolarPoint::new(omega_frac * omega_bound(theta), theta).unwrap();
            let s = schedule_phases(kind, p, k_iter);
            prop_assert_eq!(s.phases.len(), k_iter);
            for (i, c) in s.phases.iter().enumerate() {
                let (sp, sz) = kind.signs(i + 1, k_iter);
                prop_assert_eq!(c.phi, sp * p.phases().phi);
                prop_assert_eq!(c.zeta, sz * p.phases().zeta);
            }
        }
    }
}
