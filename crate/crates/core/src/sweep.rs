//! Success probability over the `(φ, ζ)` plane and along polar lines.

use std::f64::consts::TAU;
use std::io::{self, Write};

use thiserror::Error;

use crate::format::fmt9;
use crate::parallel::{parallel_map, ParallelError, Workers};
use crate::schedule::{
    iteration_count, omega_bound, schedule_phases, PhaseSchedule, PolarPoint, ScheduleError,
    SequenceKind,
};
use crate::walk::{run_walk, CoinPhases, WalkConfig, WalkError};

/// Default samples per axis of a phase-plane grid (step `2π/180`).
pub const DEFAULT_RESOLUTION: usize = 181;
/// Default samples along a polar line.
pub const DEFAULT_OMEGA_POINTS: usize = 201;
pub const MIN_OMEGA_POINTS: usize = 11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("grid resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error("cross-section needs an odd number of points >= {MIN_OMEGA_POINTS}, got {0}")]
    OmegaPoints(usize),
    #[error(transparent)]
    Task(#[from] ParallelError),
}

/// Probabilities on an `R × R` grid; `prob[a * R + b]` belongs to
/// `(phi_axis[a], zeta_axis[b])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub m: usize,
    pub kind: SequenceKind,
    pub phi_axis: Vec<f64>,
    pub zeta_axis: Vec<f64>,
    pub prob: Vec<f64>,
}

impl Grid2D {
    pub fn get(&self, phi_index: usize, zeta_index: usize) -> f64 {
        self.prob[phi_index * self.zeta_axis.len() + zeta_index]
    }

    /// CSV with header `phi,zeta,probability`, φ-major order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "phi,zeta,probability")?;
        for (a, &phi) in self.phi_axis.iter().enumerate() {
            for (b, &zeta) in self.zeta_axis.iter().enumerate() {
                writeln!(out, "{},{},{}", fmt9(phi), fmt9(zeta), fmt9(self.get(a, b)))?;
            }
        }
        Ok(())
    }
}

/// Probabilities along the line at angle `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub m: usize,
    pub kind: SequenceKind,
    pub theta: f64,
    pub omega_axis: Vec<f64>,
    /// Base phases of each sample before the sequence sign rule.
    pub phases: Vec<CoinPhases>,
    pub prob: Vec<f64>,
}

impl CrossSection {
    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// CSV with header `omega,phi,zeta,probability`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "omega,phi,zeta,probability")?;
        for ((&w, c), &p) in self.omega_axis.iter().zip(&self.phases).zip(&self.prob) {
            writeln!(
                out,
                "{},{},{},{}",
                fmt9(w),
                fmt9(c.phi),
                fmt9(c.zeta),
                fmt9(p)
            )?;
        }
        Ok(())
    }
}

/// `count` uniform samples over `[0, 2π]`, both ends included.
pub fn phase_axis(count: usize) -> Vec<f64> {
    let last = (count - 1) as f64;
    (0..count).map(|i| TAU * i as f64 / last).collect()
}

/// `count` (odd) uniform samples over `[−bound, bound]`, exactly symmetric
/// with `0` in the middle.
pub fn omega_axis(bound: f64, count: usize) -> Vec<f64> {
    let half = ((count - 1) / 2) as f64;
    (0..count)
        .map(|i| bound * (i as f64 - half) / half)
        .collect()
}

/// Success probability of one run with the schedule's phases.
pub fn probability_for(config: &WalkConfig, schedule: &PhaseSchedule) -> Result<f64, WalkError> {
    run_walk(config, &schedule.phases)
}

pub fn sweep_phase_plane(
    m: usize,
    kind: SequenceKind,
    resolution: usize,
    marked: &[usize],
    workers: Workers,
) -> Result<Grid2D, SweepError> {
    if resolution < 2 {
        return Err(SweepError::Resolution(resolution));
    }
    let config = WalkConfig::new(m, marked.iter().copied())?;
    let k_iter = iteration_count(m);
    let phi_axis = phase_axis(resolution);
    let zeta_axis = phi_axis.clone();
    let prob = parallel_map(resolution * resolution, workers, |cell| {
        let base = CoinPhases::new(phi_axis[cell / resolution], zeta_axis[cell % resolution]);
        probability_for(&config, &PhaseSchedule::from_base(kind, base, k_iter))
    })?;
    Ok(Grid2D {
        m,
        kind,
        phi_axis,
        zeta_axis,
        prob,
    })
}

pub fn sweep_omega(
    m: usize,
    kind: SequenceKind,
    theta: f64,
    n_points: usize,
    marked: &[usize],
    workers: Workers,
) -> Result<CrossSection, SweepError> {
    if n_points < MIN_OMEGA_POINTS || n_points.is_multiple_of(2) {
        return Err(SweepError::OmegaPoints(n_points));
    }
    // validates theta
    PolarPoint::new(0.0, theta)?;
    let config = WalkConfig::new(m, marked.iter().copied())?;
    let k_iter = iteration_count(m);
    let omegas = omega_axis(omega_bound(theta), n_points);
    let points = omegas
        .iter()
        .map(|&w| PolarPoint::new(w, theta))
        .collect::<Result<Vec<_>, _>>()?;
    let prob = parallel_map(n_points, workers, |i| {
        probability_for(&config, &schedule_phases(kind, points[i], k_iter))
    })?;
    Ok(CrossSection {
        m,
        kind,
        theta,
        omega_axis: omegas,
        phases: points.iter().map(PolarPoint::phases).collect(),
        prob,
    })
}
