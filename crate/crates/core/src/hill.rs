//! Modified Hill function `W(ω) = b·kⁿ / (|ω − c|ⁿ + kⁿ)` and its
//! least-squares fit to sampled success probabilities.
//!
//! `b` is the plateau height, `k` the half-width at half maximum (the
//! robustness measure), `n` the slope exponent and `c` the center.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lm::{minimize, LmSettings, Residuals};

/// Smallest number of samples accepted by [`fit_hill`].
pub const MIN_FIT_POINTS: usize = 8;
/// Peak-to-trough range below which data is considered flat.
pub const FLAT_DATA_RANGE: f64 = 1e-9;
/// Default threshold fraction for the robustness interval.
pub const DEFAULT_OMEGA_THRESHOLD: f64 = 0.9;

const K_START_FRACTIONS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
const N_STARTS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("omega and probability arrays differ in length ({omega} vs {prob})")]
    LengthMismatch { omega: usize, prob: usize },
    #[error("{got} samples available for the fit, need at least {min}")]
    TooFewPoints { got: usize, min: usize },
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("data is flat (range {0:e}); Hill parameters are not identifiable")]
    NonIdentifiable(f64),
    #[error("all {0} fit starts diverged")]
    NoConvergence(usize),
    #[error("no fit satisfies n > k")]
    StrictConstraint,
}

/// The four shape parameters of the modified Hill function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillCurve {
    pub b: f64,
    pub k: f64,
    pub n: f64,
    pub c: f64,
}

impl HillCurve {
    pub fn new(b: f64, k: f64, n: f64, c: f64) -> Self {
        Self { b, k, n, c }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        hill_eval(omega, self)
    }
}

/// `b·kⁿ / (|ω − c|ⁿ + kⁿ)`, evaluated as `b / (1 + (|ω − c|/k)ⁿ)`.
pub fn hill_eval(omega: f64, curve: &HillCurve) -> f64 {
    let dist = (omega - curve.c).abs();
    if dist == 0.0 {
        return curve.b;
    }
    curve.b / (1.0 + (dist / curve.k).powf(curve.n))
}

/// A fitted curve with its residual and the data it was fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillParams {
    pub curve: HillCurve,
    pub sigma: f64,
    /// Number of free parameters: 3 with the center pinned at 0, else 4.
    pub q: usize,
    /// Number of samples used in the fit.
    pub n_points: usize,
    /// ω range of the samples used in the fit.
    pub omega_lo: f64,
    pub omega_hi: f64,
}

/// Which samples of a cross-section enter the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitWindow {
    /// Every sample.
    Full,
    /// The lobe around the maximum: on each side up to the first local
    /// minimum below half the peak value, taken symmetric about the peak.
    #[default]
    CentralLobe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Pin `c = 0` (3 free parameters).
    pub fix_center: bool,
    /// Only accept fits with `n > k`.
    pub strict_nk: bool,
    pub window: FitWindow,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            fix_center: false,
            strict_nk: false,
            window: FitWindow::CentralLobe,
        }
    }
}

/// `sqrt(Σ (W_j − p_j)² / (N_p − q))`.
pub fn hill_sigma(
    curve: &HillCurve,
    omega: &[f64],
    prob: &[f64],
    q: usize,
) -> Result<f64, FitError> {
    if omega.len() != prob.len() {
        return Err(FitError::LengthMismatch {
            omega: omega.len(),
            prob: prob.len(),
        });
    }
    if omega.len() <= q {
        return Err(FitError::TooFewPoints {
            got: omega.len(),
            min: q + 1,
        });
    }
    let ss: f64 = omega
        .iter()
        .zip(prob)
        .map(|(&w, &p)| (curve.eval(w) - p).powi(2))
        .sum();
    Ok((ss / (omega.len() - q) as f64).sqrt())
}

fn argmax(values: &[f64]) -> usize {
    // first maximum wins
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Index range `[lo, hi]` of the central lobe.
pub fn central_lobe(prob: &[f64]) -> (usize, usize) {
    let peak = argmax(prob);
    let half = prob[peak] / 2.0;
    let reach = |step: isize| -> usize {
        let mut i = peak as isize;
        loop {
            let next = i + step;
            if next < 0 || next >= prob.len() as isize {
                break;
            }
            let (cur, nxt) = (prob[i as usize], prob[next as usize]);
            if nxt > cur && cur < half {
                break;
            }
            i = next;
        }
        (i - peak as isize).unsigned_abs()
    };
    // keep enough samples for a four-parameter fit
    let min_half = MIN_FIT_POINTS / 2;
    let width = reach(1).min(reach(-1)).max(min_half);
    let lo = peak.saturating_sub(width);
    let hi = (peak + width).min(prob.len() - 1);
    (lo, hi)
}

struct HillProblem<'a> {
    omega: &'a [f64],
    prob: &'a [f64],
    fix_center: bool,
}

impl HillProblem<'_> {
    fn curve(&self, x: &[f64]) -> HillCurve {
        HillCurve {
            b: x[0].exp(),
            k: x[1].exp(),
            n: x[2].exp(),
            c: if self.fix_center { 0.0 } else { x[3] },
        }
    }
}

impl Residuals for HillProblem<'_> {
    fn residual_count(&self) -> usize {
        self.omega.len()
    }

    fn param_count(&self) -> usize {
        if self.fix_center {
            3
        } else {
            4
        }
    }

    fn eval(&self, x: &[f64], r: &mut [f64], mut jac: Option<&mut DMatrix<f64>>) {
        let curve = self.curve(x);
        let ln_k = x[1];
        for (i, (&w, &p)) in self.omega.iter().zip(self.prob).enumerate() {
            let offset = w - curve.c;
            let dist = offset.abs();
            // t = (dist / k)^n
            let (value, frac, ln_u) = if dist == 0.0 {
                (curve.b, 0.0, 0.0)
            } else {
                let ln_u = dist.ln() - ln_k;
                let t = (curve.n * ln_u).exp();
                if t.is_infinite() {
                    (0.0, 1.0, ln_u)
                } else {
                    (curve.b / (1.0 + t), t / (1.0 + t), ln_u)
                }
            };
            r[i] = value - p;
            if let Some(j) = jac.as_deref_mut() {
                j[(i, 0)] = value;
                j[(i, 1)] = value * curve.n * frac;
                j[(i, 2)] = -value * curve.n * frac * ln_u;
                if !self.fix_center {
                    j[(i, 3)] = if dist == 0.0 {
                        0.0
                    } else {
                        value * curve.n * frac / offset
                    };
                }
            }
        }
    }
}

/// Least-squares Hill fit with a fixed multi-start grid.
pub fn fit_hill(omega: &[f64], prob: &[f64], options: &FitOptions) -> Result<HillParams, FitError> {
    if omega.len() != prob.len() {
        return Err(FitError::LengthMismatch {
            omega: omega.len(),
            prob: prob.len(),
        });
    }
    if omega.len() < MIN_FIT_POINTS {
        return Err(FitError::TooFewPoints {
            got: omega.len(),
            min: MIN_FIT_POINTS,
        });
    }
    if let Some(i) = omega
        .iter()
        .zip(prob)
        .position(|(w, p)| !w.is_finite() || !p.is_finite())
    {
        return Err(FitError::NonFinite(i));
    }

    let (lo, hi) = match options.window {
        FitWindow::Full => (0, omega.len() - 1),
        FitWindow::CentralLobe => central_lobe(prob),
    };
    let omega = &omega[lo..=hi];
    let prob = &prob[lo..=hi];

    let p_max = prob.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p_min = prob.iter().copied().fold(f64::INFINITY, f64::min);
    if p_max - p_min < FLAT_DATA_RANGE || p_max <= 0.0 {
        return Err(FitError::NonIdentifiable(p_max - p_min));
    }

    let span = omega[omega.len() - 1] - omega[0];
    let peak_omega = omega[argmax(prob)];
    let mut centers = vec![0.0];
    if !options.fix_center && peak_omega != 0.0 {
        centers.push(peak_omega);
    }

    let problem = HillProblem {
        omega,
        prob,
        fix_center: options.fix_center,
    };
    let q = problem.param_count();
    let mut starts = 0;
    let mut best: Option<(f64, HillCurve)> = None;
    let mut any_usable = false;
    for frac in K_START_FRACTIONS {
        for n0 in N_STARTS {
            for &c0 in &centers {
                starts += 1;
                let mut x0 = vec![p_max.ln(), (frac * span / 4.0).ln(), n0.ln()];
                if !options.fix_center {
                    x0.push(c0);
                }
                let out = minimize(&problem, &x0, LmSettings::default());
                if !out.usable() {
                    continue;
                }
                any_usable = true;
                let curve = problem.curve(&out.x);
                if !(curve.b.is_finite() && curve.k.is_finite() && curve.n.is_finite()) {
                    continue;
                }
                if options.strict_nk && curve.n <= curve.k {
                    continue;
                }
                if best.as_ref().is_none_or(|(cost, _)| out.cost < *cost) {
                    best = Some((out.cost, curve));
                }
            }
        }
    }

    let (cost, curve) = match best {
        Some(b) => b,
        None if any_usable && options.strict_nk => return Err(FitError::StrictConstraint),
        None => return Err(FitError::NoConvergence(starts)),
    };
    Ok(HillParams {
        curve,
        sigma: (cost / (omega.len() - q) as f64).sqrt(),
        q,
        n_points: omega.len(),
        omega_lo: omega[0],
        omega_hi: omega[omega.len() - 1],
    })
}

/// Largest relative gap between the fitted height `b` and the sampled peak
/// for [`HillParams::implausibility`] to accept a fit.
pub const MAX_PEAK_MISMATCH: f64 = 0.1;

impl HillParams {
    /// Why this fit does not describe a single smooth peak of height
    /// `p_max`, if it does not. Rejects centers outside the fitted window,
    /// cusps (`n < 1`) and heights far from the sampled peak; such fits
    /// arise when the window sits on a raised floor the model cannot
    /// represent.
    pub fn implausibility(&self, p_max: f64) -> Option<String> {
        let c = &self.curve;
        if !(self.omega_lo..=self.omega_hi).contains(&c.c) {
            return Some(format!(
                "center {} outside the fitted window [{}, {}]",
                c.c, self.omega_lo, self.omega_hi
            ));
        }
        if c.n < 1.0 {
            return Some(format!("slope exponent n = {} below 1", c.n));
        }
        if (c.b - p_max).abs() > MAX_PEAK_MISMATCH * p_max {
            return Some(format!(
                "height b = {} far from the sampled peak {p_max}",
                c.b
            ));
        }
        None
    }
}

/// Symmetric interval around the peak on which `p ≥ Ω·p_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub omega_max: f64,
    pub p_max: f64,
    pub epsilon: f64,
    pub omega_threshold: f64,
}

fn check_threshold(omega_threshold: f64) {
    assert!(
        omega_threshold > 0.0 && omega_threshold < 1.0,
        "threshold fraction must lie in (0, 1), got {omega_threshold}"
    );
}

/// Largest sampled half-width `ε` such that every sample within `ε` of the
/// peak stays at or above `Ω·p_max`.
pub fn robustness_from_samples(
    omega: &[f64],
    prob: &[f64],
    omega_threshold: f64,
) -> RobustnessReport {
    check_threshold(omega_threshold);
    assert_eq!(omega.len(), prob.len());
    assert!(!prob.is_empty());
    let peak = argmax(prob);
    let p_max = prob[peak];
    let floor = omega_threshold * p_max;
    let mut width = 0;
    while peak > width
        && peak + width + 1 < prob.len()
        && prob[peak - width - 1] >= floor
        && prob[peak + width + 1] >= floor
    {
        width += 1;
    }
    let epsilon = (omega[peak + width] - omega[peak]).min(omega[peak] - omega[peak - width]);
    RobustnessReport {
        omega_max: omega[peak],
        p_max,
        epsilon,
        omega_threshold,
    }
}

/// `ε = k·((1 − Ω)/Ω)^(1/n)` from the fitted curve.
pub fn robustness_from_curve(curve: &HillCurve, omega_threshold: f64) -> RobustnessReport {
    check_threshold(omega_threshold);
    RobustnessReport {
        omega_max: curve.c,
        p_max: curve.b,
        epsilon: curve.k * ((1.0 - omega_threshold) / omega_threshold).powf(1.0 / curve.n),
        omega_threshold,
    }
}
