//! Robustness scans over the line angle `Θ`, extrapolation of the Hill
//! width `k` to larger coin sizes, and the cross-sequence comparison.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hill::{
    fit_hill, robustness_from_samples, FitError, FitOptions, HillParams, RobustnessReport,
    DEFAULT_OMEGA_THRESHOLD,
};
use crate::lm::{minimize, LmSettings, Residuals};
use crate::parallel::{parallel_map, ParallelError, Workers};
use crate::schedule::SequenceKind;
use crate::sweep::{sweep_omega, SweepError, DEFAULT_OMEGA_POINTS};

/// Default Θ grid: `π/360` steps over `[0, π]`.
pub const DEFAULT_THETA_STEPS: usize = 360;
pub const DEFAULT_M_RANGE: std::ops::RangeInclusive<usize> = 4..=9;
pub const MIN_TREND_POINTS: usize = 4;

const TREND_RATE_STARTS: [f64; 7] = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 20.0];
/// Relative spread of `k` values below which a trend is treated as flat.
const FLAT_TREND_RANGE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Task(#[from] ParallelError),
    #[error("every Hill fit failed for {kind}, m = {m}: {}", format_failures(.failures))]
    AllFitsFailed {
        kind: SequenceKind,
        m: usize,
        failures: Vec<(f64, String)>,
    },
    #[error("empty theta grid")]
    EmptyGrid,
    #[error("Hill fit for {kind}, m = {m}, theta = {theta:.6}: {source}")]
    Fit {
        kind: SequenceKind,
        m: usize,
        theta: f64,
        source: FitError,
    },
    #[error("trend for {kind} ({case}): {source}")]
    Trend {
        kind: SequenceKind,
        case: Case,
        source: TrendError,
    },
}

fn format_failures(failures: &[(f64, String)]) -> String {
    failures
        .iter()
        .map(|(theta, e)| format!("theta = {theta:.6}: {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrendError {
    #[error("{got} points left after exclusions, need at least {MIN_TREND_POINTS}")]
    TooFewPoints { got: usize },
    #[error("non-finite k value at m = {0}")]
    NonFinite(usize),
    #[error("every trend fit start diverged")]
    NoConvergence,
}

/// Most or least robust line of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Best,
    Worst,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Best => "best",
            Case::Worst => "worst",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Case {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "best" => Ok(Case::Best),
            "worst" => Ok(Case::Worst),
            other => Err(format!("unknown case {other:?} (expected best or worst)")),
        }
    }
}

/// `steps + 1` angles `iπ/steps`, `i = 0..=steps`.
pub fn theta_grid(steps: usize) -> Vec<f64> {
    assert!(steps >= 1);
    (0..=steps).map(|i| i as f64 * PI / steps as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub n_omega_points: usize,
    pub marked: Vec<usize>,
    pub fit: FitOptions,
    pub omega_threshold: f64,
    pub workers: Workers,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            n_omega_points: DEFAULT_OMEGA_POINTS,
            marked: vec![0],
            fit: FitOptions::default(),
            omega_threshold: DEFAULT_OMEGA_THRESHOLD,
            workers: Workers::available(),
        }
    }
}

/// Fit of one cross-section in a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaFit {
    pub theta: f64,
    pub fit: Result<HillParams, String>,
    /// Peak and robustness interval of the sampled curve.
    pub sampled: RobustnessReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaScanResult {
    pub m: usize,
    pub kind: SequenceKind,
    pub fits: Vec<ThetaFit>,
    best: usize,
    worst: usize,
}

impl ThetaScanResult {
    pub fn theta_grid(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.theta).collect()
    }

    pub fn index(&self, case: Case) -> usize {
        match case {
            Case::Best => self.best,
            Case::Worst => self.worst,
        }
    }

    pub fn theta(&self, case: Case) -> f64 {
        self.fits[self.index(case)].theta
    }

    pub fn entry(&self, case: Case) -> &ThetaFit {
        &self.fits[self.index(case)]
    }

    /// Hill fit of the selected line; always a successful fit.
    pub fn params(&self, case: Case) -> &HillParams {
        self.entry(case)
            .fit
            .as_ref()
            .expect("selected scan entries always hold a successful fit")
    }

    pub fn theta_best(&self) -> f64 {
        self.theta(Case::Best)
    }

    pub fn theta_worst(&self) -> f64 {
        self.theta(Case::Worst)
    }
}

/// Index of the largest (`Best`) or smallest (`Worst`) fitted `k`; ties go
/// to the earlier, i.e. smaller, angle.
fn select(fits: &[ThetaFit], case: Case) -> Option<usize> {
    let mut chosen: Option<(usize, f64)> = None;
    for (i, f) in fits.iter().enumerate() {
        let Ok(p) = &f.fit else { continue };
        let k = p.curve.k;
        let better = match chosen {
            None => true,
            Some((_, ck)) => match case {
                Case::Best => k > ck,
                Case::Worst => k < ck,
            },
        };
        if better {
            chosen = Some((i, k));
        }
    }
    chosen.map(|(i, _)| i)
}

pub fn scan_theta(
    m: usize,
    kind: SequenceKind,
    theta_grid: &[f64],
    options: &ScanOptions,
) -> Result<ThetaScanResult, AnalysisError> {
    if theta_grid.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    let fits = parallel_map(theta_grid.len(), options.workers, |i| {
        let theta = theta_grid[i];
        let cs = sweep_omega(
            m,
            kind,
            theta,
            options.n_omega_points,
            &options.marked,
            Workers::ONE,
        )?;
        let sampled = robustness_from_samples(&cs.omega_axis, &cs.prob, options.omega_threshold);
        let fit = fit_hill(&cs.omega_axis, &cs.prob, &options.fit)
            .map_err(|e| e.to_string())
            .and_then(|p| match p.implausibility(sampled.p_max) {
                Some(reason) => Err(format!("implausible fit: {reason}")),
                None => Ok(p),
            });
        Ok::<_, SweepError>(ThetaFit {
            theta,
            fit,
            sampled,
        })
    })?;
    let (Some(best), Some(worst)) = (select(&fits, Case::Best), select(&fits, Case::Worst)) else {
        return Err(AnalysisError::AllFitsFailed {
            kind,
            m,
            failures: fits
                .iter()
                .filter_map(|f| f.fit.as_ref().err().map(|e| (f.theta, e.clone())))
                .collect(),
        });
    };
    Ok(ThetaScanResult {
        m,
        kind,
        fits,
        best,
        worst,
    })
}

/// Hill fit of a single cross-section at a fixed angle.
pub fn fit_line(
    m: usize,
    kind: SequenceKind,
    theta: f64,
    options: &ScanOptions,
) -> Result<HillParams, AnalysisError> {
    let cs = sweep_omega(
        m,
        kind,
        theta,
        options.n_omega_points,
        &options.marked,
        options.workers,
    )?;
    fit_hill(&cs.omega_axis, &cs.prob, &options.fit).map_err(|source| AnalysisError::Fit {
        kind,
        m,
        theta,
        source,
    })
}

/// `k(m)` trend along one fixed angle, e.g. the reference lines of phase
/// matching.
pub fn fixed_angle_trend(
    kind: SequenceKind,
    case: Case,
    theta: f64,
    m_range: impl IntoIterator<Item = usize>,
    options: &ScanOptions,
    excluded_m: &[usize],
) -> Result<(KTrend, Vec<HillParams>), AnalysisError> {
    let params = m_range
        .into_iter()
        .map(|m| fit_line(m, kind, theta, options).map(|p| (m, p)))
        .collect::<Result<Vec<_>, _>>()?;
    let points: Series = params.iter().map(|(m, p)| (*m, p.curve.k)).collect();
    let fit = fit_k_trend(&points, excluded_m).map_err(|source| AnalysisError::Trend {
        kind,
        case,
        source,
    })?;
    let trend = KTrend {
        kind,
        case,
        points,
        excluded_m: excluded_m.to_vec(),
        fit,
    };
    Ok((trend, params.into_iter().map(|(_, p)| p).collect()))
}

/// Parameters of `k(m) = k1·e^(−m·k2) + k3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub sigma: f64,
    /// The exponential term is not identifiable from the data (flat data or
    /// a decay term that vanishes on every fitted `m`).
    pub degenerate: bool,
}

impl TrendFit {
    pub fn eval(&self, m: f64) -> f64 {
        self.k1 * (-m * self.k2).exp() + self.k3
    }

    /// Limit of `k(m)` for `m → ∞`.
    pub fn asymptote(&self) -> f64 {
        if self.k2 > 0.0 || self.degenerate {
            self.k3
        } else if self.k2 == 0.0 {
            self.k1 + self.k3
        } else {
            f64::INFINITY.copysign(self.k1)
        }
    }
}

struct TrendProblem {
    m: Vec<f64>,
    k: Vec<f64>,
}

impl Residuals for TrendProblem {
    fn residual_count(&self) -> usize {
        self.m.len()
    }

    fn param_count(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64], r: &mut [f64], jac: Option<&mut DMatrix<f64>>) {
        for (i, (&m, &k)) in self.m.iter().zip(&self.k).enumerate() {
            r[i] = x[0] * (-m * x[1]).exp() + x[2] - k;
        }
        if let Some(j) = jac {
            for (i, &m) in self.m.iter().enumerate() {
                let e = (-m * x[1]).exp();
                j[(i, 0)] = e;
                j[(i, 1)] = -m * x[0] * e;
                j[(i, 2)] = 1.0;
            }
        }
    }
}

/// Linear least squares for `(k1, k3)` at fixed rate `k2`.
fn linear_start(problem: &TrendProblem, rate: f64) -> Option<(f64, f64)> {
    let n = problem.m.len() as f64;
    let e: Vec<f64> = problem.m.iter().map(|&m| (-m * rate).exp()).collect();
    let se: f64 = e.iter().sum();
    let see: f64 = e.iter().map(|v| v * v).sum();
    let sk: f64 = problem.k.iter().sum();
    let sek: f64 = e.iter().zip(&problem.k).map(|(a, b)| a * b).sum();
    let det = see * n - se * se;
    if det.abs() <= f64::EPSILON * see * n {
        return None;
    }
    let k1 = (sek * n - se * sk) / det;
    let k3 = (see * sk - se * sek) / det;
    Some((k1, k3))
}

pub fn fit_k_trend(points: &[(usize, f64)], excluded_m: &[usize]) -> Result<TrendFit, TrendError> {
    let kept: Vec<(usize, f64)> = points
        .iter()
        .copied()
        .filter(|(m, _)| !excluded_m.contains(m))
        .collect();
    if kept.len() < MIN_TREND_POINTS {
        return Err(TrendError::TooFewPoints { got: kept.len() });
    }
    if let Some(&(m, _)) = kept.iter().find(|(_, k)| !k.is_finite()) {
        return Err(TrendError::NonFinite(m));
    }
    let problem = TrendProblem {
        m: kept.iter().map(|&(m, _)| m as f64).collect(),
        k: kept.iter().map(|&(_, k)| k).collect(),
    };
    let dof = (kept.len() - 3) as f64;
    let mean = problem.k.iter().sum::<f64>() / problem.k.len() as f64;
    let lo = problem.k.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = problem.k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= FLAT_TREND_RANGE * mean.abs().max(1.0) {
        let ss: f64 = problem.k.iter().map(|k| (k - mean).powi(2)).sum();
        return Ok(TrendFit {
            k1: 0.0,
            k2: TREND_RATE_STARTS[0],
            k3: mean,
            sigma: (ss / dof).sqrt(),
            degenerate: true,
        });
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for rate in TREND_RATE_STARTS {
        let Some((k1, k3)) = linear_start(&problem, rate) else {
            continue;
        };
        let out = minimize(&problem, &[k1, rate, k3], LmSettings::default());
        if !out.usable() {
            continue;
        }
        if best.as_ref().is_none_or(|(c, _)| out.cost < *c) {
            best = Some((out.cost, out.x));
        }
    }
    let (cost, x) = best.ok_or(TrendError::NoConvergence)?;
    let scale = problem
        .k
        .iter()
        .map(|k| k.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let decay_vanishes = problem
        .m
        .iter()
        .all(|&m| (x[0] * (-m * x[1]).exp()).abs() <= FLAT_TREND_RANGE * scale);
    Ok(TrendFit {
        k1: x[0],
        k2: x[1],
        k3: x[2],
        sigma: (cost / dof).sqrt(),
        degenerate: decay_vanishes,
    })
}

/// Coin sizes left out of a trend fit, per sequence and case.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Exclusions(BTreeMap<(SequenceKind, Case), Vec<usize>>);

impl Exclusions {
    pub fn none() -> Self {
        Self::default()
    }

    /// `m = 4` left out of the best-case phase-matching trend, where `k`
    /// behaves differently for small coins.
    pub fn standard() -> Self {
        let mut e = Self::default();
        e.set(SequenceKind::PM, Case::Best, vec![4]);
        e
    }

    pub fn set(&mut self, kind: SequenceKind, case: Case, m: Vec<usize>) {
        self.0.insert((kind, case), m);
    }

    pub fn get(&self, kind: SequenceKind, case: Case) -> &[usize] {
        self.0.get(&(kind, case)).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(SequenceKind, Case), &Vec<usize>)> {
        self.0.iter()
    }
}

/// `k(m)` points with their trend.
#[derive(Debug, Clone, PartialEq)]
pub struct KTrend {
    pub kind: SequenceKind,
    pub case: Case,
    pub points: Vec<(usize, f64)>,
    pub excluded_m: Vec<usize>,
    pub fit: TrendFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceAnalysis {
    pub kind: SequenceKind,
    pub scans: Vec<ThetaScanResult>,
    pub best_trend: KTrend,
    pub worst_trend: KTrend,
}

/// One value per coin size.
pub type Series = Vec<(usize, f64)>;

impl SequenceAnalysis {
    pub fn trend(&self, case: Case) -> &KTrend {
        match case {
            Case::Best => &self.best_trend,
            Case::Worst => &self.worst_trend,
        }
    }

    pub fn scan(&self, m: usize) -> Option<&ThetaScanResult> {
        self.scans.iter().find(|s| s.m == m)
    }

    fn series(&self, f: impl Fn(&ThetaScanResult) -> f64) -> Series {
        self.scans.iter().map(|s| (s.m, f(s))).collect()
    }

    pub fn k_series(&self, case: Case) -> Series {
        self.series(|s| s.params(case).curve.k)
    }

    pub fn b_series(&self, case: Case) -> Series {
        self.series(|s| s.params(case).curve.b)
    }

    pub fn n_series(&self, case: Case) -> Series {
        self.series(|s| s.params(case).curve.n)
    }

    pub fn omega_max_series(&self, case: Case) -> Series {
        self.series(|s| s.entry(case).sampled.omega_max)
    }

    pub fn theta_series(&self, case: Case) -> Series {
        self.series(|s| s.theta(case))
    }
}

/// Θ scans for every coin size in `m_range` plus the best- and worst-case
/// `k(m)` trends.
pub fn analyze_sequence(
    kind: SequenceKind,
    m_range: impl IntoIterator<Item = usize>,
    theta_grid: &[f64],
    options: &ScanOptions,
    exclusions: &Exclusions,
) -> Result<SequenceAnalysis, AnalysisError> {
    let scans = m_range
        .into_iter()
        .map(|m| scan_theta(m, kind, theta_grid, options))
        .collect::<Result<Vec<_>, _>>()?;
    let trend = |case: Case| -> Result<KTrend, AnalysisError> {
        let points: Series = scans
            .iter()
            .map(|s| (s.m, s.params(case).curve.k))
            .collect();
        let excluded_m = exclusions.get(kind, case).to_vec();
        let fit = fit_k_trend(&points, &excluded_m).map_err(|source| AnalysisError::Trend {
            kind,
            case,
            source,
        })?;
        Ok(KTrend {
            kind,
            case,
            points,
            excluded_m,
            fit,
        })
    };
    let best_trend = trend(Case::Best)?;
    let worst_trend = trend(Case::Worst)?;
    Ok(SequenceAnalysis {
        kind,
        scans,
        best_trend,
        worst_trend,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub kind: SequenceKind,
    pub k: f64,
    pub theta: f64,
    pub k3: f64,
}

/// Sequences ordered by fitted `k` (largest first) at a common coin size.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub m: usize,
    pub best: Vec<RankEntry>,
    pub worst: Vec<RankEntry>,
}

impl Ranking {
    pub fn position(&self, case: Case, kind: SequenceKind) -> Option<usize> {
        let list = match case {
            Case::Best => &self.best,
            Case::Worst => &self.worst,
        };
        list.iter().position(|e| e.kind == kind)
    }
}

/// Ranks sequences at the largest coin size present in every analysis.
/// Returns `None` when the analyses share no coin size.
pub fn compare_sequences(analyses: &[SequenceAnalysis]) -> Option<Ranking> {
    let m = analyses
        .iter()
        .map(|a| a.scans.iter().map(|s| s.m).collect::<Vec<_>>())
        .reduce(|acc, ms| acc.into_iter().filter(|m| ms.contains(m)).collect())?
        .into_iter()
        .max()?;
    let rank = |case: Case| {
        let mut entries: Vec<RankEntry> = analyses
            .iter()
            .map(|a| {
                let scan = a.scan(m).expect("m is common to every analysis");
                RankEntry {
                    kind: a.kind,
                    k: scan.params(case).curve.k,
                    theta: scan.theta(case),
                    k3: a.trend(case).fit.k3,
                }
            })
            .collect();
        // stable: equal k keep input order
        entries.sort_by(|a, b| b.k.total_cmp(&a.k));
        entries
    };
    Some(Ranking {
        m,
        best: rank(Case::Best),
        worst: rank(Case::Worst),
    })
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (case, list) in [(Case::Best, &self.best), (Case::Worst, &self.worst)] {
            writeln!(f, "{case}-theta ranking by fitted k at m = {}", self.m)?;
            for (i, e) in list.iter().enumerate() {
                writeln!(
                    f,
                    "  {}. {:<2}  k = {:.6}  theta = {:.1}pi/360  k3 (m -> inf) = {:.6}",
                    i + 1,
                    e.kind,
                    e.k,
                    e.theta * 360.0 / PI,
                    e.k3
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{THETA_BEST_REF, THETA_WORST_REF};

    fn trend_points(k1: f64, k2: f64, k3: f64, ms: std::ops::RangeInclusive<usize>) -> Series {
        ms.map(|m| (m, k1 * (-(m as f64) * k2).exp() + k3))
            .collect()
    }

    #[test]
    fn grid_endpoints() {
        let g = theta_grid(360);
        assert_eq!(g.len(), 361);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[360], PI);
        assert!((g[233] - THETA_BEST_REF).abs() < 1e-15);
    }

    #[test]
    fn trend_recovers_published_shape() {
        let pts = trend_points(16.3564, 0.123172, -3.52146, 5..=9);
        let fit = fit_k_trend(&pts, &[]).unwrap();
        assert!((fit.k1 / 16.3564 - 1.0).abs() < 1e-4, "{fit:?}");
        assert!((fit.k2 / 0.123172 - 1.0).abs() < 1e-4);
        assert!((fit.k3 / -3.52146 - 1.0).abs() < 1e-4);
        assert!(!fit.degenerate);
        assert!(fit.sigma < 1e-6);
        assert_eq!(fit.asymptote(), fit.k3);
    }

    #[test]
    fn trend_respects_exclusions() {
        let mut pts = trend_points(1.9, 0.25, -0.1, 4..=9);
        pts[0].1 = 100.0;
        let fit = fit_k_trend(&pts, &[4]).unwrap();
        assert!((fit.k3 + 0.1).abs() < 1e-6);
        assert_eq!(
            fit_k_trend(&pts, &[4, 5, 6]),
            Err(TrendError::TooFewPoints { got: 3 })
        );
    }

    #[test]
    fn flat_trend_is_degenerate() {
        let pts: Series = (4..=9).map(|m| (m, 2.6)).collect();
        let fit = fit_k_trend(&pts, &[]).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.k1, 0.0);
        assert!((fit.k3 - 2.6).abs() < 1e-12);
        assert_eq!(fit.asymptote(), 2.6);
    }

    #[test]
    fn case_parsing() {
        assert_eq!("Best".parse::<Case>().unwrap(), Case::Best);
        assert_eq!("worst".parse::<Case>().unwrap(), Case::Worst);
        assert!("middle".parse::<Case>().is_err());
    }

    #[test]
    fn exclusions_default() {
        let e = Exclusions::standard();
        assert_eq!(e.get(SequenceKind::PM, Case::Best), &[4]);
        assert!(e.get(SequenceKind::PM, Case::Worst).is_empty());
        assert!(e.get(SequenceKind::A3, Case::Best).is_empty());
    }

    #[test]
    fn small_scan_orders_reference_lines() {
        let opts = ScanOptions {
            workers: Workers::ONE,
            ..ScanOptions::default()
        };
        let scan = scan_theta(
            6,
            SequenceKind::PM,
            &[THETA_WORST_REF, THETA_BEST_REF],
            &opts,
        )
        .unwrap();
        assert_eq!(scan.theta_best(), THETA_BEST_REF);
        assert_eq!(scan.theta_worst(), THETA_WORST_REF);
        assert!(scan.params(Case::Best).curve.k > scan.params(Case::Worst).curve.k);
    }

    #[test]
    fn empty_grid_rejected() {
        assert_eq!(
            scan_theta(4, SequenceKind::PM, &[], &ScanOptions::default()),
            Err(AnalysisError::EmptyGrid)
        );
    }
}
