//! Run configuration. Values are layered: built-in defaults, the TOML file
//! given with `--config`, metadata read from an input file, then flags.
//! Everything is validated in [`RawConfig::resolve`] before any work starts.
//!
//! ```toml
//! [walk]
//! m = 6
//! marked = [0]
//! iterations = 7            # overrides the default count for `run`
//!
//! [sweep]
//! kind = "PM"
//! resolution = 181
//! theta = "233pi/360"       # or radians
//! omega_points = 201
//!
//! [fit]
//! fix_center = false
//! strict_nk = false
//! omega_threshold = 0.9
//! window = "central-lobe"   # or "full"
//!
//! [scan]
//! theta_step = "pi/360"
//! m_range = "4..9"
//! kinds = ["PM", "A3"]
//! exclusions = ["PM:best:4"]
//!
//! [output]
//! directory = "out"
//! formats = ["csv", "ppm"]
//! ```

use std::f64::consts::PI;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use qrws_core::analysis::MIN_TREND_POINTS;
use qrws_core::walk::{WalkError, MAX_COIN_SIZE};
use qrws_core::{
    Case, Exclusions, FitOptions, FitWindow, ScanOptions, SequenceKind, WalkConfig, Workers,
};
use serde::Deserialize;

use crate::angle::parse_angle;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AngleValue {
    Radians(f64),
    Text(String),
}

impl AngleValue {
    fn radians(&self) -> Result<f64, String> {
        match self {
            AngleValue::Radians(x) if x.is_finite() => Ok(*x),
            AngleValue::Radians(x) => Err(format!("{x} is not finite")),
            AngleValue::Text(s) => parse_angle(s),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    pub m: Option<usize>,
    pub marked: Option<Vec<usize>>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub kind: Option<String>,
    pub resolution: Option<usize>,
    pub theta: Option<AngleValue>,
    pub omega_points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub fix_center: Option<bool>,
    pub strict_nk: Option<bool>,
    pub omega_threshold: Option<f64>,
    pub window: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub theta_step: Option<AngleValue>,
    pub m_range: Option<String>,
    pub kinds: Option<Vec<String>>,
    pub exclusions: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    pub formats: Option<Vec<String>>,
}

/// One configuration layer; `None` leaves the value to lower layers.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    pub walk: WalkSection,
    pub sweep: SweepSection,
    pub fit: FitSection,
    pub scan: ScanSection,
    pub output: OutputSection,
}

fn layer<T>(base: &mut Option<T>, over: Option<T>) {
    if over.is_some() {
        *base = over;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Ppm,
}

/// Validated settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub m: usize,
    pub marked: Vec<usize>,
    pub iterations: Option<usize>,
    pub kind: SequenceKind,
    pub resolution: usize,
    pub theta: f64,
    pub omega_points: usize,
    pub fit: FitOptions,
    pub omega_threshold: f64,
    pub theta_steps: usize,
    pub m_range: RangeInclusive<usize>,
    pub kinds: Vec<SequenceKind>,
    pub exclusions: Exclusions,
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    pub workers: Workers,
}

fn parse_kind(key: &str, s: &str) -> Result<SequenceKind, CliError> {
    s.trim().parse().map_err(|e| CliError::invalid(key, e))
}

fn parse_m_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let parse = |t: &str| {
        t.trim()
            .trim_start_matches('=')
            .parse::<usize>()
            .map_err(|_| format!("expected LO..HI, got {s:?}"))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo < 2 || hi > MAX_COIN_SIZE || lo > hi {
        return Err(format!(
            "{lo}..{hi} is not a range within 2..{MAX_COIN_SIZE}"
        ));
    }
    Ok(lo..=hi)
}

/// `KIND:case:m1,m2,...`, e.g. `PM:best:4`; an empty list is allowed.
fn parse_exclusion(s: &str) -> Result<(SequenceKind, Case, Vec<usize>), String> {
    let mut parts = s.splitn(3, ':');
    let (Some(kind), Some(case), Some(list)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("expected KIND:case:m1,m2, got {s:?}"));
    };
    let kind: SequenceKind = kind
        .trim()
        .parse()
        .map_err(|e: qrws_core::schedule::ScheduleError| e.to_string())?;
    let case: Case = case.parse()?;
    let ms = list
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| format!("bad coin size {t:?} in {s:?}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((kind, case, ms))
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Values set in `over` replace those in `self`.
    pub fn layer(mut self, over: RawConfig) -> Self {
        let (w, s, f, c, o) = (over.walk, over.sweep, over.fit, over.scan, over.output);
        layer(&mut self.walk.m, w.m);
        layer(&mut self.walk.marked, w.marked);
        layer(&mut self.walk.iterations, w.iterations);
        layer(&mut self.sweep.kind, s.kind);
        layer(&mut self.sweep.resolution, s.resolution);
        layer(&mut self.sweep.theta, s.theta);
        layer(&mut self.sweep.omega_points, s.omega_points);
        layer(&mut self.fit.fix_center, f.fix_center);
        layer(&mut self.fit.strict_nk, f.strict_nk);
        layer(&mut self.fit.omega_threshold, f.omega_threshold);
        layer(&mut self.fit.window, f.window);
        layer(&mut self.scan.theta_step, c.theta_step);
        layer(&mut self.scan.m_range, c.m_range);
        layer(&mut self.scan.kinds, c.kinds);
        layer(&mut self.scan.exclusions, c.exclusions);
        layer(&mut self.output.directory, o.directory);
        layer(&mut self.output.formats, o.formats);
        self
    }

    pub fn resolve(&self, workers: Option<usize>) -> Result<Settings, CliError> {
        let m = self.walk.m.unwrap_or(4);
        let marked = self.walk.marked.clone().unwrap_or_else(|| vec![0]);
        if let Err(e) = WalkConfig::new(m, marked.iter().copied()) {
            let key = match e {
                WalkError::CoinSize(_) => "walk.m",
                _ => "walk.marked",
            };
            return Err(CliError::invalid(key, e));
        }
        if self.walk.iterations == Some(0) {
            return Err(CliError::invalid("walk.iterations", "must be at least 1"));
        }

        let kind = parse_kind("sweep.kind", self.sweep.kind.as_deref().unwrap_or("PM"))?;
        let resolution = self.sweep.resolution.unwrap_or(181);
        if resolution < 2 {
            return Err(CliError::invalid("sweep.resolution", "must be at least 2"));
        }
        let theta = match &self.sweep.theta {
            Some(a) => a
                .radians()
                .map_err(|e| CliError::invalid("sweep.theta", e))?,
            None => 233.0 * PI / 360.0,
        };
        if !(0.0..=PI).contains(&theta) {
            return Err(CliError::invalid(
                "sweep.theta",
                format!("{theta} is outside [0, pi]"),
            ));
        }
        let omega_points = self.sweep.omega_points.unwrap_or(201);
        if omega_points < 11 || omega_points.is_multiple_of(2) {
            return Err(CliError::invalid(
                "sweep.omega_points",
                format!("{omega_points} is not an odd number >= 11"),
            ));
        }

        let omega_threshold = self.fit.omega_threshold.unwrap_or(0.9);
        if !(omega_threshold > 0.0 && omega_threshold < 1.0) {
            return Err(CliError::invalid(
                "fit.omega_threshold",
                format!("{omega_threshold} is outside (0, 1)"),
            ));
        }
        let window = match self.fit.window.as_deref().unwrap_or("central-lobe") {
            "central-lobe" => FitWindow::CentralLobe,
            "full" => FitWindow::Full,
            other => {
                return Err(CliError::invalid(
                    "fit.window",
                    format!("{other:?} (expected central-lobe or full)"),
                ))
            }
        };
        let fit = FitOptions {
            fix_center: self.fit.fix_center.unwrap_or(false),
            strict_nk: self.fit.strict_nk.unwrap_or(false),
            window,
        };

        let theta_steps = match &self.scan.theta_step {
            None => 360,
            Some(a) => {
                let step = a
                    .radians()
                    .map_err(|e| CliError::invalid("scan.theta_step", e))?;
                let steps = (PI / step).round();
                if step <= 0.0 || steps < 1.0 || (steps * step - PI).abs() > 1e-9 {
                    return Err(CliError::invalid(
                        "scan.theta_step",
                        format!("{step} does not divide [0, pi] into whole steps"),
                    ));
                }
                steps as usize
            }
        };
        let m_range = match &self.scan.m_range {
            None => 4..=9,
            Some(s) => parse_m_range(s).map_err(|e| CliError::invalid("scan.m_range", e))?,
        };
        let kinds = match &self.scan.kinds {
            None => SequenceKind::ALL.to_vec(),
            Some(list) if list.is_empty() => {
                return Err(CliError::invalid("scan.kinds", "empty list"))
            }
            Some(list) => list
                .iter()
                .map(|s| parse_kind("scan.kinds", s))
                .collect::<Result<_, _>>()?,
        };
        let exclusions = match &self.scan.exclusions {
            None => Exclusions::standard(),
            Some(list) => {
                let mut ex = Exclusions::none();
                for s in list {
                    let (kind, case, ms) =
                        parse_exclusion(s).map_err(|e| CliError::invalid("scan.exclusions", e))?;
                    ex.set(kind, case, ms);
                }
                ex
            }
        };

        let directory = self
            .output
            .directory
            .clone()
            .unwrap_or_else(|| PathBuf::from("."));
        let formats = match &self.output.formats {
            None => vec![Format::Csv],
            Some(list) => list
                .iter()
                .map(|f| match f.as_str() {
                    "csv" => Ok(Format::Csv),
                    "ppm" => Ok(Format::Ppm),
                    other => Err(CliError::invalid(
                        "output.formats",
                        format!("{other:?} (expected csv or ppm)"),
                    )),
                })
                .collect::<Result<_, _>>()?,
        };
        let workers = match workers {
            None => Workers::available(),
            Some(n) => {
                Workers::new(n).ok_or_else(|| CliError::invalid("workers", "must be at least 1"))?
            }
        };

        Ok(Settings {
            m,
            marked,
            iterations: self.walk.iterations,
            kind,
            resolution,
            theta,
            omega_points,
            fit,
            omega_threshold,
            theta_steps,
            m_range,
            kinds,
            exclusions,
            directory,
            formats,
            workers,
        })
    }
}

impl Settings {
    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            n_omega_points: self.omega_points,
            marked: self.marked.clone(),
            fit: self.fit,
            omega_threshold: self.omega_threshold,
            workers: self.workers,
        }
    }

    /// Every best/worst trend of `kinds` keeps enough coin sizes after the
    /// exclusions.
    pub fn check_trend_points(&self, kinds: &[SequenceKind]) -> Result<(), CliError> {
        for &kind in kinds {
            for case in [Case::Best, Case::Worst] {
                let excluded = self.exclusions.get(kind, case);
                let left = self
                    .m_range
                    .clone()
                    .filter(|m| !excluded.contains(m))
                    .count();
                if left < MIN_TREND_POINTS {
                    return Err(CliError::invalid(
                        "scan.m_range",
                        format!(
                            "{kind} {case} keeps {left} coin sizes, a trend needs {MIN_TREND_POINTS}"
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn marked_label(&self) -> String {
        self.marked
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn exclusions_label(&self) -> String {
        let parts: Vec<String> = self
            .exclusions
            .iter()
            .filter(|(_, ms)| !ms.is_empty())
            .map(|((kind, case), ms)| {
                let ms: Vec<String> = ms.iter().map(|m| m.to_string()).collect();
                format!("{kind}:{case}:{}", ms.join("+"))
            })
            .collect();
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join(";")
        }
    }
}
