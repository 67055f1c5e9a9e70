//! Published reference values of the four result tables, their
//! recomputation and CSV replicas with a deviation column per value.
//!
//! Angles in the reference data are integers in units of `π/360`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::analysis::{
    fit_line, fixed_angle_trend, AnalysisError, Case, Exclusions, KTrend, ScanOptions,
    SequenceAnalysis,
};
use crate::format::fmt9;
use crate::hill::HillParams;
use crate::parallel::{parallel_map, Workers};
use crate::schedule::SequenceKind;

const REFERENCE_TOML: &str = include_str!("../data/reference_tables.toml");

/// Angle `units·π/360`.
pub fn angle(units: u32) -> f64 {
    units as f64 * PI / 360.0
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct HillReference {
    pub m: usize,
    /// In units of `π/360`.
    pub theta: u32,
    pub b: f64,
    pub k: f64,
    pub n: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct TrendReference {
    #[serde(default = "phase_matching")]
    pub kind: SequenceKind,
    pub case: Case,
    /// Fixed angle of the line in units of `π/360`; absent for Θ-scan trends.
    #[serde(default)]
    pub theta: Option<u32>,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub sigma: f64,
}

fn phase_matching() -> SequenceKind {
    SequenceKind::PM
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReferenceTables {
    pub hill: Vec<HillReference>,
    pub pm_trend: Vec<TrendReference>,
    pub sequence_trend: Vec<TrendReference>,
}

impl ReferenceTables {
    pub fn sequence(&self, kind: SequenceKind, case: Case) -> Option<&TrendReference> {
        self.sequence_trend
            .iter()
            .find(|r| r.kind == kind && r.case == case)
    }

    pub fn pm(&self, case: Case) -> Option<&TrendReference> {
        self.pm_trend.iter().find(|r| r.case == case)
    }
}

/// The embedded reference values.
pub fn reference() -> &'static ReferenceTables {
    static TABLES: OnceLock<ReferenceTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        toml::from_str(REFERENCE_TOML).expect("embedded reference tables are valid")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableId {
    /// Hill fits of phase matching at the two reference angles.
    HillFits,
    /// `k(m)` trends of phase matching at the reference angles.
    PhaseMatchingTrend,
    /// `k(m)` trends of the alternating sequences.
    Alternating,
    /// `k(m)` trends of the half-split sequences.
    HalfSplit,
}

impl TableId {
    pub const ALL: [TableId; 4] = [
        TableId::HillFits,
        TableId::PhaseMatchingTrend,
        TableId::Alternating,
        TableId::HalfSplit,
    ];

    pub fn number(self) -> u8 {
        match self {
            TableId::HillFits => 1,
            TableId::PhaseMatchingTrend => 2,
            TableId::Alternating => 3,
            TableId::HalfSplit => 4,
        }
    }

    /// Sequences whose Θ scans the table needs; empty for fixed-angle tables.
    pub fn kinds(self) -> &'static [SequenceKind] {
        use SequenceKind::*;
        match self {
            TableId::HillFits | TableId::PhaseMatchingTrend => &[],
            TableId::Alternating => &[A1, A2, A3],
            TableId::HalfSplit => &[H1, H2, H3],
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for TableId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TableId::ALL
            .into_iter()
            .find(|t| t.number().to_string() == s.trim())
            .ok_or_else(|| format!("unknown table {s:?} (expected 1, 2, 3 or 4)"))
    }
}

/// `(x − reference)/|reference|`.
pub fn relative_deviation(x: f64, reference: f64) -> f64 {
    (x - reference) / reference.abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HillRow {
    pub reference: HillReference,
    pub computed: HillParams,
}

/// Refits every Hill row of table 1.
pub fn hill_rows(options: &ScanOptions) -> Result<Vec<HillRow>, AnalysisError> {
    let refs = &reference().hill;
    let inner = ScanOptions {
        workers: Workers::ONE,
        ..options.clone()
    };
    let fits = parallel_map(refs.len(), options.workers, |i| {
        let r = refs[i];
        fit_line(r.m, SequenceKind::PM, angle(r.theta), &inner)
    })?;
    Ok(refs
        .iter()
        .zip(fits)
        .map(|(&reference, computed)| HillRow {
            reference,
            computed,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub reference: TrendReference,
    pub computed: KTrend,
}

/// Phase-matching trends along the two reference angles (table 2).
pub fn pm_trend_rows(
    m_range: std::ops::RangeInclusive<usize>,
    options: &ScanOptions,
    exclusions: &Exclusions,
) -> Result<Vec<TrendRow>, AnalysisError> {
    reference()
        .pm_trend
        .iter()
        .map(|&reference| {
            let theta = angle(reference.theta.expect("phase-matching rows carry an angle"));
            let excluded = exclusions.get(SequenceKind::PM, reference.case);
            let (computed, _) = fixed_angle_trend(
                SequenceKind::PM,
                reference.case,
                theta,
                m_range.clone(),
                options,
                excluded,
            )?;
            Ok(TrendRow {
                reference,
                computed,
            })
        })
        .collect()
}

/// Pairs Θ-scan trends with their reference rows; analyses without a
/// reference row are skipped.
pub fn sequence_trend_rows(analyses: &[SequenceAnalysis]) -> Vec<TrendRow> {
    let refs = reference();
    analyses
        .iter()
        .flat_map(|a| {
            [Case::Best, Case::Worst]
                .into_iter()
                .filter_map(move |case| {
                    refs.sequence(a.kind, case).map(|&reference| TrendRow {
                        reference,
                        computed: a.trend(case).clone(),
                    })
                })
        })
        .collect()
}

fn theta_label(units: u32) -> String {
    format!("{units}pi/360")
}

/// Value, reference and relative deviation for each column, in that order.
fn triples(header: &mut Vec<String>, names: &[&str]) {
    header.extend(names.iter().map(|n| n.to_string()));
    header.extend(names.iter().map(|n| format!("{n}_ref")));
    header.extend(names.iter().map(|n| format!("{n}_dev")));
}

fn compared(values: &[f64], refs: &[f64]) -> Vec<String> {
    let mut out: Vec<String> = values.iter().map(|&v| fmt9(v)).collect();
    out.extend(refs.iter().map(|&r| fmt9(r)));
    out.extend(
        values
            .iter()
            .zip(refs)
            .map(|(&v, &r)| fmt9(relative_deviation(v, r))),
    );
    out
}

/// Table 1 replica: `no,m,theta,b,k,n,sigma` followed by the reference
/// values and relative deviations.
pub fn write_hill_csv<W: Write>(rows: &[HillRow], mut out: W) -> io::Result<()> {
    let mut header = vec!["no".to_string(), "m".into(), "theta".into()];
    triples(&mut header, &["b", "k", "n", "sigma"]);
    writeln!(out, "{}", header.join(","))?;
    for (i, row) in rows.iter().enumerate() {
        let r = &row.reference;
        let c = &row.computed;
        let mut fields = vec![(i + 1).to_string(), r.m.to_string(), theta_label(r.theta)];
        fields.extend(compared(
            &[c.curve.b, c.curve.k, c.curve.n, c.sigma],
            &[r.b, r.k, r.n, r.sigma],
        ));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Table 2 (fixed angles, `theta` column) or tables 3 and 4 (`sequence` and
/// `case` columns) replica with `k1,k2,k3,sigma`, references and relative
/// deviations.
pub fn write_trend_csv<W: Write>(rows: &[TrendRow], mut out: W) -> io::Result<()> {
    let fixed_angle = rows.iter().all(|r| r.reference.theta.is_some());
    let mut header = vec!["no".to_string()];
    if fixed_angle {
        header.push("theta".into());
    } else {
        header.extend(["sequence".to_string(), "case".into()]);
    }
    triples(&mut header, &["k1", "k2", "k3", "sigma"]);
    header.push("excluded_m".into());
    writeln!(out, "{}", header.join(","))?;
    for (i, row) in rows.iter().enumerate() {
        let r = &row.reference;
        let f = &row.computed.fit;
        let mut fields = vec![(i + 1).to_string()];
        match r.theta {
            Some(units) if fixed_angle => fields.push(theta_label(units)),
            _ => fields.extend([r.kind.to_string(), r.case.to_string()]),
        }
        fields.extend(compared(
            &[f.k1, f.k2, f.k3, f.sigma],
            &[r.k1, r.k2, r.k3, r.sigma],
        ));
        let excluded: Vec<String> = row
            .computed
            .excluded_m
            .iter()
            .map(|m| m.to_string())
            .collect();
        fields.push(excluded.join(" "));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
