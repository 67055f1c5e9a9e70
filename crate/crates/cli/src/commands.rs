//! Command implementations. Each one validates its settings and output
//! targets, computes, and returns the finished outputs.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qrws_core::format::fmt9;
use qrws_core::hill::robustness_from_samples;
use qrws_core::tables::{self, TableId};
use qrws_core::walk::final_state;
use qrws_core::{
    analyze_sequence, compare_sequences, fit_hill, polar_to_phases, scan_theta, sweep_omega,
    sweep_phase_plane, theta_grid, Case, CoinPhases, FitWindow, PhaseSchedule, SequenceAnalysis,
    SequenceKind, WalkConfig, VERSION,
};

use crate::angle::parse_angle;
use crate::config::{AngleValue, Format, RawConfig, Settings};
use crate::error::CliError;
use crate::heatmap::{colormap_label, read_grid_csv, write_ppm, PhaseGrid};
use crate::{
    Artifact, Command, CrossSectionArgs, FitHillArgs, HeatmapArgs, KTrendArgs, OutArgs, RunArgs,
    ScanThetaArgs, Sweep2dArgs, TablesArgs, Target,
};

/// Outputs of a command, plus a failure to report once they are written
/// (used by `verify`, whose report is wanted even when checks fail).
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub failure: Option<CliError>,
}

impl From<Vec<Artifact>> for Outcome {
    fn from(artifacts: Vec<Artifact>) -> Self {
        Self {
            artifacts,
            failure: None,
        }
    }
}

pub fn execute(
    command: &Command,
    base: RawConfig,
    workers: Option<usize>,
) -> Result<Outcome, CliError> {
    let flags = command.overrides();
    if let Command::FitHill(
        a @ FitHillArgs {
            input: Some(path), ..
        },
    ) = command
    {
        let data = read_cross_section(path)?;
        let s = base
            .layer(data.metadata.clone())
            .layer(flags)
            .resolve(workers)?;
        return fit_hill_cmd(a, &s, Some(data)).map(Outcome::from);
    }
    let s = base.layer(flags).resolve(workers)?;
    Ok(match command {
        Command::Run(a) => run_cmd(a, &s)?.into(),
        Command::Sweep2d(a) => sweep2d_cmd(a, &s)?.into(),
        Command::CrossSection(a) => cross_section_cmd(a, &s)?.into(),
        Command::FitHill(a) => fit_hill_cmd(a, &s, None)?.into(),
        Command::ScanTheta(a) => scan_theta_cmd(a, &s)?.into(),
        Command::KTrend(a) => k_trend_cmd(a, &s)?.into(),
        Command::Tables(a) => tables_cmd(a, &s)?.into(),
        Command::Verify => verify_cmd(),
        Command::Heatmap(a) => heatmap_cmd(a, &s)?.into(),
    })
}

fn header(command: &str, items: &[(&str, String)]) -> String {
    let mut h = format!("# qrws {VERSION} {command}");
    for (k, v) in items {
        let _ = write!(h, " {k}={v}");
    }
    h.push('\n');
    h
}

fn fit_items(s: &Settings) -> Vec<(&'static str, String)> {
    let window = match s.fit.window {
        FitWindow::CentralLobe => "central-lobe",
        FitWindow::Full => "full",
    };
    vec![
        ("window", window.into()),
        ("fix_center", s.fit.fix_center.to_string()),
        ("strict_nk", s.fit.strict_nk.to_string()),
        ("omega_threshold", fmt9(s.omega_threshold)),
    ]
}

fn file_target(path: PathBuf, key: &str) -> Result<Target, CliError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(CliError::invalid(
            key,
            format!("directory {} does not exist", parent.display()),
        ));
    }
    Ok(Target::File(path))
}

fn target(out: &Option<PathBuf>, s: &Settings, default_name: &str) -> Result<Target, CliError> {
    match out {
        Some(p) if p.as_os_str() == "-" => Ok(Target::Stdout),
        Some(p) => file_target(p.clone(), "out"),
        None => file_target(s.directory.join(default_name), "output.directory"),
    }
}

fn output_target(o: &OutArgs, s: &Settings, default_name: &str) -> Result<Target, CliError> {
    target(&o.out, s, default_name)
}

/// TOML float with 9 significant digits.
fn toml_float(x: f64) -> String {
    if x.is_finite() {
        fmt9(x)
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn toml_floats(xs: impl IntoIterator<Item = f64>) -> String {
    let items: Vec<String> = xs.into_iter().map(toml_float).collect();
    format!("[{}]", items.join(", "))
}

fn toml_ints(xs: impl IntoIterator<Item = usize>) -> String {
    let items: Vec<String> = xs.into_iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

fn angle_arg(key: &str, value: &Option<String>, default: f64) -> Result<f64, CliError> {
    match value {
        None => Ok(default),
        Some(text) => parse_angle(text).map_err(|e| CliError::invalid(key, e)),
    }
}

fn walk_config(s: &Settings) -> WalkConfig {
    WalkConfig::new(s.m, s.marked.iter().copied()).expect("validated in resolve")
}

fn run_cmd(a: &RunArgs, s: &Settings) -> Result<Vec<Artifact>, CliError> {
    let mut config = walk_config(s);
    if let Some(k) = s.iterations {
        config = config.with_iterations(k);
    }
    let base = match &a.omega {
        Some(text) => {
            let omega = parse_angle(text).map_err(|e| CliError::invalid("omega", e))?;
            polar_to_phases(omega, s.theta).map_err(|e| CliError::invalid("omega", e))?
        }
        None => CoinPhases::new(
            angle_arg("phi", &a.phi, PI)?,
            angle_arg("zeta", &a.zeta, PI)?,
        ),
    };
    let out = match &a.out {
        None => Target::Stdout,
        Some(_) => target(&a.out, s, "")?,
    };
    let state_target = match &a.state {
        Some(p) => Some(file_target(p.clone(), "state")?),
        None => None,
    };

    let schedule = PhaseSchedule::from_base(s.kind, base, config.iterations());
    let state =
        final_state(&config, &schedule.phases).map_err(|e| CliError::Numerical(e.to_string()))?;
    let p = state.success_probability(config.marked());

    let mut text = header(
        "run",
        &[
            ("m", s.m.to_string()),
            ("marked", s.marked_label()),
            ("kind", s.kind.to_string()),
            ("phi", fmt9(base.phi)),
            ("zeta", fmt9(base.zeta)),
            ("iterations", config.iterations().to_string()),
        ],
    );
    text.push_str("[run]\n");
    let _ = writeln!(text, "sequence = \"{}\"", s.kind);
    let _ = writeln!(text, "m = {}", s.m);
    let _ = writeln!(text, "marked = {}", toml_ints(s.marked.iter().copied()));
    let _ = writeln!(text, "iterations = {}", config.iterations());
    let _ = writeln!(text, "phi = {}", toml_float(base.phi));
    let _ = writeln!(text, "zeta = {}", toml_float(base.zeta));
    let _ = writeln!(text, "probability = {}", toml_float(p));
    let mut artifacts = vec![Artifact {
        target: out,
        bytes: text.into_bytes(),
    }];
    if let Some(target) = state_target {
        let mut bytes = header(
            "run-state",
            &[("m", s.m.to_string()), ("kind", s.kind.to_string())],
        )
        .into_bytes();
        state.write_csv(&mut bytes).expect("writing to memory");
        artifacts.push(Artifact { target, bytes });
    }
    Ok(artifacts)
}

fn sweep2d_cmd(a: &Sweep2dArgs, s: &Settings) -> Result<Vec<Artifact>, CliError> {
    if s.formats.is_empty() {
        return Err(CliError::invalid("output.formats", "empty list"));
    }
    let stem = format!("sweep2d_{}_m{}", s.kind, s.m);
    let mut targets = Vec::new();
    for &format in &s.formats {
        let ext = match format {
            Format::Csv => "csv",
            Format::Ppm => "ppm",
        };
        let t = match &a.output.out {
            Some(p) if p.as_os_str() == "-" && s.formats.len() > 1 => {
                return Err(CliError::invalid("out", "stdout takes a single format"))
            }
            Some(p) if p.as_os_str() != "-" => file_target(p.with_extension(ext), "out")?,
            out => target(out, s, &format!("{stem}.{ext}"))?,
        };
        targets.push((format, t));
    }

    let grid = sweep_phase_plane(s.m, s.kind, s.resolution, &s.marked, s.workers)?;
    let items = [
        ("m", s.m.to_string()),
        ("marked", s.marked_label()),
        ("kind", s.kind.to_string()),
        ("resolution", s.resolution.to_string()),
    ];
    Ok(targets
        .into_iter()
        .map(|(format, target)| {
            let bytes = match format {
                Format::Csv => {
                    let mut b = header("sweep2d", &items).into_bytes();
                    grid.write_csv(&mut b).expect("writing to memory");
                    b
                }
                Format::Ppm => {
                    let mut items = items.to_vec();
                    items.push(("colormap", colormap_label()));
                    let comment = header("sweep2d", &items);
                    let mut b = Vec::new();
                    write_ppm(&PhaseGrid::from(&grid), comment.trim_end(), &mut b)
                        .expect("writing to memory");
                    b
                }
            };
            Artifact { target, bytes }
        })
        .collect())
}

fn cross_section_cmd(a: &CrossSectionArgs, s: &Settings) -> Result<Vec<Artifact>, CliError> {
    let out = output_target(
        &a.output,
        s,
        &format!("cross_section_{}_m{}.csv", s.kind, s.m),
    )?;
    let cs = sweep_omega(s.m, s.kind, s.theta, s.omega_points, &s.marked, s.workers)?;
    let mut bytes = header(
        "cross-section",
        &[
            ("m", s.m.to_string()),
            ("marked", s.marked_label()),
            ("kind", s.kind.to_string()),
            ("theta", fmt9(s.theta)),
            ("points", s.omega_points.to_string()),
        ],
    )
    .into_bytes();
    cs.write_csv(&mut bytes).expect("writing to memory");
    Ok(vec![Artifact { target: out, bytes }])
}

/// A cross-section read from CSV; `metadata` holds the `key=value` tokens
/// of its header comment as a configuration layer.
#[derive(Debug, Clone)]
pub struct CrossSectionData {
    pub path: PathBuf,
    pub omega: Vec<f64>,
    pub prob: Vec<f64>,
    pub metadata: RawConfig,
}

pub fn read_cross_section(path: &Path) -> Result<CrossSectionData, CliError> {
    let input_err = |message: String| CliError::Input {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    let mut metadata = RawConfig::default();
    for line in text.lines().filter(|l| l.starts_with('#')) {
        for (key, value) in line.split_whitespace().filter_map(|t| t.split_once('=')) {
            match key {
                "m" => {
                    metadata.walk.m = Some(
                        value
                            .parse()
                            .map_err(|_| input_err(format!("bad m={value}")))?,
                    )
                }
                "marked" => {
                    let nodes = value
                        .split(',')
                        .map(|x| x.parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| input_err(format!("bad marked={value}")))?;
                    metadata.walk.marked = Some(nodes);
                }
                "kind" => metadata.sweep.kind = Some(value.to_string()),
                "theta" => metadata.sweep.theta = Some(AngleValue::Text(value.to_string())),
                _ => {}
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| input_err(e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| input_err(format!("missing column {name:?}")))
    };
    let (wi, pi) = (column("omega")?, column("probability")?);
    let (mut omega, mut prob) = (Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| input_err(e.to_string()))?;
        let number = |i: usize| {
            record
                .get(i)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .filter(|x| x.is_finite())
                .ok_or_else(|| input_err(format!("data row {}: bad number", row + 1)))
        };
        omega.push(number(wi)?);
        prob.push(number(pi)?);
    }
    Ok(CrossSectionData {
        path: path.to_path_buf(),
        omega,
        prob,
        metadata,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|x| x.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn fit_hill_cmd(
    a: &FitHillArgs,
    s: &Settings,
    data: Option<CrossSectionData>,
) -> Result<Vec<Artifact>, CliError> {
    let out = output_target(&a.output, s, &format!("fit_{}_m{}.toml", s.kind, s.m))?;
    let (omega, prob, source) = match data {
        // file name only: the same input fitted from another directory gives
        // the same record
        Some(d) => (d.omega, d.prob, file_name(&d.path)),
        None => {
            let cs = sweep_omega(s.m, s.kind, s.theta, s.omega_points, &s.marked, s.workers)?;
            (cs.omega_axis, cs.prob, "computed".to_string())
        }
    };
    let params = fit_hill(&omega, &prob, &s.fit)?;
    let sampled = robustness_from_samples(&omega, &prob, s.omega_threshold);

    let mut items = vec![
        ("m", s.m.to_string()),
        ("marked", s.marked_label()),
        ("kind", s.kind.to_string()),
        ("theta", fmt9(s.theta)),
        ("points", omega.len().to_string()),
        ("input", source),
    ];
    items.extend(fit_items(s));
    let mut text = header("fit-hill", &items);
    let c = params.curve;
    text.push_str("[[fit]]\n");
    let _ = writeln!(text, "sequence = \"{}\"", s.kind);
    let _ = writeln!(text, "m = {}", s.m);
    for (key, value) in [
        ("theta", s.theta),
        ("b", c.b),
        ("k", c.k),
        ("n", c.n),
        ("c", c.c),
        ("sigma", params.sigma),
    ] {
        let _ = writeln!(text, "{key} = {}", toml_float(value));
    }
    let _ = writeln!(text, "q = {}", params.q);
    let _ = writeln!(text, "n_points = {}", params.n_points);
    for (key, value) in [
        ("omega_max", sampled.omega_max),
        ("epsilon", sampled.epsilon),
        ("omega_threshold", s.omega_threshold),
    ] {
        let _ = writeln!(text, "{key} = {}", toml_float(value));
    }
    Ok(vec![Artifact {
        target: out,
        bytes: text.into_bytes(),
    }])
}

fn scan_items(s: &Settings) -> Vec<(&'static str, String)> {
    let mut items = vec![
        ("marked", s.marked_label()),
        ("points", s.omega_points.to_string()),
        ("theta_step", format!("pi/{}", s.theta_steps)),
    ];
    items.extend(fit_items(s));
    items
}

fn scan_theta_cmd(a: &ScanThetaArgs, s: &Settings) -> Result<Vec<Artifact>, CliError> {
    let out = output_target(&a.output, s, &format!("scan_theta_{}_m{}.csv", s.kind, s.m))?;
    let grid = theta_grid(s.theta_steps);
    let scan = scan_theta(s.m, s.kind, &grid, &s.scan_options())?;

    let mut items = vec![("m", s.m.to_string()), ("kind", s.kind.to_string())];
    items.extend(scan_items(s));
    let mut text = header("scan-theta", &items);
    for case in [Case::Best, Case::Worst] {
        let _ = writeln!(
            text,
            "# {case} theta={} k={}",
            fmt9(scan.theta(case)),
            fmt9(scan.params(case).curve.k)
        );
    }
    text.push_str("theta,b,k,n,c,sigma,omega_max,p_max,epsilon,fit\n");
    for f in &scan.fits {
        let _ = write!(text, "{},", fmt9(f.theta));
        match &f.fit {
            Ok(p) => {
                let c = p.curve;
                for v in [c.b, c.k, c.n, c.c, p.sigma] {
                    let _ = write!(text, "{},", fmt9(v));
                }
            }
            Err(_) => text.push_str(",,,,,"),
        }
        let status = if f.fit.is_ok() { "ok" } else { "failed" };
        let r = f.sampled;
        let _ = writeln!(
            text,
            "{},{},{},{status}",
            fmt9(r.omega_max),
            fmt9(r.p_max),
            fmt9(r.epsilon)
        );
    }
    Ok(vec![Artifact {
        target: out,
        bytes: text.into_bytes(),
    }])
}

fn kinds_label(kinds: &[SequenceKind]) -> String {
    kinds
        .iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn analyses(s: &Settings, kinds: &[SequenceKind]) -> Result<Vec<SequenceAnalysis>, CliError> {
    let grid = theta_grid(s.theta_steps);
    let options = s.scan_options();
    kinds
        .iter()
        .map(|&kind| {
            analyze_sequence(kind, s.m_range.clone(), &grid, &options, &s.exclusions)
                .map_err(CliError::from)
        })
        .collect()
}

fn k_trend_cmd(a: &KTrendArgs, s: &Settings) -> Result<Vec<Artifact>, CliError> {
    s.check_trend_points(&s.kinds)?;
    let out = output_target(&a.output, s, "k_trend.toml")?;
    let ranking_target = if s.kinds.len() > 1 {
        Some(target(&a.ranking, s, "ranking.txt")?)
    } else {
        None
    };

    let results = analyses(s, &s.kinds)?;

    let mut items = vec![
        ("kinds", kinds_label(&s.kinds)),
        (
            "m_range",
            format!("{}..{}", s.m_range.start(), s.m_range.end()),
        ),
        ("exclusions", s.exclusions_label()),
    ];
    items.extend(scan_items(s));
    let head = header("k-trend", &items);
    let mut text = head.clone();
    for a in &results {
        for case in [Case::Best, Case::Worst] {
            let t = a.trend(case);
            let f = &t.fit;
            text.push_str("\n[[trend]]\n");
            let _ = writeln!(text, "sequence = \"{}\"", a.kind);
            let _ = writeln!(text, "case = \"{case}\"");
            for (key, value) in [("k1", f.k1), ("k2", f.k2), ("k3", f.k3), ("sigma", f.sigma)] {
                let _ = writeln!(text, "{key} = {}", toml_float(value));
            }
            let _ = writeln!(text, "degenerate = {}", f.degenerate);
            let _ = writeln!(
                text,
                "excluded_m = {}",
                toml_ints(t.excluded_m.iter().copied())
            );
            let ms = a.scans.iter().map(|sc| sc.m);
            let _ = writeln!(text, "m = {}", toml_ints(ms));
            for (key, series) in [
                ("theta", a.theta_series(case)),
                ("k", a.k_series(case)),
                ("b", a.b_series(case)),
                ("n", a.n_series(case)),
                ("omega_max", a.omega_max_series(case)),
            ] {
                let _ = writeln!(
                    text,
                    "{key} = {}",
                    toml_floats(series.into_iter().map(|(_, v)| v))
                );
            }
        }
    }
    let mut artifacts = vec![Artifact {
        target: out,
        bytes: text.into_bytes(),
    }];
    if let Some(target) = ranking_target {
        let ranking = compare_sequences(&results).expect("every analysis covers the same m range");
        artifacts.push(Artifact {
            target,
            bytes: format!("{head}{ranking}").into_bytes(),
        });
    }
    Ok(artifacts)
}

fn tables_cmd(a: &TablesArgs, s: &Settings) -> Result<Vec<Artifact>, CliError> {
    let id: TableId = a
        .which
        .parse()
        .map_err(|e: String| CliError::invalid("table", e))?;
    match id {
        TableId::HillFits => {}
        TableId::PhaseMatchingTrend => s.check_trend_points(&[SequenceKind::PM])?,
        _ => s.check_trend_points(id.kinds())?,
    }
    let out = output_target(&a.output, s, &format!("table{id}.csv"))?;

    let options = s.scan_options();
    let mut bytes = Vec::new();
    match id {
        TableId::HillFits => {
            let rows = tables::hill_rows(&options)?;
            tables::write_hill_csv(&rows, &mut bytes)
        }
        TableId::PhaseMatchingTrend => {
            let rows = tables::pm_trend_rows(s.m_range.clone(), &options, &s.exclusions)?;
            tables::write_trend_csv(&rows, &mut bytes)
        }
        _ => {
            let rows = tables::sequence_trend_rows(&analyses(s, id.kinds())?);
            tables::write_trend_csv(&rows, &mut bytes)
        }
    }
    .expect("writing to memory");

    let mut items = vec![
        ("table", id.to_string()),
        (
            "m_range",
            format!("{}..{}", s.m_range.start(), s.m_range.end()),
        ),
        ("exclusions", s.exclusions_label()),
    ];
    items.extend(scan_items(s));
    let mut full = header("tables", &items).into_bytes();
    full.extend(bytes);
    Ok(vec![Artifact {
        target: out,
        bytes: full,
    }])
}

fn verify_cmd() -> Outcome {
    let checks = qrws_core::verify::run_all();
    let mut text = header("verify", &[]);
    for c in &checks {
        let _ = writeln!(text, "{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(
        text,
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    Outcome {
        artifacts: vec![Artifact {
            target: Target::Stdout,
            bytes: text.into_bytes(),
        }],
        failure: (failed > 0)
            .then(|| CliError::Numerical(format!("{failed} of {} checks failed", checks.len()))),
    }
}

fn heatmap_cmd(a: &HeatmapArgs, s: &Settings) -> Result<Vec<Artifact>, CliError> {
    let stem = a
        .input
        .file_stem()
        .map(|x| x.to_string_lossy().into_owned())
        .unwrap_or_else(|| "heatmap".into());
    let out = output_target(&a.output, s, &format!("{stem}.ppm"))?;
    let file = std::fs::File::open(&a.input).map_err(|source| CliError::Io {
        path: a.input.clone(),
        source,
    })?;
    let grid = read_grid_csv(file).map_err(|message| CliError::Input {
        path: a.input.clone(),
        message,
    })?;
    let comment = header(
        "heatmap",
        &[
            ("input", file_name(&a.input)),
            ("colormap", colormap_label()),
        ],
    );
    let mut bytes = Vec::new();
    write_ppm(&grid, comment.trim_end(), &mut bytes).expect("writing to memory");
    Ok(vec![Artifact { target: out, bytes }])
}
