//! Command-line driver: configuration, commands and output files.
//!
//! Every command computes all of its outputs in memory first and only then
//! writes them, so a failed run leaves no partial files behind.

pub mod angle;
pub mod commands;
pub mod config;
pub mod error;
pub mod heatmap;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RawConfig;
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "qrws",
    version,
    about = "Quantum random walk search on the hypercube"
)]
pub struct Cli {
    /// TOML configuration file; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: one per CPU).
    #[arg(long, global = true, env = "QRWS_WORKERS")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Success probability of a single search run.
    Run(RunArgs),
    /// Success probability over the (phi, zeta) plane as CSV.
    #[command(name = "sweep2d")]
    Sweep2d(Sweep2dArgs),
    /// Success probability along the line at angle theta as CSV.
    CrossSection(CrossSectionArgs),
    /// Hill fit of a cross-section.
    FitHill(FitHillArgs),
    /// Hill fits for every theta at one coin size.
    ScanTheta(ScanThetaArgs),
    /// k(m) trends of best and worst lines, with a ranking across sequences.
    KTrend(KTrendArgs),
    /// Replica of a reference table with deviation columns.
    Tables(TablesArgs),
    /// Self-check suite.
    Verify,
    /// Renders a sweep2d CSV as a binary PPM image.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct WalkArgs {
    /// Coin size (hypercube dimension).
    #[arg(long)]
    pub m: Option<usize>,
    /// Marked nodes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub marked: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitArgs {
    /// Pin the Hill center at omega = 0.
    #[arg(long)]
    pub fix_center: bool,
    /// Only accept fits with n > k.
    #[arg(long)]
    pub strict_nk: bool,
    /// Fraction of the peak defining the robustness interval.
    #[arg(long)]
    pub omega_threshold: Option<f64>,
    /// Samples entering the fit: central-lobe or full.
    #[arg(long)]
    pub window: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScanArgs {
    /// Theta grid step, e.g. pi/360.
    #[arg(long)]
    pub theta_step: Option<String>,
    /// Coin sizes, e.g. 4..9.
    #[arg(long)]
    pub m_range: Option<String>,
    /// Coin sizes left out of a trend, KIND:case:m1,m2 (repeatable; replaces
    /// the configured list).
    #[arg(long)]
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutArgs {
    /// Output file, `-` for stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Directory for outputs without an explicit path.
    #[arg(long)]
    pub directory: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub kind: Option<String>,
    /// Base phase phi (default pi).
    #[arg(long, conflicts_with = "omega")]
    pub phi: Option<String>,
    /// Base phase zeta (default pi).
    #[arg(long, conflicts_with = "omega")]
    pub zeta: Option<String>,
    /// Offset along the line at --theta instead of explicit phases.
    #[arg(long)]
    pub omega: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    /// Number of iterations instead of the default count.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Also write the final state as CSV.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Output file (default stdout).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Sweep2dArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub kind: Option<String>,
    /// Samples per axis over [0, 2pi].
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Output formats, comma separated: csv, ppm.
    #[arg(long, value_delimiter = ',')]
    pub formats: Option<Vec<String>>,
    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CrossSectionArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    /// Odd number of omega samples.
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitHillArgs {
    /// Cross-section CSV to fit; without it the cross-section is computed.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScanThetaArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub theta_step: Option<String>,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct KTrendArgs {
    /// Sequences, comma separated (default: all seven).
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub marked: Option<Vec<usize>>,
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub scan: ScanArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Ranking report path (default: ranking.txt next to the output).
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TablesArgs {
    /// Table number: 1, 2, 3 or 4.
    pub which: String,
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub scan: ScanArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    /// Grid CSV written by sweep2d.
    pub input: PathBuf,
    #[command(flatten)]
    pub output: OutArgs,
}

impl WalkArgs {
    fn apply(&self, raw: &mut RawConfig) {
        raw.walk.m = self.m;
        raw.walk.marked = self.marked.clone();
    }
}

impl FitArgs {
    fn apply(&self, raw: &mut RawConfig) {
        raw.fit.fix_center = self.fix_center.then_some(true);
        raw.fit.strict_nk = self.strict_nk.then_some(true);
        raw.fit.omega_threshold = self.omega_threshold;
        raw.fit.window = self.window.clone();
    }
}

impl ScanArgs {
    fn apply(&self, raw: &mut RawConfig) {
        raw.scan.theta_step = self.theta_step.clone().map(config::AngleValue::Text);
        raw.scan.m_range = self.m_range.clone();
        if !self.exclude.is_empty() {
            raw.scan.exclusions = Some(self.exclude.clone());
        }
    }
}

impl OutArgs {
    fn apply(&self, raw: &mut RawConfig) {
        raw.output.directory = self.directory.clone();
    }
}

fn theta_flag(theta: &Option<String>) -> Option<config::AngleValue> {
    theta.clone().map(config::AngleValue::Text)
}

impl Command {
    /// The flag layer of the configuration.
    pub fn overrides(&self) -> RawConfig {
        let mut raw = RawConfig::default();
        match self {
            Command::Run(a) => {
                a.walk.apply(&mut raw);
                raw.walk.iterations = a.iterations;
                raw.sweep.kind = a.kind.clone();
                raw.sweep.theta = theta_flag(&a.theta);
            }
            Command::Sweep2d(a) => {
                a.walk.apply(&mut raw);
                raw.sweep.kind = a.kind.clone();
                raw.sweep.resolution = a.resolution;
                raw.output.formats = a.formats.clone();
                a.output.apply(&mut raw);
            }
            Command::CrossSection(a) => {
                a.walk.apply(&mut raw);
                raw.sweep.kind = a.kind.clone();
                raw.sweep.theta = theta_flag(&a.theta);
                raw.sweep.omega_points = a.points;
                a.output.apply(&mut raw);
            }
            Command::FitHill(a) => {
                a.walk.apply(&mut raw);
                raw.sweep.kind = a.kind.clone();
                raw.sweep.theta = theta_flag(&a.theta);
                raw.sweep.omega_points = a.points;
                a.fit.apply(&mut raw);
                a.output.apply(&mut raw);
            }
            Command::ScanTheta(a) => {
                a.walk.apply(&mut raw);
                raw.sweep.kind = a.kind.clone();
                raw.sweep.omega_points = a.points;
                raw.scan.theta_step = theta_flag(&a.theta_step);
                a.fit.apply(&mut raw);
                a.output.apply(&mut raw);
            }
            Command::KTrend(a) => {
                raw.walk.marked = a.marked.clone();
                raw.scan.kinds = a.kinds.clone();
                raw.sweep.omega_points = a.points;
                a.scan.apply(&mut raw);
                a.fit.apply(&mut raw);
                a.output.apply(&mut raw);
            }
            Command::Tables(a) => {
                raw.sweep.omega_points = a.points;
                a.scan.apply(&mut raw);
                a.fit.apply(&mut raw);
                a.output.apply(&mut raw);
            }
            Command::Verify => {}
            Command::Heatmap(a) => a.output.apply(&mut raw),
        }
        raw
    }
}

/// Where an output goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Stdout,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub target: Target,
    pub bytes: Vec<u8>,
}

/// Writes finished outputs in order.
pub fn emit(artifacts: &[Artifact]) -> Result<(), CliError> {
    for a in artifacts {
        match &a.target {
            Target::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(&a.bytes)
                    .and_then(|_| out.flush())
                    .map_err(|source| CliError::Io {
                        path: "<stdout>".into(),
                        source,
                    })?;
            }
            Target::File(path) => {
                std::fs::write(path, &a.bytes).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
            }
        }
    }
    Ok(())
}

/// Runs a parsed command line and writes its outputs.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let base = match &cli.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    let outcome = commands::execute(&cli.command, base, cli.workers)?;
    emit(&outcome.artifacts)?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
