//! Simulation and robustness analysis of the quantum random walk search on
//! the hypercube with generalized Householder traversing coins.
//!
//! * [`walk`]: state-vector simulation and a dense-matrix reference.
//! * [`schedule`]: polar `(ω, Θ)` parametrization and per-iteration phase
//!   sequences.
//! * [`sweep`]: probability landscapes and polar cross-sections.
//! * [`hill`]: modified Hill function fits and robustness intervals.
//! * [`analysis`]: Θ scans, `k(m)` trends and sequence rankings.
//! * [`tables`]: reference values and table replicas.
//! * [`verify`]: self-check suite.

pub mod analysis;
pub mod format;
pub mod hill;
mod lm;
pub mod parallel;
pub mod schedule;
pub mod sweep;
pub mod tables;
pub mod verify;
pub mod walk;

pub use analysis::{
    analyze_sequence, compare_sequences, fit_k_trend, fit_line, fixed_angle_trend, scan_theta,
    theta_grid, Case, Exclusions, KTrend, Ranking, ScanOptions, SequenceAnalysis, ThetaScanResult,
    TrendFit,
};
pub use hill::{
    fit_hill, hill_eval, FitOptions, FitWindow, HillCurve, HillParams, RobustnessReport,
};
pub use parallel::{parallel_map, Workers};
pub use schedule::{
    iteration_count, omega_bound, polar_to_phases, schedule_phases, PhaseSchedule, PolarPoint,
    SequenceKind,
};
pub use sweep::{sweep_omega, sweep_phase_plane, CrossSection, Grid2D};
pub use walk::{run_walk, CoinPhases, WalkConfig, WalkState};

/// Version stamp embedded in emitted files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
