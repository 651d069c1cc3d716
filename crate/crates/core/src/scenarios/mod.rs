//! Scenario configs, the experiment builders, end-to-end reproductions and
//! output files.

pub mod builders;
mod config;
pub mod grid;
pub mod repro;

pub use config::{
    resolve, ControllerAttackSpec, EpsPolicy, ObjectiveSpec, OutputSpec, PlantAttackSpec, PlantSpec, ResolvedScenario,
    ScenarioConfig, ScheduleSpec, ValidationReport,
};

use crate::attack::AttackError;
use crate::certify::{CertificateReport, CertifyError};
use crate::hsim::{self, HybridTrajectory, MonitorError, MonitorTrace, SimError};
use crate::matrixlab::LinalgError;
use crate::objective::ObjectiveError;
use crate::plant::PlantError;
use serde::Serialize;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use thiserror::Error;

/// Environment variable overriding a generated schedule's seed.
pub const SEED_ENV: &str = "HYBRIS_SEED";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config error at `{path}` (line {line}): {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("susceptance row sums not zero (worst {worst:.3e})")]
    ZeroRowSumViolated { worst: f64 },
    #[error("susceptance matrix has a repeated zero eigenvalue (disconnected grid)")]
    AverageModeNotIsolated,
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

impl ScenarioError {
    /// 1 for a failed run or verdict, 2 for anything wrong with the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Sim(SimError::NonFiniteState { .. }) | ScenarioError::Monitor(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        ScenarioError::Io(e.to_string())
    }
}

/// Seed from [`SEED_ENV`], if set and parseable.
pub fn seed_from_env() -> Option<u64> {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok())
}

pub struct RunOutcome {
    pub trajectory: HybridTrajectory,
    pub monitor: MonitorTrace,
}

pub fn run(resolved: &ResolvedScenario) -> Result<RunOutcome, ScenarioError> {
    let trajectory = hsim::simulate(&resolved.setup)?;
    let monitor = hsim::monitor(
        &trajectory,
        Some(&resolved.certificate),
        &resolved.setup.objective,
        resolved.setup.model.nominal(),
        &resolved.setup.exo,
    )?;
    Ok(RunOutcome { trajectory, monitor })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub seed: Option<u64>,
    pub eps: f64,
    pub eps_star: Option<f64>,
    pub certified: bool,
    pub admissible: bool,
    pub jumps: usize,
    pub jump: hsim::JumpVerdict,
    pub flow: hsim::FlowVerdict,
    pub iss: hsim::IssVerdict,
    pub initial_error: f64,
    pub final_error: f64,
    pub tail_sup_error: f64,
    /// Slope of `ln‖z − z*‖` over the second half of the horizon.
    pub log_error_slope: Option<f64>,
    pub warnings: Vec<String>,
}

impl RunSummary {
    pub fn new(resolved: &ResolvedScenario, out: &RunOutcome) -> Self {
        let m = &out.monitor;
        let mut warnings = resolved.warnings.clone();
        warnings.extend(out.trajectory.warnings.iter().cloned());
        Self {
            name: resolved.name.clone(),
            seed: resolved.seed,
            eps: resolved.certificate.eps,
            eps_star: resolved.certificate.eps_star,
            certified: m.certified,
            admissible: out.trajectory.admissible,
            jumps: out.trajectory.jumps.len(),
            jump: m.jump.clone(),
            flow: m.flow.clone(),
            iss: m.iss.clone(),
            initial_error: m.samples.first().map_or(f64::NAN, |s| s.tracking_error),
            final_error: m.samples.last().map_or(f64::NAN, |s| s.tracking_error),
            tail_sup_error: m.tail_sup(0.5),
            log_error_slope: m.log_error_slope(0.5),
            warnings,
        }
    }

    /// Every monitor verdict holds (only meaningful on certified runs).
    pub fn verdicts_hold(&self) -> bool {
        self.jump.ok && self.flow.ok && (!self.iss.applicable || self.iss.ok)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ScenarioError> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, value).map_err(|e| ScenarioError::Io(e.to_string()))
}

pub fn write_certificate(dir: &Path, cert: &CertificateReport) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("certificate.json"), cert)
}

/// Writes `trajectory.csv`, `monitor.csv`, `certificate.json` and `summary.json`.
pub fn write_outputs(dir: &Path, resolved: &ResolvedScenario, out: &RunOutcome) -> Result<RunSummary, ScenarioError> {
    fs::create_dir_all(dir)?;
    let mut f = BufWriter::new(File::create(dir.join("trajectory.csv"))?);
    hsim::write_trajectory_csv(&mut f, &out.trajectory, &out.monitor)?;
    let mut f = BufWriter::new(File::create(dir.join("monitor.csv"))?);
    hsim::write_monitor_csv(&mut f, &out.monitor)?;
    write_certificate(dir, &resolved.certificate)?;
    let summary = RunSummary::new(resolved, out);
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}
