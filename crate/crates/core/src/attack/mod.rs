//! Attack catalogs, admissibility budgets, schedules and the token-bucket
//! automaton that generates admissible switching signals.

mod automaton;
mod generate;
mod schedule;

pub use automaton::{automaton_flow_jump, AutomatonState, Command};
pub use generate::{generate_admissible, GeneratorOptions, ScheduleStyle};
pub use schedule::{check_admissible, AdmissibilityVerdict, AttackSchedule, ScheduleEvent, Witness, WitnessKind};

use crate::matrixlab::{self, LinalgError, Mat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Id of the attack-free mode in every catalog.
pub const NOMINAL: &str = "s";

pub const TOL_ADMISSIBLE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("invalid interval ({s}, {t}) for horizon {horizon}")]
    BadInterval { s: f64, t: f64, horizon: f64 },
    #[error("invalid schedule: {0}")]
    BadSchedule(String),
    #[error("invalid admissibility parameters: {0}")]
    BadParams(String),
    #[error("no switch budget can ever accrue (kappa1 = 0 and N0 < 1)")]
    InfeasibleParams,
    #[error("jump not enabled: tau1 = {tau1} < 1")]
    JumpNotEnabled { tau1: f64 },
    #[error("switch must change the mode (already in {0})")]
    SameMode(String),
    #[error("flow leaves the automaton box: tau2 would reach {tau2}")]
    FlowExitsBox { tau2: f64 },
    #[error("unknown mode id {0}")]
    UnknownMode(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `(κ₁, κ₂, N₀, T₀)` of the admissible-attack class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub n0: u32,
    pub t0: f64,
}

impl AdmissibilityParams {
    pub fn validate(&self) -> Result<(), AttackError> {
        let ok = |cond: bool, msg: &str| if cond { Ok(()) } else { Err(AttackError::BadParams(msg.into())) };
        ok(self.kappa1.is_finite() && self.kappa1 >= 0.0, "kappa1 must be >= 0")?;
        ok(self.kappa2.is_finite() && (0.0..1.0).contains(&self.kappa2), "kappa2 must lie in [0, 1)")?;
        ok(self.t0.is_finite() && self.t0 >= 0.0, "t0 must be >= 0")?;
        Ok(())
    }

    pub fn n0f(&self) -> f64 {
        f64::from(self.n0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerAttackMode {
    pub id: String,
    pub m: Mat,
}

/// Controller-loop modes `u̇ = −ε M_σ(...)`; index 0 is the nominal identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerCatalog {
    pub modes: Vec<ControllerAttackMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerModeCheck {
    pub id: String,
    pub min_real_part: f64,
    pub has_negative_eigenvalue: bool,
    pub norm: f64,
}

impl ControllerCatalog {
    pub fn new(input_dim: usize, attacks: Vec<ControllerAttackMode>) -> Result<Self, AttackError> {
        let mut modes = vec![ControllerAttackMode {
            id: NOMINAL.to_string(),
            m: Mat::identity(input_dim, input_dim),
        }];
        for a in attacks {
            if a.m.shape() != (input_dim, input_dim) {
                return Err(AttackError::BadParams(format!("mode {} must be {input_dim}x{input_dim}", a.id)));
            }
            if modes.iter().any(|m| m.id == a.id) {
                return Err(AttackError::BadParams(format!("duplicate mode id {}", a.id)));
            }
            modes.push(a);
        }
        Ok(Self { modes })
    }

    pub fn attack_ids(&self) -> Vec<String> {
        self.modes[1..].iter().map(|m| m.id.clone()).collect()
    }

    pub fn index_of(&self, id: &str) -> Result<usize, AttackError> {
        self.modes
            .iter()
            .position(|m| m.id == id)
            .ok_or_else(|| AttackError::UnknownMode(id.to_string()))
    }

    /// `M̄ = max ‖M_σ‖` over attack modes; 0 when there are none.
    pub fn m_bar(&self) -> f64 {
        self.modes[1..]
            .iter()
            .map(|m| matrixlab::spectral_norm(&m.m))
            .fold(0.0, f64::max)
    }

    /// Each attack mode must have an eigenvalue with negative real part.
    pub fn check_modes(&self) -> Result<Vec<ControllerModeCheck>, AttackError> {
        self.modes[1..]
            .iter()
            .map(|m| {
                let min_real_part = matrixlab::eigenvalues(&m.m)?
                    .iter()
                    .map(|z| z.re)
                    .fold(f64::INFINITY, f64::min);
                Ok(ControllerModeCheck {
                    id: m.id.clone(),
                    min_real_part,
                    has_negative_eigenvalue: min_real_part < 0.0,
                    norm: matrixlab::spectral_norm(&m.m),
                })
            })
            .collect()
    }
}

pub(crate) fn is_attack(attack_ids: &[String], id: &str) -> bool {
    attack_ids.iter().any(|a| a == id)
}
