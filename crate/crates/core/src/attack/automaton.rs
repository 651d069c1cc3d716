use super::{AdmissibilityParams, AttackError, TOL_ADMISSIBLE};
use serde::{Deserialize, Serialize};

/// `(τ₁, τ₂, σ)`: switch budget, attack-time budget and current mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomatonState {
    pub tau1: f64,
    pub tau2: f64,
    pub sigma: String,
}

impl AutomatonState {
    /// Full buckets in the given mode.
    pub fn full(params: &AdmissibilityParams, sigma: &str) -> Self {
        Self {
            tau1: params.n0f(),
            tau2: params.t0,
            sigma: sigma.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Hold,
    SwitchTo(String),
}

/// Maximal-refill flow for `dt`, or a jump.
pub fn automaton_flow_jump(
    state: &AutomatonState,
    params: &AdmissibilityParams,
    dt: f64,
    command: &Command,
    attacking: bool,
) -> Result<AutomatonState, AttackError> {
    match command {
        Command::Hold => {
            let tau1 = (state.tau1 + params.kappa1 * dt).min(params.n0f());
            let tau2 = if attacking {
                let next = state.tau2 - (1.0 - params.kappa2) * dt;
                if next < -TOL_ADMISSIBLE {
                    return Err(AttackError::FlowExitsBox { tau2: next });
                }
                next.max(0.0)
            } else {
                (state.tau2 + params.kappa2 * dt).min(params.t0)
            };
            Ok(AutomatonState { tau1, tau2, sigma: state.sigma.clone() })
        }
        Command::SwitchTo(next) => {
            if state.tau1 < 1.0 - TOL_ADMISSIBLE {
                return Err(AttackError::JumpNotEnabled { tau1: state.tau1 });
            }
            if *next == state.sigma {
                return Err(AttackError::SameMode(next.clone()));
            }
            Ok(AutomatonState {
                tau1: (state.tau1 - 1.0).max(0.0),
                tau2: state.tau2,
                sigma: next.clone(),
            })
        }
    }
}
