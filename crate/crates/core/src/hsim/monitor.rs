use super::{Exosystem, HybridTrajectory};
use crate::attack::NOMINAL;
use crate::certify::{CertificateReport, LoopKind};
use crate::matrixlab::{self, LinalgError, Mat, Vector};
use crate::objective::{Objective, ObjectiveError};
use crate::plant::ModeMatrices;
use serde::Serialize;
use thiserror::Error;

/// Absolute slack for `U(ϑ⁺) ≤ U(ϑ)`.
pub const TOL_JUMP: f64 = 1e-9;
/// Relative slack on finite-difference flow slopes.
pub const TOL_FLOW_REL: f64 = 1e-6;
/// Absolute floor on the flow slack; below it `U` is round-off.
pub const TOL_FLOW_ABS: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("missing or mismatched certificate: {0}")]
    MissingCertificate(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Per-sample Lyapunov channels. For the controller-attacked loop the mode
/// functions are `V_s`, `V_a` and `other = W`; for the plant-attacked loop
/// they are `W_s`, `W_a` and `other = V`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorSample {
    pub t: f64,
    pub j: usize,
    pub sigma: String,
    pub mode_nominal: f64,
    pub mode_attack: f64,
    /// `e^τ`-weighted active mode function (`V̄` or `W̄`).
    pub weighted: f64,
    pub other: f64,
    pub u_lyap: f64,
    pub tau: f64,
    pub xi_norm: f64,
    pub tracking_error: f64,
    pub residual_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpVerdict {
    pub ok: bool,
    pub jumps: usize,
    pub max_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowVerdict {
    /// At least 99% of eligible intervals have non-positive slope.
    pub ok: bool,
    /// Every eligible interval passes.
    pub strict_ok: bool,
    pub eligible: usize,
    pub passing: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IssVerdict {
    /// `false` when the certificate does not hold, so no bound exists.
    pub applicable: bool,
    pub ok: bool,
    /// `max_t (‖ξ(t)‖ − bound(t))`; non-positive when the bound holds.
    pub max_excess: f64,
    pub decay_rate: f64,
    pub gain_coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorTrace {
    pub loop_kind: LoopKind,
    pub certified: bool,
    pub samples: Vec<MonitorSample>,
    pub jump: JumpVerdict,
    pub flow: FlowVerdict,
    pub iss: IssVerdict,
}

impl MonitorTrace {
    fn tail(&self, frac: f64) -> impl Iterator<Item = &MonitorSample> {
        let t_end = self.samples.last().map_or(0.0, |s| s.t);
        let t_from = t_end * (1.0 - frac);
        self.samples.iter().filter(move |s| s.t >= t_from)
    }

    /// `sup` of the tracking error over the last `frac` of the horizon.
    pub fn tail_sup(&self, frac: f64) -> f64 {
        self.tail(frac).map(|s| s.tracking_error).fold(0.0, f64::max)
    }

    /// Least-squares slope of `ln‖z − z*‖` against `t` over the last `frac`
    /// of the horizon. `None` with fewer than two positive samples.
    pub fn log_error_slope(&self, frac: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .tail(frac)
            .filter(|s| s.tracking_error > 0.0)
            .map(|s| (s.t, s.tracking_error.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let (mt, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        let (sxy, sxx) = pts
            .iter()
            .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mt) * (p.1 - my), a.1 + (p.0 - mt).powi(2)));
        (sxx > 0.0).then(|| sxy / sxx)
    }

    /// Tracking error at the sample closest to (not after) `t`.
    pub fn error_at(&self, t: f64) -> Option<f64> {
        self.samples.iter().rev().find(|s| s.t <= t).map(|s| s.tracking_error)
    }
}

/// Maps from `(u, w)` to the plant equilibrium `x̄ = −A⁻¹(Bu + Ew)`.
struct SteadyState {
    a_inv_b: Mat,
    a_inv_e: Mat,
}

impl SteadyState {
    fn new(nominal: &ModeMatrices) -> Result<Self, LinalgError> {
        Ok(Self {
            a_inv_b: matrixlab::solve(&nominal.a, &nominal.b)?,
            a_inv_e: matrixlab::solve(&nominal.a, &nominal.e)?,
        })
    }

    fn x_bar(&self, u: &Vector, w: &Vector) -> Vector {
        -(&self.a_inv_b * u + &self.a_inv_e * w)
    }
}

/// `u*_w` along the samples, warm-starting the descent oracle from the previous one.
fn optimal_inputs(traj: &HybridTrajectory, objective: &Objective) -> Result<Vec<Vector>, ObjectiveError> {
    let mut out: Vec<Vector> = Vec::with_capacity(traj.points.len());
    for p in &traj.points {
        let warm = out.last();
        out.push(objective.optimal_input_from(&p.w, warm)?);
    }
    Ok(out)
}

/// `‖(x − x̄(u*_w, w), u − u*_w)‖` per sample.
pub fn tracking_error(traj: &HybridTrajectory, objective: &Objective, nominal: &ModeMatrices) -> Result<Vec<f64>, MonitorError> {
    let ss = SteadyState::new(nominal)?;
    let stars = optimal_inputs(traj, objective)?;
    Ok(traj.points.iter().zip(&stars).map(|(p, us)| err_of(&ss, p, us)).collect())
}

fn err_of(ss: &SteadyState, p: &super::HybridPoint, u_star: &Vector) -> f64 {
    let dx = (&p.x - ss.x_bar(u_star, &p.w)).norm();
    let du = (&p.u - u_star).norm();
    dx.hypot(du)
}

/// Evaluates every Lyapunov channel along `traj` and the three verdicts:
/// jump non-increase, flow decrease outside the residual ball, and the ISS
/// bound shape.
pub fn monitor(
    traj: &HybridTrajectory,
    cert: Option<&CertificateReport>,
    objective: &Objective,
    nominal: &ModeMatrices,
    exo: &Exosystem,
) -> Result<MonitorTrace, MonitorError> {
    let cert = cert.ok_or_else(|| MonitorError::MissingCertificate("no certificate supplied".into()))?;
    if cert.loop_kind != traj.loop_kind {
        return Err(MonitorError::MissingCertificate(format!(
            "certificate is for {:?}, trajectory is {:?}",
            cert.loop_kind, traj.loop_kind
        )));
    }
    if (cert.eps - traj.eps).abs() > 1e-12 * cert.eps.abs().max(traj.eps.abs()) {
        return Err(MonitorError::MissingCertificate(format!(
            "certificate evaluated at eps = {}, trajectory ran at {}",
            cert.eps, traj.eps
        )));
    }
    let p_mat = matrixlab::from_rows(&cert.constants.p)?;
    let beta_tilde = cert.constants.beta_tilde.unwrap_or(1.0);
    let ss = SteadyState::new(nominal)?;
    let stars = optimal_inputs(traj, objective)?;
    let certified = cert.kappa_feasible && cert.xi_pd;
    let residual_coeff = cert.residual_coeff().unwrap_or(0.0);
    let theta = cert.theta;
    let ln_omega = cert.omega.ln();
    let rho_sum = cert.rho_s + cert.rho_a;

    let samples: Vec<MonitorSample> = traj
        .points
        .iter()
        .zip(&stars)
        .map(|(p, u_star)| {
            let xe = &p.x - ss.x_bar(&p.u, &p.w);
            let du = &p.u - u_star;
            let tau = (ln_omega * p.tau1 + p.tau2 * rho_sum).clamp(0.0, cert.tau0.max(0.0));
            let attacked = p.sigma != NOMINAL;
            let (mode_nominal, mode_attack, other) = match traj.loop_kind {
                LoopKind::Controller => (
                    objective.suboptimality(&p.u, &p.w, u_star),
                    0.5 * du.norm_squared(),
                    xe.dot(&(&p_mat * &xe)),
                ),
                LoopKind::Plant => (
                    xe.dot(&(&p_mat * &xe)),
                    beta_tilde * xe.norm_squared(),
                    objective.suboptimality(&p.u, &p.w, u_star),
                ),
            };
            let weighted = if attacked { mode_attack } else { mode_nominal } * tau.exp();
            let u_lyap = match traj.loop_kind {
                LoopKind::Controller => (1.0 - theta) * weighted + theta * other,
                LoopKind::Plant => theta * weighted + (1.0 - theta) * other,
            };
            MonitorSample {
                t: p.t,
                j: p.j,
                sigma: p.sigma.clone(),
                mode_nominal,
                mode_attack,
                weighted,
                other,
                u_lyap,
                tau,
                xi_norm: xe.norm().hypot(du.norm()),
                tracking_error: err_of(&ss, p, u_star),
                residual_radius: residual_coeff * exo.sup_rate_until(p.t),
            }
        })
        .collect();

    let mut max_increase = f64::NEG_INFINITY;
    for &k in &traj.jumps {
        max_increase = max_increase.max(samples[k].u_lyap - samples[k - 1].u_lyap);
    }
    let jump = JumpVerdict {
        ok: traj.jumps.is_empty() || max_increase <= TOL_JUMP,
        jumps: traj.jumps.len(),
        max_increase: if traj.jumps.is_empty() { 0.0 } else { max_increase },
    };

    let (mut eligible, mut passing) = (0usize, 0usize);
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.j != b.j || b.t <= a.t {
            continue;
        }
        if a.xi_norm < a.residual_radius || b.xi_norm < b.residual_radius {
            continue;
        }
        eligible += 1;
        let slope = (b.u_lyap - a.u_lyap) / (b.t - a.t);
        if slope <= TOL_FLOW_REL * a.u_lyap.abs().max(b.u_lyap.abs()) + TOL_FLOW_ABS {
            passing += 1;
        }
    }
    let fraction = if eligible == 0 { 1.0 } else { passing as f64 / eligible as f64 };
    let flow = FlowVerdict { ok: fraction >= 0.99, strict_ok: passing == eligible, eligible, passing, fraction };

    let iss = match (cert.decay_rate(), cert.gain_coeff) {
        (Some(c), Some(gain)) if certified => {
            let xi0 = samples.first().map_or(0.0, |s| s.xi_norm);
            let overshoot = (cert.c_upper / cert.c_lower).sqrt();
            let mut max_excess = f64::NEG_INFINITY;
            for s in &samples {
                let bound = overshoot * xi0 * (-0.5 * c * s.t).exp() + gain * exo.sup_rate_until(s.t);
                max_excess = max_excess.max(s.xi_norm - bound * (1.0 + 1e-9) - 1e-12);
            }
            IssVerdict { applicable: true, ok: max_excess <= 0.0, max_excess, decay_rate: c, gain_coeff: gain }
        }
        _ => IssVerdict { applicable: false, ok: false, max_excess: f64::NAN, decay_rate: f64::NAN, gain_coeff: f64::NAN },
    };

    Ok(MonitorTrace { loop_kind: traj.loop_kind, certified, samples, jump, flow, iss })
}
