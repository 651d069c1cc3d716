//! Closed-form certificates: time-ratio feasibility, `τ₀`, the gain bound
//! `ε*`, the `Ξ` matrix and the linear ISS gain, for both attacked loops.

use crate::attack::{AdmissibilityParams, ControllerCatalog};
use crate::matrixlab::{self, LinalgError, Mat};
use crate::objective::{CostConstants, Objective, ObjectiveError};
use crate::plant::{self, ModeMatrices, PlantError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("time-ratio condition fails (rho = {rho})")]
    InfeasibleKappa { rho: f64 },
    #[error("Xi is not positive definite at eps = {eps} (lambda_min {lambda_min})")]
    XiNotPd { eps: f64, lambda_min: f64 },
    #[error("invalid certificate input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    /// The attacker corrupts the gradient controller.
    Controller,
    /// The attacker corrupts the static inner loop of the plant.
    Plant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaVerdict {
    pub feasible: bool,
    pub rho: f64,
    pub omega: f64,
    pub rho_s: f64,
    pub rho_a: f64,
}

fn rho_from(rho_s: f64, rho_a: f64, omega: f64, kappa1: f64, kappa2: f64) -> f64 {
    rho_s - kappa2 * (rho_s + rho_a) - omega.ln() * kappa1
}

/// `ω = max{1/μ, ℓ²/μ}`, `ρ_s = 2μ`, `ρ_a = 2M̄ℓ`.
pub fn kappa_condition_dynamic(kappa1: f64, kappa2: f64, mu: f64, ell: f64, m_bar: f64) -> KappaVerdict {
    let omega = (1.0 / mu).max(ell * ell / mu);
    let rho_s = 2.0 * mu;
    let rho_a = 2.0 * m_bar * ell;
    let rho = rho_from(rho_s, rho_a, omega, kappa1, kappa2);
    KappaVerdict { feasible: rho > 0.0, rho, omega, rho_s, rho_a }
}

/// `τ₀ = ln(ω)N₀ + 2T₀(μ + M̄ℓ)`.
pub fn tau0_dynamic(n0: f64, t0: f64, mu: f64, ell: f64, m_bar: f64, omega: f64) -> f64 {
    omega.ln() * n0 + 2.0 * t0 * (mu + m_bar * ell)
}

/// `ω = max{λ̄(P)/β̃, β̃/λ̲(P)}`, `ρ_s = λ̲(R)/λ̄(P)`, `ρ_a = λ̄(R̂_a)`.
pub fn kappa_condition_static(
    kappa1: f64,
    kappa2: f64,
    lambda_min_p: f64,
    lambda_max_p: f64,
    lambda_min_r: f64,
    lambda_bar_rhat: f64,
    beta_tilde: f64,
) -> KappaVerdict {
    let omega = (lambda_max_p / beta_tilde).max(beta_tilde / lambda_min_p);
    let rho_s = lambda_min_r / lambda_max_p;
    let rho_a = lambda_bar_rhat;
    let rho = rho_from(rho_s, rho_a, omega, kappa1, kappa2);
    KappaVerdict { feasible: rho > 0.0, rho, omega, rho_s, rho_a }
}

/// `τ₀ = ln(ω)N₀ + T₀(ρ_s + ρ_a)`.
pub fn tau0_static(n0: f64, t0: f64, omega: f64, rho_s: f64, rho_a: f64) -> f64 {
    omega.ln() * n0 + t0 * (rho_s + rho_a)
}

/// The five scalars whose positivity structure decides `Ξ ≻ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub chi: f64,
    pub gamma: f64,
}

impl XiParams {
    /// `θ* = δ/(δ+χ)`.
    pub fn theta_star(&self) -> f64 {
        self.delta / (self.delta + self.chi)
    }

    /// `ε̂(θ) = αγ / (βγ + ((1−θ)δ + θχ)² / (4θ(1−θ)))`.
    pub fn eps_hat(&self, theta: f64) -> f64 {
        let off = (1.0 - theta) * self.delta + theta * self.chi;
        self.alpha * self.gamma / (self.beta * self.gamma + off * off / (4.0 * theta * (1.0 - theta)))
    }

    /// `αγ / (βγ + δχ)`; `+∞` when the denominator vanishes.
    pub fn eps_star(&self) -> f64 {
        let den = self.beta * self.gamma + self.delta * self.chi;
        if den > 0.0 {
            self.alpha * self.gamma / den
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiMatrix {
    pub xi: [[f64; 2]; 2],
    pub lambda_min: f64,
    pub pd: bool,
}

pub fn xi_matrix(l8: &XiParams, theta: f64, eps: f64) -> XiMatrix {
    let a11 = theta * (l8.alpha / eps - l8.beta);
    let a12 = -0.5 * ((1.0 - theta) * l8.delta + theta * l8.chi);
    let a22 = (1.0 - theta) * l8.gamma;
    let det = a11 * a22 - a12 * a12;
    let half = 0.5 * (a11 + a22);
    let rad = (0.25 * (a11 - a22).powi(2) + a12 * a12).sqrt();
    XiMatrix {
        xi: [[a11, a12], [a12, a22]],
        lambda_min: half - rad,
        pd: a11 > 0.0 && det > 0.0,
    }
}

/// Norms and spectral data entering the controller-loop certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicInputs {
    pub mu: f64,
    pub ell: f64,
    pub ell_y: f64,
    pub m_bar: f64,
    pub lambda_min_r: f64,
    pub lambda_min_p: f64,
    pub lambda_max_p: f64,
    pub norm_c: f64,
    pub norm_g: f64,
    pub norm_h: f64,
    pub norm_pa_inv_b: f64,
    pub norm_pa_inv_e: f64,
    pub u_wbar: f64,
}

impl DynamicInputs {
    pub fn xi_params(&self, rho: f64, tau0: f64) -> XiParams {
        let mb1 = self.m_bar.max(1.0);
        XiParams {
            alpha: self.lambda_min_r,
            beta: 2.0 * self.ell_y * mb1 * self.norm_pa_inv_b * self.norm_c * self.norm_g,
            delta: self.ell_y * tau0.exp() * self.ell.max(self.m_bar) * self.norm_g * self.norm_c,
            chi: 2.0 * self.ell * mb1 * self.norm_pa_inv_b,
            gamma: 0.5 * rho * self.mu.min(1.0),
        }
    }

    /// Quadratic sandwich constants of `U` in `|ϑ|²`.
    pub fn bounds(&self, theta: f64, tau0: f64) -> (f64, f64) {
        let upper = (theta * self.lambda_max_p)
            .max((1.0 - theta) * tau0.exp() * (self.ell * self.ell / (2.0 * self.mu)).max(0.5));
        let lower = (theta * self.lambda_min_p).min((1.0 - theta) * (self.mu / 2.0).min(0.5));
        (lower, upper)
    }

    pub fn r_vec(&self, theta: f64, tau0: f64) -> [f64; 2] {
        [
            2.0 * theta * self.norm_pa_inv_e,
            (1.0 - theta) * tau0.exp() * (self.ell_y * self.norm_h * self.norm_g).max(self.u_wbar),
        ]
    }
}

/// `ε* = ρλ̲(R)min{μ,1} / (2ℓ_y max{M̄,1}‖C‖‖G‖‖PA⁻¹B‖(ρ min{μ,1} + 2ℓ max{ℓ,M̄}e^{τ₀}))`.
pub fn eps_star_dynamic(inp: &DynamicInputs, rho: f64, tau0: f64) -> Result<f64, CertifyError> {
    if rho <= 0.0 {
        return Err(CertifyError::InfeasibleKappa { rho });
    }
    let mn = inp.mu.min(1.0);
    let den = 2.0
        * inp.ell_y
        * inp.m_bar.max(1.0)
        * inp.norm_c
        * inp.norm_g
        * inp.norm_pa_inv_b
        * (rho * mn + 2.0 * inp.ell * inp.ell.max(inp.m_bar) * tau0.exp());
    Ok(if den > 0.0 {
        rho * inp.lambda_min_r * mn / den
    } else {
        log::warn!("eps_star_dynamic: degenerate denominator, gain unbounded");
        f64::INFINITY
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IssGain {
    pub gain_coeff: f64,
    pub r_vec: [f64; 2],
    pub theta: f64,
    pub c_lower: f64,
    pub c_upper: f64,
}

fn gain_from(c_lower: f64, c_upper: f64, r: [f64; 2], xi_min: f64, k: f64, eps: f64) -> Result<f64, CertifyError> {
    if !(xi_min > 0.0) {
        return Err(CertifyError::XiNotPd { eps, lambda_min: xi_min });
    }
    if !(k > 0.0 && k < 1.0) || !(eps > 0.0) {
        return Err(CertifyError::BadInput("need k in (0,1) and eps > 0".into()));
    }
    let rn = (r[0] * r[0] + r[1] * r[1]).sqrt();
    Ok((c_upper / c_lower).sqrt() * rn / (xi_min * k) / eps)
}

pub fn iss_gain_dynamic(inp: &DynamicInputs, tau0: f64, theta: f64, xi_min: f64, k: f64, eps: f64) -> Result<IssGain, CertifyError> {
    let (c_lower, c_upper) = inp.bounds(theta, tau0);
    let r_vec = inp.r_vec(theta, tau0);
    Ok(IssGain {
        gain_coeff: gain_from(c_lower, c_upper, r_vec, xi_min, k, eps)?,
        r_vec,
        theta,
        c_lower,
        c_upper,
    })
}

/// `cond(f)e^{τ₀/2}‖r‖/(λ̲(Ξ)kε)`, the ill-conditioned-cost limit of the gain.
pub fn simplified_gain_dynamic(inp: &DynamicInputs, tau0: f64, r: [f64; 2], xi_min: f64, k: f64, eps: f64) -> f64 {
    (inp.ell / inp.mu) * (0.5 * tau0).exp() * r[0].hypot(r[1]) / (xi_min * k * eps)
}

/// Norms and spectral data entering the plant-loop certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticInputs {
    pub mu: f64,
    pub ell: f64,
    pub ell_y: f64,
    pub lambda_min_r: f64,
    pub lambda_min_p: f64,
    pub lambda_max_p: f64,
    pub beta_tilde: f64,
    pub lambda_bar_rhat: f64,
    pub norm_c: f64,
    pub norm_g: f64,
    pub norm_h: f64,
    pub norm_a_inv_b: f64,
    pub norm_a_inv_e: f64,
}

impl StaticInputs {
    fn p_hi(&self) -> f64 {
        self.lambda_max_p.max(self.beta_tilde)
    }

    fn p_lo(&self) -> f64 {
        self.lambda_min_p.min(self.beta_tilde)
    }

    pub fn xi_params(&self, rho: f64, tau0: f64) -> XiParams {
        let e = tau0.exp();
        XiParams {
            alpha: rho * self.p_lo(),
            beta: 2.0 * self.ell_y * e * self.p_hi() * self.norm_a_inv_b * self.norm_c * self.norm_g,
            delta: self.ell * self.ell_y * self.norm_c * self.norm_g,
            chi: 2.0 * self.ell * e * self.p_hi() * self.norm_a_inv_b,
            gamma: self.mu * self.mu,
        }
    }

    pub fn bounds(&self, theta: f64, tau0: f64) -> (f64, f64) {
        let upper = (theta * tau0.exp() * self.p_hi()).max((1.0 - theta) * self.ell * self.ell / (2.0 * self.mu));
        let lower = (theta * self.p_lo()).min((1.0 - theta) * self.mu / 2.0);
        (lower, upper)
    }

    pub fn r_vec(&self, theta: f64, tau0: f64) -> [f64; 2] {
        [
            2.0 * tau0.exp() * theta * self.p_hi() * self.norm_a_inv_e,
            self.ell_y * (1.0 - theta) * self.norm_h * self.norm_g,
        ]
    }
}

/// `ε* = ρ min{λ̲(P),β̃}μ² / (2ℓ_y e^{τ₀}‖C‖‖G‖‖A⁻¹B‖max{λ̄(P),β̃}(μ²+ℓ²))`.
pub fn eps_star_static(inp: &StaticInputs, rho: f64, tau0: f64) -> Result<f64, CertifyError> {
    if rho <= 0.0 {
        return Err(CertifyError::InfeasibleKappa { rho });
    }
    let den = 2.0
        * inp.ell_y
        * tau0.exp()
        * inp.norm_c
        * inp.norm_g
        * inp.norm_a_inv_b
        * inp.p_hi()
        * (inp.mu * inp.mu + inp.ell * inp.ell);
    Ok(if den > 0.0 {
        rho * inp.p_lo() * inp.mu * inp.mu / den
    } else {
        log::warn!("eps_star_static: degenerate denominator, gain unbounded");
        f64::INFINITY
    })
}

pub fn iss_gain_static(inp: &StaticInputs, tau0: f64, theta: f64, xi_min: f64, k: f64, eps: f64) -> Result<IssGain, CertifyError> {
    let (c_lower, c_upper) = inp.bounds(theta, tau0);
    let r_vec = inp.r_vec(theta, tau0);
    Ok(IssGain {
        gain_coeff: gain_from(c_lower, c_upper, r_vec, xi_min, k, eps)?,
        r_vec,
        theta,
        c_lower,
        c_upper,
    })
}

/// `sqrt(cond(P)e^{τ₀})‖r‖/(λ̲(Ξ)kε)`, the ill-conditioned-`P` limit of the gain.
pub fn simplified_gain_static(inp: &StaticInputs, tau0: f64, r: [f64; 2], xi_min: f64, k: f64, eps: f64) -> f64 {
    (inp.lambda_max_p / inp.lambda_min_p * tau0.exp()).sqrt() * r[0].hypot(r[1]) / (xi_min * k * eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loop", rename_all = "snake_case")]
pub enum LoopInputs {
    Controller(DynamicInputs),
    Plant(StaticInputs),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSnapshot {
    pub cost: CostConstants,
    pub lyapunov_r: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub lambda_min_p: f64,
    pub lambda_max_p: f64,
    pub lambda_min_r: f64,
    pub m_bar: Option<f64>,
    pub beta_tilde: Option<f64>,
    pub lambda_bar_rhat: Option<f64>,
    pub u_wbar: f64,
    pub norm_c: f64,
    pub norm_g: f64,
    pub norm_h: f64,
    pub norm_pa_inv_b: f64,
    pub norm_pa_inv_e: f64,
    pub norm_a_inv_b: f64,
    pub norm_a_inv_e: f64,
}

/// Every certificate quantity for one loop, evaluated at a chosen `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub loop_kind: LoopKind,
    pub params: AdmissibilityParams,
    pub kappa_feasible: bool,
    pub omega: f64,
    pub rho_s: f64,
    pub rho_a: f64,
    pub rho: f64,
    pub tau0: f64,
    pub xi_params: XiParams,
    pub theta: f64,
    /// `None` when the time-ratio condition fails.
    pub eps_star: Option<f64>,
    pub eps_star_unbounded: bool,
    pub eps: f64,
    pub eps_compliant: bool,
    pub xi: [[f64; 2]; 2],
    pub lambda_min_xi: f64,
    pub xi_pd: bool,
    pub k_margin: f64,
    pub r_vec: [f64; 2],
    pub c_lower: f64,
    pub c_upper: f64,
    /// `γ(s) = gain_coeff·s`; `None` unless `Ξ ≻ 0`.
    pub gain_coeff: Option<f64>,
    pub simplified_gain_coeff: Option<f64>,
    pub inputs: LoopInputs,
    pub constants: ConstantsSnapshot,
    pub warnings: Vec<String>,
}

impl CertificateReport {
    /// Re-evaluates the `ε`-dependent entries (`Ξ`, gain) at a new `ε`.
    pub fn at_eps(&self, eps: f64) -> Self {
        let mut out = self.clone();
        out.eps = eps;
        out.eps_compliant = self.kappa_feasible && self.eps_star.is_some_and(|s| eps < s) || self.eps_star_unbounded && self.kappa_feasible;
        let xi = xi_matrix(&self.xi_params, self.theta, eps);
        out.xi = xi.xi;
        out.lambda_min_xi = xi.lambda_min;
        out.xi_pd = xi.pd;
        out.gain_coeff = None;
        out.simplified_gain_coeff = None;
        if xi.pd && self.kappa_feasible {
            let k = self.k_margin;
            match &self.inputs {
                LoopInputs::Controller(inp) => {
                    if let Ok(g) = iss_gain_dynamic(inp, self.tau0, self.theta, xi.lambda_min, k, eps) {
                        out.gain_coeff = Some(g.gain_coeff);
                        out.simplified_gain_coeff = Some(simplified_gain_dynamic(inp, self.tau0, g.r_vec, xi.lambda_min, k, eps));
                    }
                }
                LoopInputs::Plant(inp) => {
                    if let Ok(g) = iss_gain_static(inp, self.tau0, self.theta, xi.lambda_min, k, eps) {
                        out.gain_coeff = Some(g.gain_coeff);
                        out.simplified_gain_coeff = Some(simplified_gain_static(inp, self.tau0, g.r_vec, xi.lambda_min, k, eps));
                    }
                }
            }
        }
        out
    }

    /// Residual-ball radius per unit `‖ẇ‖`: `‖r‖/(ελ̲(Ξ)k)`.
    pub fn residual_coeff(&self) -> Option<f64> {
        (self.xi_pd && self.kappa_feasible)
            .then(|| self.r_vec[0].hypot(self.r_vec[1]) / (self.eps * self.lambda_min_xi * self.k_margin))
    }

    /// Flow decay rate of `U` outside the residual ball, `ε(1−k)λ̲(Ξ)/c_upper`.
    pub fn decay_rate(&self) -> Option<f64> {
        (self.xi_pd && self.kappa_feasible).then(|| self.eps * (1.0 - self.k_margin) * self.lambda_min_xi / self.c_upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyOptions {
    /// Right-hand side of the plant Lyapunov equation; identity when absent.
    pub lyapunov_r: Option<Vec<Vec<f64>>>,
    /// Free scalar of the plant-loop certificate; `√(λ̄(P)λ̲(P))` when absent.
    pub beta_tilde: Option<f64>,
    pub k: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { lyapunov_r: None, beta_tilde: None, k: 0.5 }
    }
}

struct Shared {
    p: Mat,
    r: Mat,
    lambda_min_p: f64,
    lambda_max_p: f64,
    lambda_min_r: f64,
    norm_c: f64,
    norm_g: f64,
    norm_h: f64,
    norm_pa_inv_b: f64,
    norm_pa_inv_e: f64,
    norm_a_inv_b: f64,
    norm_a_inv_e: f64,
    cost: CostConstants,
}

fn shared(nominal: &ModeMatrices, c: &Mat, obj: &Objective, opts: &CertifyOptions) -> Result<Shared, CertifyError> {
    let n = nominal.a.nrows();
    let r = match &opts.lyapunov_r {
        Some(rows) => matrixlab::from_rows(rows)?,
        None => Mat::identity(n, n),
    };
    let p = matrixlab::solve_lyapunov(&nominal.a, &r)?;
    let (lambda_min_p, lambda_max_p) = matrixlab::sym_eig_bounds(&p)?;
    let (lambda_min_r, _) = matrixlab::sym_eig_bounds(&r)?;
    let a_inv_b = matrixlab::solve(&nominal.a, &nominal.b)?;
    let a_inv_e = matrixlab::solve(&nominal.a, &nominal.e)?;
    let (g, h) = plant::steady_state_maps(&nominal.a, &nominal.b, &nominal.e, c)?;
    if (&g - &obj.g).amax() > 1e-9 * (1.0 + g.amax()) || (&h - &obj.h).amax() > 1e-9 * (1.0 + h.amax()) {
        return Err(CertifyError::BadInput("objective G/H do not match the nominal plant".into()));
    }
    if !(opts.k > 0.0 && opts.k < 1.0) {
        return Err(CertifyError::BadInput(format!("k = {} must lie in (0,1)", opts.k)));
    }
    Ok(Shared {
        norm_pa_inv_b: matrixlab::spectral_norm(&(&p * &a_inv_b)),
        norm_pa_inv_e: matrixlab::spectral_norm(&(&p * &a_inv_e)),
        norm_a_inv_b: matrixlab::spectral_norm(&a_inv_b),
        norm_a_inv_e: matrixlab::spectral_norm(&a_inv_e),
        norm_c: matrixlab::spectral_norm(c),
        norm_g: matrixlab::spectral_norm(&g),
        norm_h: matrixlab::spectral_norm(&h),
        cost: obj.constants()?,
        p,
        r,
        lambda_min_p,
        lambda_max_p,
        lambda_min_r,
    })
}

fn snapshot(s: &Shared, m_bar: Option<f64>, beta_tilde: Option<f64>, lambda_bar_rhat: Option<f64>, u_wbar: f64) -> ConstantsSnapshot {
    ConstantsSnapshot {
        cost: s.cost,
        lyapunov_r: matrixlab::to_rows(&s.r),
        p: matrixlab::to_rows(&s.p),
        lambda_min_p: s.lambda_min_p,
        lambda_max_p: s.lambda_max_p,
        lambda_min_r: s.lambda_min_r,
        m_bar,
        beta_tilde,
        lambda_bar_rhat,
        u_wbar,
        norm_c: s.norm_c,
        norm_g: s.norm_g,
        norm_h: s.norm_h,
        norm_pa_inv_b: s.norm_pa_inv_b,
        norm_pa_inv_e: s.norm_pa_inv_e,
        norm_a_inv_b: s.norm_a_inv_b,
        norm_a_inv_e: s.norm_a_inv_e,
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    loop_kind: LoopKind,
    params: &AdmissibilityParams,
    kv: KappaVerdict,
    tau0: f64,
    xi_params: XiParams,
    inputs: LoopInputs,
    constants: ConstantsSnapshot,
    k: f64,
    mut warnings: Vec<String>,
) -> CertificateReport {
    let eps_star = kv.feasible.then(|| xi_params.eps_star());
    let unbounded = eps_star.is_some_and(f64::is_infinite);
    if !kv.feasible {
        warnings.push(format!("time-ratio condition fails: rho = {:.6e}", kv.rho));
    }
    if unbounded {
        warnings.push("eps_star unbounded (degenerate denominator)".into());
    }
    let theta = xi_params.theta_star();
    let theta = if theta.is_finite() && theta > 0.0 && theta < 1.0 { theta } else { 0.5 };
    let (c_lower, c_upper) = match &inputs {
        LoopInputs::Controller(i) => i.bounds(theta, tau0),
        LoopInputs::Plant(i) => i.bounds(theta, tau0),
    };
    let r_vec = match &inputs {
        LoopInputs::Controller(i) => i.r_vec(theta, tau0),
        LoopInputs::Plant(i) => i.r_vec(theta, tau0),
    };
    let base = CertificateReport {
        loop_kind,
        params: *params,
        kappa_feasible: kv.feasible,
        omega: kv.omega,
        rho_s: kv.rho_s,
        rho_a: kv.rho_a,
        rho: kv.rho,
        tau0,
        xi_params,
        theta,
        eps_star: eps_star.filter(|e| e.is_finite()),
        eps_star_unbounded: unbounded,
        eps: f64::NAN,
        eps_compliant: false,
        xi: [[f64::NAN; 2]; 2],
        lambda_min_xi: f64::NAN,
        xi_pd: false,
        k_margin: k,
        r_vec,
        c_lower,
        c_upper,
        gain_coeff: None,
        simplified_gain_coeff: None,
        inputs,
        constants,
        warnings,
    };
    let default_eps = match base.eps_star {
        Some(s) => 0.5 * s,
        None => 1.0,
    };
    base.at_eps(default_eps)
}

/// Certificate for the loop whose gradient controller is attacked.
pub fn certify_controller_loop(
    nominal: &ModeMatrices,
    c: &Mat,
    obj: &Objective,
    catalog: &ControllerCatalog,
    params: &AdmissibilityParams,
    u_wbar: f64,
    opts: &CertifyOptions,
) -> Result<CertificateReport, CertifyError> {
    params.validate().map_err(|e| CertifyError::BadInput(e.to_string()))?;
    let s = shared(nominal, c, obj, opts)?;
    let mut warnings = Vec::new();
    let m_bar = catalog.m_bar();
    if m_bar < 1.0 {
        warnings.push(format!("M_bar = {m_bar} < 1; formulas use max(M_bar, 1) where stated"));
    }
    let kv = kappa_condition_dynamic(params.kappa1, params.kappa2, s.cost.mu, s.cost.ell, m_bar);
    let tau0 = tau0_dynamic(params.n0f(), params.t0, s.cost.mu, s.cost.ell, m_bar, kv.omega);
    let inp = DynamicInputs {
        mu: s.cost.mu,
        ell: s.cost.ell,
        ell_y: s.cost.ell_y,
        m_bar,
        lambda_min_r: s.lambda_min_r,
        lambda_min_p: s.lambda_min_p,
        lambda_max_p: s.lambda_max_p,
        norm_c: s.norm_c,
        norm_g: s.norm_g,
        norm_h: s.norm_h,
        norm_pa_inv_b: s.norm_pa_inv_b,
        norm_pa_inv_e: s.norm_pa_inv_e,
        u_wbar,
    };
    let l8 = inp.xi_params(kv.rho, tau0);
    let snap = snapshot(&s, Some(m_bar), None, None, u_wbar);
    Ok(finish(LoopKind::Controller, params, kv, tau0, l8, LoopInputs::Controller(inp), snap, opts.k, warnings))
}

/// Certificate for the loop whose static inner feedback is attacked.
pub fn certify_plant_loop(
    nominal: &ModeMatrices,
    attack_modes: &[ModeMatrices],
    c: &Mat,
    obj: &Objective,
    params: &AdmissibilityParams,
    u_wbar: f64,
    opts: &CertifyOptions,
) -> Result<CertificateReport, CertifyError> {
    params.validate().map_err(|e| CertifyError::BadInput(e.to_string()))?;
    let s = shared(nominal, c, obj, opts)?;
    let mut warnings = Vec::new();
    let dest = plant::check_attack_destabilizing(attack_modes)?;
    if !dest.all_destabilizing && !attack_modes.is_empty() {
        warnings.push("some plant attack modes are not destabilizing".into());
    }
    let lambda_bar_rhat = dest.lambda_bar_rhat.unwrap_or(0.0).max(0.0);
    let beta_tilde = opts.beta_tilde.unwrap_or_else(|| (s.lambda_max_p * s.lambda_min_p).sqrt());
    if !(beta_tilde > 0.0) {
        return Err(CertifyError::BadInput("beta_tilde must be positive".into()));
    }
    let kv = kappa_condition_static(
        params.kappa1,
        params.kappa2,
        s.lambda_min_p,
        s.lambda_max_p,
        s.lambda_min_r,
        lambda_bar_rhat,
        beta_tilde,
    );
    if kv.omega < 1.0 {
        warnings.push(format!("beta_tilde gives omega = {} < 1", kv.omega));
    }
    let tau0 = tau0_static(params.n0f(), params.t0, kv.omega, kv.rho_s, kv.rho_a);
    let inp = StaticInputs {
        mu: s.cost.mu,
        ell: s.cost.ell,
        ell_y: s.cost.ell_y,
        lambda_min_r: s.lambda_min_r,
        lambda_min_p: s.lambda_min_p,
        lambda_max_p: s.lambda_max_p,
        beta_tilde,
        lambda_bar_rhat,
        norm_c: s.norm_c,
        norm_g: s.norm_g,
        norm_h: s.norm_h,
        norm_a_inv_b: s.norm_a_inv_b,
        norm_a_inv_e: s.norm_a_inv_e,
    };
    let l8 = inp.xi_params(kv.rho, tau0);
    let snap = snapshot(&s, None, Some(beta_tilde), dest.lambda_bar_rhat, u_wbar);
    Ok(finish(LoopKind::Plant, params, kv, tau0, l8, LoopInputs::Plant(inp), snap, opts.k, warnings))
}
