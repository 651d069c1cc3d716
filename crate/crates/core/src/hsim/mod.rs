//! Fixed-step hybrid simulation of the attacked feedback-optimization loops,
//! plus the Lyapunov / ISS runtime monitors.

mod exo;
mod io;
mod monitor;

pub use exo::{ExoPiece, Exosystem};
pub use io::{write_monitor_csv, write_trajectory_csv};
pub use monitor::{
    monitor, tracking_error, FlowVerdict, IssVerdict, JumpVerdict, MonitorError, MonitorSample, MonitorTrace,
    TOL_JUMP,
};

use crate::attack::{self, check_admissible, AdmissibilityParams, AttackSchedule, ControllerCatalog, NOMINAL, TOL_ADMISSIBLE};
use crate::certify::LoopKind;
use crate::matrixlab::{Mat, Vector};
use crate::objective::Objective;
use crate::plant::ModeMatrices;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Any state component beyond this magnitude aborts the run.
pub const BLOW_UP: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("state left the finite region at t = {t} (j = {j})")]
    NonFiniteState { t: f64, j: usize },
    #[error("dt = {dt} exceeds a tenth of the smallest inter-event gap {gap}")]
    StepTooLarge { dt: f64, gap: f64 },
    #[error("bad exosystem: {0}")]
    BadExosystem(String),
    #[error("bad simulation setup: {0}")]
    BadSetup(String),
    #[error(transparent)]
    Attack(#[from] attack::AttackError),
}

/// Which clock the schedule and the budget automaton run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackClock {
    /// Controller time `εt`: the literal reading for the controller-attacked loop.
    Controller,
    /// Plant time `t`.
    Plant,
}

#[derive(Debug, Clone)]
pub enum LoopModel {
    /// Fixed plant, gradient multiplied by `M_σ`.
    Controller { plant: ModeMatrices, catalog: ControllerCatalog },
    /// Plant matrices switch with `σ`; `attacks` excludes the nominal mode.
    Plant { nominal: ModeMatrices, attacks: Vec<ModeMatrices> },
}

impl LoopModel {
    pub fn kind(&self) -> LoopKind {
        match self {
            LoopModel::Controller { .. } => LoopKind::Controller,
            LoopModel::Plant { .. } => LoopKind::Plant,
        }
    }

    pub fn nominal(&self) -> &ModeMatrices {
        match self {
            LoopModel::Controller { plant, .. } => plant,
            LoopModel::Plant { nominal, .. } => nominal,
        }
    }

    pub fn attack_ids(&self) -> Vec<String> {
        match self {
            LoopModel::Controller { catalog, .. } => catalog.attack_ids(),
            LoopModel::Plant { attacks, .. } => attacks.iter().map(|m| m.id.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimSetup {
    pub model: LoopModel,
    pub c: Mat,
    pub objective: Objective,
    pub params: AdmissibilityParams,
    /// Switching signal on the attack clock.
    pub schedule: AttackSchedule,
    pub attack_clock: AttackClock,
    pub exo: Exosystem,
    pub eps: f64,
    pub t_end: f64,
    pub dt: f64,
    pub x0: Vector,
    pub u0: Vector,
    /// Record one sample every this many steps (segment ends are always recorded).
    pub record_every: usize,
}

impl SimSetup {
    /// Attack-clock units per unit of plant time.
    pub fn clock_rate(&self) -> f64 {
        match self.attack_clock {
            AttackClock::Controller => self.eps,
            AttackClock::Plant => 1.0,
        }
    }
}

/// One sample `(t, j, x, u, τ₁, τ₂, σ, w)` of a hybrid arc.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridPoint {
    pub t: f64,
    pub j: usize,
    pub x: Vector,
    pub u: Vector,
    pub tau1: f64,
    pub tau2: f64,
    pub sigma: String,
    pub w: Vector,
}

#[derive(Debug, Clone, Serialize)]
pub struct HybridTrajectory {
    pub loop_kind: LoopKind,
    pub eps: f64,
    pub points: Vec<HybridPoint>,
    /// Indices of post-jump samples; the pre-jump sample sits just before.
    pub jumps: Vec<usize>,
    pub admissible: bool,
    pub warnings: Vec<String>,
}

impl HybridTrajectory {
    pub fn last(&self) -> &HybridPoint {
        self.points.last().expect("trajectory has at least the initial point")
    }
}

/// Jump map: `(x, u, w)` unchanged, one switch token spent on a real mode change.
pub fn jump_map(point: &HybridPoint, next: &str, warnings: &mut Vec<String>) -> HybridPoint {
    let mut out = point.clone();
    out.j += 1;
    if next != point.sigma {
        if point.tau1 < 1.0 - TOL_ADMISSIBLE {
            warnings.push(format!("switch at t = {} without a full token (tau1 = {:.3e})", point.t, point.tau1));
        }
        out.tau1 = (point.tau1 - 1.0).max(0.0);
        out.sigma = next.to_string();
    }
    out
}

enum ModeDyn<'a> {
    Gain(&'a Mat),
    Plant(&'a ModeMatrices),
}

struct Rhs<'a> {
    setup: &'a SimSetup,
    nominal: &'a ModeMatrices,
}

impl Rhs<'_> {
    fn eval(&self, mode: &ModeDyn, x: &Vector, u: &Vector, w: &Vector) -> (Vector, Vector) {
        let obj = &self.setup.objective;
        let y = &self.setup.c * x;
        let grad = obj.grad_from_output(u, &y);
        match mode {
            ModeDyn::Gain(m) => {
                let p = self.nominal;
                (&p.a * x + &p.b * u + &p.e * w, -(*m * grad) * self.setup.eps)
            }
            ModeDyn::Plant(p) => (&p.a * x + &p.b * u + &p.e * w, -grad * self.setup.eps),
        }
    }
}

fn validate(setup: &SimSetup) -> Result<(), SimError> {
    let bad = |m: String| Err(SimError::BadSetup(m));
    if !(setup.eps > 0.0 && setup.eps.is_finite()) {
        return bad(format!("eps = {} must be positive", setup.eps));
    }
    if !(setup.dt > 0.0 && setup.dt.is_finite()) || !(setup.t_end >= 0.0 && setup.t_end.is_finite()) {
        return bad("need dt > 0 and finite t_end >= 0".into());
    }
    if setup.record_every == 0 {
        return bad("record_every must be >= 1".into());
    }
    let nom = setup.model.nominal();
    let (n, m, q) = (nom.a.nrows(), nom.b.ncols(), nom.e.ncols());
    if setup.x0.len() != n || setup.u0.len() != m {
        return bad(format!("initial state dims ({}, {}) vs plant ({n}, {m})", setup.x0.len(), setup.u0.len()));
    }
    if setup.c.ncols() != n {
        return bad("C column count differs from state dimension".into());
    }
    let qe = setup.exo.validate()?;
    if qe != q || setup.objective.disturbance_dim() != q || setup.objective.input_dim() != m {
        return bad(format!("disturbance/input dims disagree (exo {qe}, plant {q})"));
    }
    setup.params.validate()?;
    Ok(())
}

/// Integrates the hybrid loop with classical RK4, splitting steps exactly at
/// every scheduled switch and every exosystem breakpoint.
pub fn simulate(setup: &SimSetup) -> Result<HybridTrajectory, SimError> {
    validate(setup)?;
    let mut warnings = Vec::new();
    let nominal = setup.model.nominal();
    let ids = setup.model.attack_ids();
    let verdict = check_admissible(&setup.schedule, &setup.params, &ids);
    if !verdict.admissible {
        let msg = match verdict.violation() {
            Some(w) => format!("schedule is not admissible ({:?} on [{}, {}])", w.kind, w.s, w.t),
            None => "schedule is not admissible".to_string(),
        };
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut modes: HashMap<&str, ModeDyn> = HashMap::new();
    match &setup.model {
        LoopModel::Controller { catalog, .. } => {
            for m in &catalog.modes {
                modes.insert(m.id.as_str(), ModeDyn::Gain(&m.m));
            }
        }
        LoopModel::Plant { nominal, attacks } => {
            modes.insert(NOMINAL, ModeDyn::Plant(nominal));
            for a in attacks {
                modes.insert(a.id.as_str(), ModeDyn::Plant(a));
            }
        }
    }
    for ev in &setup.schedule.events {
        if !modes.contains_key(ev.mode.as_str()) {
            return Err(attack::AttackError::UnknownMode(ev.mode.clone()).into());
        }
    }

    let rate = setup.clock_rate();
    let sched = setup.schedule.rescaled(1.0 / rate);
    if sched.horizon + 1e-9 * (1.0 + setup.t_end) < setup.t_end {
        warnings.push(format!("schedule covers t <= {} only; last mode held to t_end", sched.horizon));
    }
    let switches: Vec<(f64, String)> = sched
        .events
        .iter()
        .skip(1)
        .filter(|e| e.time < setup.t_end)
        .map(|e| (e.time, e.mode.clone()))
        .collect();
    let mut prev = 0.0;
    for (t, _) in &switches {
        let gap = t - prev;
        if setup.dt > gap / 10.0 {
            return Err(SimError::StepTooLarge { dt: setup.dt, gap });
        }
        prev = *t;
    }
    let mut cuts: Vec<f64> = switches.iter().map(|(t, _)| *t).chain(setup.exo.breakpoints(setup.t_end)).collect();
    cuts.push(setup.t_end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let sigma0 = sched.events.first().map_or(NOMINAL.to_string(), |e| e.mode.clone());
    let mut pt = HybridPoint {
        t: 0.0,
        j: 0,
        x: setup.x0.clone(),
        u: setup.u0.clone(),
        tau1: setup.params.n0f(),
        tau2: setup.params.t0,
        sigma: sigma0,
        w: setup.exo.w(0.0),
    };
    let mut points = vec![pt.clone()];
    let mut jumps = Vec::new();
    let rhs = Rhs { setup, nominal };
    let mut next_switch = 0usize;
    let mut exits_warned = false;
    let p = &setup.params;

    let mut seg_start = 0.0;
    for &seg_end in &cuts {
        if seg_end > seg_start {
            let steps = ((seg_end - seg_start) / setup.dt - 1e-9).ceil().max(1.0) as usize;
            let h = (seg_end - seg_start) / steps as f64;
            let mode = &modes[pt.sigma.as_str()];
            let attacking = attack::is_attack(&ids, &pt.sigma);
            for k in 1..=steps {
                let t0 = seg_start + (k - 1) as f64 * h;
                let t1 = if k == steps { seg_end } else { seg_start + k as f64 * h };
                let hh = t1 - t0;
                let tm = t0 + 0.5 * hh;
                let w0 = setup.exo.w(t0);
                let wm = setup.exo.w_left(tm);
                let w1 = setup.exo.w_left(t1);
                let (k1x, k1u) = rhs.eval(mode, &pt.x, &pt.u, &w0);
                let (k2x, k2u) = rhs.eval(mode, &(&pt.x + &k1x * (0.5 * hh)), &(&pt.u + &k1u * (0.5 * hh)), &wm);
                let (k3x, k3u) = rhs.eval(mode, &(&pt.x + &k2x * (0.5 * hh)), &(&pt.u + &k2u * (0.5 * hh)), &wm);
                let (k4x, k4u) = rhs.eval(mode, &(&pt.x + &k3x * hh), &(&pt.u + &k3u * hh), &w1);
                pt.x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (hh / 6.0);
                pt.u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (hh / 6.0);
                pt.t = t1;

                let dtc = rate * hh;
                pt.tau1 = (pt.tau1 + p.kappa1 * dtc).min(p.n0f());
                pt.tau2 = if attacking {
                    let next = pt.tau2 - (1.0 - p.kappa2) * dtc;
                    if next < -TOL_ADMISSIBLE && !exits_warned {
                        exits_warned = true;
                        warnings.push(format!("attack-time budget exhausted at t = {t1}"));
                    }
                    next.max(0.0)
                } else {
                    (pt.tau2 + p.kappa2 * dtc).min(p.t0)
                };

                if pt.x.iter().chain(pt.u.iter()).any(|v| !(v.abs() <= BLOW_UP)) {
                    return Err(SimError::NonFiniteState { t: t1, j: pt.j });
                }
                if k == steps || k % setup.record_every == 0 {
                    pt.w = setup.exo.w_left(t1);
                    points.push(pt.clone());
                }
            }
        }
        seg_start = seg_end;
        pt.w = setup.exo.w(seg_end);
        while next_switch < switches.len() && switches[next_switch].0 <= seg_end {
            let after = jump_map(&pt, &switches[next_switch].1, &mut warnings);
            pt = after;
            points.push(pt.clone());
            jumps.push(points.len() - 1);
            next_switch += 1;
        }
    }

    Ok(HybridTrajectory {
        loop_kind: setup.model.kind(),
        eps: setup.eps,
        points,
        jumps,
        admissible: verdict.admissible,
        warnings,
    })
}
