use super::grid::{build_swing_model, inertia_mode_matrix, SwingGridSpec};
use super::ScenarioError;
use crate::attack::{
    check_admissible, generate_admissible, AdmissibilityParams, AdmissibilityVerdict, AttackSchedule,
    ControllerAttackMode, ControllerCatalog, ControllerModeCheck, GeneratorOptions, ScheduleEvent,
};
use crate::certify::{certify_controller_loop, certify_plant_loop, CertificateReport, CertifyOptions, LoopKind};
use crate::hsim::{AttackClock, Exosystem, LoopModel, SimSetup};
use crate::matrixlab::{self, HurwitzVerdict, Mat, Vector};
use crate::objective::{Objective, OutputCost};
use crate::plant::{
    check_attack_destabilizing, check_common_equilibrium, closed_loop, steady_state_maps, DestabilizingReport,
    EquilibriumVerdict, ModeMatrices, PlantAttackMode, PlantModel,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantSpec {
    /// `ẋ = Ax + Bu + Ew`, `y = Cx`.
    Matrices { a: Rows, b: Rows, e: Rows, c: Rows },
    /// Inner static loop `A = F + NKC`.
    Structured { f: Rows, n: Rows, b: Rows, e: Rows, c: Rows, k: Rows },
    SwingGrid { grid: SwingGridSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputSpec {
    Quadratic {
        q: Rows,
        #[serde(default)]
        y_ref: Option<Vec<f64>>,
    },
    SoftBox { eta: f64, lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    /// Input weight of `uᵀRu`.
    pub r: Rows,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerAttackSpec {
    pub id: String,
    pub m: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantAttackSpec {
    /// Inner-loop gain `L`; absent input maps default to identity.
    Feedback {
        id: String,
        l_gain: Rows,
        #[serde(default)]
        l_b: Option<Rows>,
        #[serde(default)]
        l_e: Option<Rows>,
    },
    /// Inner-loop gain `L` with input maps `A_σA⁻¹`.
    PreserveEquilibrium { id: String, l_gain: Rows },
    Direct { id: String, a: Rows, b: Rows, e: Rows },
    /// Swing grid only: rebuild the state matrix with another inertia diagonal.
    Inertia { id: String, m_diag: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// Events on the attack clock; `horizon` defaults to the run horizon on that clock.
    Explicit {
        events: Vec<ScheduleEvent>,
        #[serde(default)]
        horizon: Option<f64>,
    },
    Generated {
        seed: u64,
        #[serde(default)]
        options: GeneratorOptions,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsPolicy {
    /// `fraction · ε*`, `fraction ∈ (0, 1)`.
    Certificate { fraction: f64 },
    MultipleOfCertificate { factor: f64 },
    Explicit { value: f64 },
}

fn default_record_every() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(rename = "loop")]
    pub loop_kind: LoopKind,
    pub plant: PlantSpec,
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub controller_attacks: Vec<ControllerAttackSpec>,
    #[serde(default)]
    pub plant_attacks: Vec<PlantAttackSpec>,
    pub params: AdmissibilityParams,
    pub schedule: ScheduleSpec,
    /// Defaults to the controller clock for the controller-attacked loop and
    /// to plant time otherwise.
    #[serde(default)]
    pub attack_clock: Option<AttackClock>,
    pub exo: Exosystem,
    pub eps: EpsPolicy,
    #[serde(default)]
    pub certify: CertifyOptions,
    /// Plant-time horizon.
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Defaults to zeros.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Defaults to zeros.
    #[serde(default)]
    pub u0: Option<Vec<f64>>,
}

impl ScenarioConfig {
    /// Parses JSON, reporting the failing field path and line on error.
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ScenarioError::Parse { path, line: inner.line(), message: inner.to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn attack_clock(&self) -> AttackClock {
        self.attack_clock.unwrap_or(match self.loop_kind {
            LoopKind::Controller => AttackClock::Controller,
            LoopKind::Plant => AttackClock::Plant,
        })
    }
}

/// Structural checks gathered while resolving a config.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub nominal_hurwitz: HurwitzVerdict,
    pub nominal_poles: Vec<[f64; 2]>,
    pub attack_hurwitz: Vec<(String, HurwitzVerdict)>,
    pub equilibrium: Option<EquilibriumVerdict>,
    pub destabilizing: Option<DestabilizingReport>,
    pub controller_modes: Vec<ControllerModeCheck>,
    pub schedule: AdmissibilityVerdict,
}

/// A config turned into concrete matrices, a certificate and a simulator setup.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub name: String,
    pub seed: Option<u64>,
    pub setup: SimSetup,
    pub certificate: CertificateReport,
    pub validation: ValidationReport,
    pub warnings: Vec<String>,
}

fn mat(rows: &Rows, what: &str) -> Result<Mat, ScenarioError> {
    matrixlab::from_rows(rows).map_err(|e| ScenarioError::Config(format!("{what}: {e}")))
}

struct Plant {
    nominal: ModeMatrices,
    c: Mat,
    structured: Option<PlantModel>,
    grid: Option<SwingGridSpec>,
}

fn build_plant(spec: &PlantSpec) -> Result<Plant, ScenarioError> {
    match spec {
        PlantSpec::Matrices { a, b, e, c } => {
            let pm = PlantModel::direct(mat(a, "plant.a")?, mat(b, "plant.b")?, mat(e, "plant.e")?, mat(c, "plant.c")?)?;
            Ok(Plant { nominal: pm.nominal(), c: pm.c.clone(), structured: None, grid: None })
        }
        PlantSpec::Structured { f, n, b, e, c, k } => {
            let pm = PlantModel::new(
                mat(f, "plant.f")?,
                mat(n, "plant.n")?,
                mat(b, "plant.b")?,
                mat(e, "plant.e")?,
                mat(c, "plant.c")?,
                mat(k, "plant.k")?,
            )?;
            Ok(Plant { nominal: pm.nominal(), c: pm.c.clone(), structured: Some(pm), grid: None })
        }
        PlantSpec::SwingGrid { grid } => {
            let m = build_swing_model(grid)?;
            Ok(Plant {
                nominal: ModeMatrices { id: crate::attack::NOMINAL.into(), a: m.a, b: m.b, e: m.e },
                c: m.c,
                structured: None,
                grid: Some(grid.clone()),
            })
        }
    }
}

fn plant_attack(plant: &Plant, spec: &PlantAttackSpec) -> Result<ModeMatrices, ScenarioError> {
    let need_structured = || {
        plant
            .structured
            .as_ref()
            .ok_or_else(|| ScenarioError::Config("feedback attacks need a structured plant".into()))
    };
    match spec {
        PlantAttackSpec::Feedback { id, l_gain, l_b, l_e } => {
            let pm = need_structured()?;
            let mut mode = PlantAttackMode::identity(id, pm);
            mode.l_gain = mat(l_gain, "l_gain")?;
            if let Some(l) = l_b {
                mode.l_b = mat(l, "l_b")?;
            }
            if let Some(l) = l_e {
                mode.l_e = mat(l, "l_e")?;
            }
            Ok(closed_loop(pm, &mode)?)
        }
        PlantAttackSpec::PreserveEquilibrium { id, l_gain } => {
            let pm = need_structured()?;
            let mode = PlantAttackMode::preserving_equilibrium(id, pm, mat(l_gain, "l_gain")?)?;
            Ok(closed_loop(pm, &mode)?)
        }
        PlantAttackSpec::Direct { id, a, b, e } => {
            let m = ModeMatrices { id: id.clone(), a: mat(a, "a")?, b: mat(b, "b")?, e: mat(e, "e")? };
            if m.a.shape() != plant.nominal.a.shape() || m.b.shape() != plant.nominal.b.shape() || m.e.shape() != plant.nominal.e.shape() {
                return Err(ScenarioError::Config(format!("direct attack {id}: shapes differ from the nominal plant")));
            }
            Ok(m)
        }
        PlantAttackSpec::Inertia { id, m_diag } => {
            let grid = plant
                .grid
                .as_ref()
                .ok_or_else(|| ScenarioError::Config("inertia attacks need a swing_grid plant".into()))?;
            Ok(ModeMatrices {
                id: id.clone(),
                a: inertia_mode_matrix(grid, m_diag)?,
                b: plant.nominal.b.clone(),
                e: plant.nominal.e.clone(),
            })
        }
    }
}

fn build_objective(spec: &ObjectiveSpec, plant: &Plant) -> Result<Objective, ScenarioError> {
    let (g, h) = steady_state_maps(&plant.nominal.a, &plant.nominal.b, &plant.nominal.e, &plant.c)?;
    let p = plant.c.nrows();
    let output = match &spec.output {
        OutputSpec::Quadratic { q, y_ref } => OutputCost::Quadratic {
            q: mat(q, "objective.output.q")?,
            y_ref: y_ref.as_ref().map_or_else(|| Vector::zeros(p), |v| Vector::from_column_slice(v)),
        },
        OutputSpec::SoftBox { eta, lo, hi } => OutputCost::SoftBox {
            eta: *eta,
            lo: Vector::from_column_slice(lo),
            hi: Vector::from_column_slice(hi),
        },
    };
    Ok(Objective::new(mat(&spec.r, "objective.r")?, output, g, h)?)
}

fn poles(a: &Mat) -> Result<Vec<[f64; 2]>, ScenarioError> {
    Ok(matrixlab::eigenvalues(a)?.into_iter().map(|z| [z.re, z.im]).collect())
}

/// Resolves a config. `seed_override` replaces a generated schedule's seed.
pub fn resolve(cfg: &ScenarioConfig, seed_override: Option<u64>) -> Result<ResolvedScenario, ScenarioError> {
    let mut warnings = Vec::new();
    if !(cfg.horizon >= 0.0 && cfg.horizon.is_finite()) || !(cfg.dt > 0.0) {
        return Err(ScenarioError::Config("horizon must be >= 0 and dt > 0".into()));
    }
    let plant = build_plant(&cfg.plant)?;
    let objective = build_objective(&cfg.objective, &plant)?;
    let m = plant.nominal.b.ncols();
    let nominal_hurwitz = matrixlab::is_hurwitz(&plant.nominal.a)?;
    if !nominal_hurwitz.hurwitz {
        return Err(ScenarioError::Config(format!(
            "nominal plant is not Hurwitz (max real part {})",
            nominal_hurwitz.max_real_part
        )));
    }
    cfg.exo
        .validate()
        .map_err(|e| ScenarioError::Config(format!("exo: {e}")))?;
    let w_samples = cfg.exo.samples(cfg.horizon, 64);
    let u_wbar = objective.optimal_sensitivity_bound(&w_samples[..w_samples.len().min(16)])?;

    let mut attack_hurwitz = Vec::new();
    let (model, cert, equilibrium, destabilizing, controller_modes) = match cfg.loop_kind {
        LoopKind::Controller => {
            if !cfg.plant_attacks.is_empty() {
                warnings.push("plant_attacks ignored for the controller-attacked loop".into());
            }
            let attacks = cfg
                .controller_attacks
                .iter()
                .map(|a| Ok(ControllerAttackMode { id: a.id.clone(), m: mat(&a.m, "controller_attacks.m")? }))
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            let catalog = ControllerCatalog::new(m, attacks)?;
            let checks = catalog.check_modes()?;
            for c in &checks {
                if !c.has_negative_eigenvalue {
                    warnings.push(format!("controller attack {} has no negative eigenvalue", c.id));
                }
            }
            let cert = certify_controller_loop(&plant.nominal, &plant.c, &objective, &catalog, &cfg.params, u_wbar, &cfg.certify)?;
            (LoopModel::Controller { plant: plant.nominal.clone(), catalog }, cert, None, None, checks)
        }
        LoopKind::Plant => {
            if !cfg.controller_attacks.is_empty() {
                warnings.push("controller_attacks ignored for the plant-attacked loop".into());
            }
            let attacks = cfg
                .plant_attacks
                .iter()
                .map(|a| plant_attack(&plant, a))
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            for a in &attacks {
                attack_hurwitz.push((a.id.clone(), matrixlab::is_hurwitz(&a.a)?));
            }
            let eq = check_common_equilibrium(&plant.nominal, &attacks, &[])?;
            if !eq.holds {
                warnings.push(format!(
                    "attack modes do not share the nominal equilibrium (max deviation {:.3e}, mode {:?})",
                    eq.max_deviation, eq.worst_mode
                ));
            }
            let dest = check_attack_destabilizing(&attacks)?;
            let cert = certify_plant_loop(&plant.nominal, &attacks, &plant.c, &objective, &cfg.params, u_wbar, &cfg.certify)?;
            (LoopModel::Plant { nominal: plant.nominal.clone(), attacks }, cert, Some(eq), Some(dest), vec![])
        }
    };
    warnings.extend(cert.warnings.iter().cloned());

    let eps = match cfg.eps {
        EpsPolicy::Explicit { value } => value,
        EpsPolicy::Certificate { fraction } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(ScenarioError::Config("eps.fraction must lie in (0, 1)".into()));
            }
            fraction * cert.eps_star.ok_or_else(|| ScenarioError::Config("eps policy needs a finite certificate".into()))?
        }
        EpsPolicy::MultipleOfCertificate { factor } => {
            factor * cert.eps_star.ok_or_else(|| ScenarioError::Config("eps policy needs a finite certificate".into()))?
        }
    };
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ScenarioError::Config(format!("resolved eps = {eps} must be positive")));
    }
    let certificate = cert.at_eps(eps);
    if !certificate.xi_pd {
        warnings.push(format!("Xi is not positive definite at eps = {eps:.6e}; monitors are informational"));
    }

    let clock = cfg.attack_clock();
    let rate = match clock {
        AttackClock::Controller => eps,
        AttackClock::Plant => 1.0,
    };
    let ids = model.attack_ids();
    let (schedule, seed) = match &cfg.schedule {
        ScheduleSpec::Explicit { events, horizon } => {
            (AttackSchedule::new(events.clone(), horizon.unwrap_or(cfg.horizon * rate))?, None)
        }
        ScheduleSpec::Generated { seed, options } => {
            let seed = seed_override.unwrap_or(*seed);
            (generate_admissible(seed, &cfg.params, &ids, cfg.horizon * rate, options)?, Some(seed))
        }
    };
    let verdict = check_admissible(&schedule, &cfg.params, &ids);

    let n = plant.nominal.a.nrows();
    let vec_or_zeros = |v: &Option<Vec<f64>>, len: usize, what: &str| -> Result<Vector, ScenarioError> {
        match v {
            None => Ok(Vector::zeros(len)),
            Some(v) if v.len() == len => Ok(Vector::from_column_slice(v)),
            Some(v) => Err(ScenarioError::Config(format!("{what} has length {}, expected {len}", v.len()))),
        }
    };
    let setup = SimSetup {
        model,
        c: plant.c.clone(),
        objective,
        params: cfg.params,
        schedule,
        attack_clock: clock,
        exo: cfg.exo.clone(),
        eps,
        t_end: cfg.horizon,
        dt: cfg.dt,
        x0: vec_or_zeros(&cfg.x0, n, "x0")?,
        u0: vec_or_zeros(&cfg.u0, m, "u0")?,
        record_every: cfg.record_every.max(1),
    };
    Ok(ResolvedScenario {
        name: cfg.name.clone(),
        seed,
        validation: ValidationReport {
            nominal_poles: poles(&plant.nominal.a)?,
            nominal_hurwitz,
            attack_hurwitz,
            equilibrium,
            destabilizing,
            controller_modes,
            schedule: verdict,
        },
        setup,
        certificate,
        warnings,
    })
}
