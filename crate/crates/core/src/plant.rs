//! LTI plant with a static output-feedback inner loop and its attacked variants.

use crate::matrixlab::{self, LinalgError, Mat, Vector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TOL_EQUILIBRIUM: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("mode {mode}: {source}")]
    Mode {
        mode: String,
        #[source]
        source: LinalgError,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `ẋ = Fx + Nv + Bu + Ew`, `y = Cx`, `v = Ky`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub f: Mat,
    pub n: Mat,
    pub b: Mat,
    pub e: Mat,
    pub c: Mat,
    pub k: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantDims {
    pub n: usize,
    pub m: usize,
    pub q: usize,
    pub p: usize,
    pub m_v: usize,
}

impl PlantModel {
    pub fn new(f: Mat, n: Mat, b: Mat, e: Mat, c: Mat, k: Mat) -> Result<Self, PlantError> {
        let dim = f.nrows();
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(PlantError::Dimension(what.to_string()))
            }
        };
        check(f.is_square(), "F must be square")?;
        check(n.nrows() == dim, "N rows must equal state dimension")?;
        check(b.nrows() == dim, "B rows must equal state dimension")?;
        check(e.nrows() == dim, "E rows must equal state dimension")?;
        check(c.ncols() == dim, "C columns must equal state dimension")?;
        check(k.nrows() == n.ncols(), "K rows must equal N columns")?;
        check(k.ncols() == c.nrows(), "K columns must equal C rows")?;
        for mtx in [&f, &n, &b, &e, &c, &k] {
            matrixlab::ensure_finite(mtx)?;
        }
        Ok(Self { f, n, b, e, c, k })
    }

    /// A plant whose state matrix is given directly (no inner loop to attack).
    pub fn direct(a: Mat, b: Mat, e: Mat, c: Mat) -> Result<Self, PlantError> {
        let n = a.nrows();
        let p = c.nrows();
        Self::new(a, Mat::zeros(n, 1), b, e, c, Mat::zeros(1, p))
    }

    pub fn dims(&self) -> PlantDims {
        PlantDims {
            n: self.f.nrows(),
            m: self.b.ncols(),
            q: self.e.ncols(),
            p: self.c.nrows(),
            m_v: self.n.ncols(),
        }
    }

    /// `A = F + NKC`.
    pub fn nominal_a(&self) -> Mat {
        &self.f + &self.n * &self.k * &self.c
    }

    pub fn nominal(&self) -> ModeMatrices {
        ModeMatrices {
            id: crate::attack::NOMINAL.to_string(),
            a: self.nominal_a(),
            b: self.b.clone(),
            e: self.e.clone(),
        }
    }
}

/// Corruption of the inner-loop gain and of the input channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantAttackMode {
    pub id: String,
    pub l_gain: Mat,
    pub l_b: Mat,
    pub l_e: Mat,
}

impl PlantAttackMode {
    pub fn identity(id: &str, plant: &PlantModel) -> Self {
        let d = plant.dims();
        Self {
            id: id.to_string(),
            l_gain: Mat::identity(d.m_v, d.m_v),
            l_b: Mat::identity(d.n, d.n),
            l_e: Mat::identity(d.n, d.n),
        }
    }

    /// Gain attack whose input maps are chosen as `A_σ A⁻¹`, which makes
    /// `A_σ⁻¹B_σ = A⁻¹B` and `A_σ⁻¹E_σ = A⁻¹E` hold exactly.
    pub fn preserving_equilibrium(id: &str, plant: &PlantModel, l_gain: Mat) -> Result<Self, PlantError> {
        let a_sigma = &plant.f + &plant.n * &l_gain * &plant.k * &plant.c;
        let a_inv = matrixlab::inverse(&plant.nominal_a())?;
        let l = &a_sigma * a_inv;
        Ok(Self {
            id: id.to_string(),
            l_gain,
            l_b: l.clone(),
            l_e: l,
        })
    }
}

/// Resolved `(A_σ, B_σ, E_σ)` for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMatrices {
    pub id: String,
    pub a: Mat,
    pub b: Mat,
    pub e: Mat,
}

pub fn closed_loop(plant: &PlantModel, mode: &PlantAttackMode) -> Result<ModeMatrices, PlantError> {
    let d = plant.dims();
    if mode.l_gain.shape() != (d.m_v, d.m_v) || mode.l_b.shape() != (d.n, d.n) || mode.l_e.shape() != (d.n, d.n) {
        return Err(PlantError::Dimension(format!("mode {} maps have wrong shape", mode.id)));
    }
    Ok(ModeMatrices {
        id: mode.id.clone(),
        a: &plant.f + &plant.n * &mode.l_gain * &plant.k * &plant.c,
        b: &mode.l_b * &plant.b,
        e: &mode.l_e * &plant.e,
    })
}

/// `G = −CA⁻¹B`, `H = −CA⁻¹E`.
pub fn steady_state_maps(a: &Mat, b: &Mat, e: &Mat, c: &Mat) -> Result<(Mat, Mat), PlantError> {
    let a_inv_b = matrixlab::solve(a, b)?;
    let a_inv_e = matrixlab::solve(a, e)?;
    Ok((-(c * a_inv_b), -(c * a_inv_e)))
}

/// `x̄ = −A⁻¹(Bu + Ew)`.
pub fn equilibrium_state(a: &Mat, b: &Mat, e: &Mat, u: &Vector, w: &Vector) -> Result<Vector, PlantError> {
    let rhs = b * u + e * w;
    let x = matrixlab::solve(a, &Mat::from_column_slice(rhs.len(), 1, rhs.as_slice()))?;
    Ok(-Vector::from_column_slice(x.as_slice()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumVerdict {
    pub holds: bool,
    pub max_deviation: f64,
    pub worst_mode: Option<String>,
}

/// Checks that every mode shares the nominal equilibrium map. Probes are the
/// zero input, each input and disturbance basis vector, and `samples`.
pub fn check_common_equilibrium(
    nominal: &ModeMatrices,
    modes: &[ModeMatrices],
    samples: &[(Vector, Vector)],
) -> Result<EquilibriumVerdict, PlantError> {
    let m = nominal.b.ncols();
    let q = nominal.e.ncols();
    let mut probes = vec![(Vector::zeros(m), Vector::zeros(q))];
    for i in 0..m {
        let mut u = Vector::zeros(m);
        u[i] = 1.0;
        probes.push((u, Vector::zeros(q)));
    }
    for i in 0..q {
        let mut w = Vector::zeros(q);
        w[i] = 1.0;
        probes.push((Vector::zeros(m), w));
    }
    probes.extend(samples.iter().cloned());

    let eq = |mm: &ModeMatrices, u: &Vector, w: &Vector| {
        equilibrium_state(&mm.a, &mm.b, &mm.e, u, w).map_err(|err| match err {
            PlantError::Linalg(source) => PlantError::Mode { mode: mm.id.clone(), source },
            other => other,
        })
    };
    let mut max_deviation = 0.0f64;
    let mut worst_mode = None;
    for (u, w) in &probes {
        let base = eq(nominal, u, w)?;
        for mode in modes {
            let dev = (eq(mode, u, w)? - &base).amax();
            if dev > max_deviation {
                max_deviation = dev;
                worst_mode = Some(mode.id.clone());
            }
        }
    }
    Ok(EquilibriumVerdict {
        holds: max_deviation <= TOL_EQUILIBRIUM,
        max_deviation,
        worst_mode,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDestabilizing {
    pub id: String,
    pub invertible: bool,
    pub max_real_part: f64,
    pub lambda_max_sym: f64,
    pub destabilizing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DestabilizingReport {
    pub modes: Vec<ModeDestabilizing>,
    /// Max over attack modes of `λ_max(A_σᵀ + A_σ)`; `None` for an empty set.
    pub lambda_bar_rhat: Option<f64>,
    pub all_destabilizing: bool,
}

pub fn check_attack_destabilizing(modes: &[ModeMatrices]) -> Result<DestabilizingReport, PlantError> {
    let mut out = Vec::with_capacity(modes.len());
    for mode in modes {
        let invertible = matrixlab::inverse(&mode.a).is_ok();
        let max_real_part = matrixlab::max_real_part(&mode.a)?;
        let (_, lambda_max_sym) = matrixlab::sym_eig_bounds(&(&mode.a + mode.a.transpose()))?;
        out.push(ModeDestabilizing {
            id: mode.id.clone(),
            invertible,
            max_real_part,
            lambda_max_sym,
            destabilizing: invertible && max_real_part > 0.0 && lambda_max_sym > 0.0,
        });
    }
    let lambda_bar_rhat = out.iter().map(|m| m.lambda_max_sym).reduce(f64::max);
    Ok(DestabilizingReport {
        all_destabilizing: !out.is_empty() && out.iter().all(|m| m.destabilizing),
        modes: out,
        lambda_bar_rhat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixlab::from_rows;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> Mat {
        from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn static_plant() -> PlantModel {
        PlantModel::new(
            m(&[&[1.0, 0.0], &[2.0, -1.5]]),
            m(&[&[1.0], &[1.0]]),
            m(&[&[-1.06], &[-0.62]]),
            m(&[&[-0.82], &[-0.79]]),
            Mat::identity(2, 2) * 0.1,
            m(&[&[-40.0, 5.0]]),
        )
        .unwrap()
    }

    #[test]
    fn nominal_closed_loop() {
        let p = static_plant();
        let a = closed_loop(&p, &PlantAttackMode::identity("s", &p)).unwrap().a;
        assert_abs_diff_eq!(a, m(&[&[-3.0, 0.5], &[-2.0, -1.0]]), epsilon = 1e-14);
    }

    #[test]
    fn zero_gain_mode_is_open_loop() {
        let p = static_plant();
        let mut mode = PlantAttackMode::identity("a1", &p);
        mode.l_gain = Mat::zeros(1, 1);
        assert_eq!(closed_loop(&p, &mode).unwrap().a, p.f);
    }

    #[test]
    fn gain_minus_tenth() {
        let p = static_plant();
        let mut mode = PlantAttackMode::identity("a2", &p);
        mode.l_gain = Mat::from_element(1, 1, -0.1);
        let a = closed_loop(&p, &mode).unwrap().a;
        assert_abs_diff_eq!(a, m(&[&[1.4, -0.05], &[2.4, -1.55]]), epsilon = 1e-14);
    }

    #[test]
    fn dynamic_steady_state_map() {
        let a = m(&[&[-3.0, 0.5], &[-2.0, -1.0]]);
        let b = m(&[&[1.0], &[1.0]]);
        let (g, h) = steady_state_maps(&a, &b, &Mat::zeros(2, 1), &Mat::identity(2, 2)).unwrap();
        // A⁻¹ = ¼[[−1,−0.5],[2,−3]]  ⇒  −A⁻¹B = [0.375, 0.25]
        assert_abs_diff_eq!(g, m(&[&[0.375], &[0.25]]), epsilon = 1e-15);
        assert_eq!(h, Mat::zeros(2, 1));
        let x = equilibrium_state(&a, &b, &b, &Vector::from_vec(vec![1.0]), &Vector::from_vec(vec![0.0])).unwrap();
        assert_abs_diff_eq!(x, Vector::from_vec(vec![0.375, 0.25]), epsilon = 1e-15);
    }

    #[test]
    fn negative_identity_maps() {
        let b = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let c = m(&[&[0.5, -1.0]]);
        let (g, _) = steady_state_maps(&(-Mat::identity(2, 2)), &b, &b, &c).unwrap();
        assert_abs_diff_eq!(g, &c * &b, epsilon = 1e-15);
    }

    #[test]
    fn constructive_modes_share_equilibrium() {
        let p = static_plant();
        let a1 = PlantAttackMode::preserving_equilibrium("a1", &p, Mat::zeros(1, 1)).unwrap();
        let a2 = PlantAttackMode::preserving_equilibrium("a2", &p, Mat::from_element(1, 1, -0.1)).unwrap();
        let modes = vec![closed_loop(&p, &a1).unwrap(), closed_loop(&p, &a2).unwrap()];
        let v = check_common_equilibrium(&p.nominal(), &modes, &[]).unwrap();
        assert!(v.holds, "{v:?}");
        // printed B_{a1} ≈ [0.34; 0.78] is the rounded constructive value
        assert_abs_diff_eq!(modes[0].b, m(&[&[0.3425], &[0.7825]]), epsilon = 1e-12);
    }

    #[test]
    fn scaled_modes_share_equilibrium() {
        let p = static_plant();
        let nominal = p.nominal();
        let scaled = ModeMatrices {
            id: "x".into(),
            a: &nominal.a * 3.0,
            b: &nominal.b * 3.0,
            e: &nominal.e * 3.0,
        };
        assert!(check_common_equilibrium(&nominal, &[scaled], &[]).unwrap().holds);
        assert!(check_common_equilibrium(&nominal, &[], &[]).unwrap().holds);
    }

    #[test]
    fn destabilizing_examples() {
        let a1 = ModeMatrices {
            id: "a1".into(),
            a: m(&[&[1.0, 0.0], &[2.0, -1.5]]),
            b: Mat::zeros(2, 1),
            e: Mat::zeros(2, 1),
        };
        let r = check_attack_destabilizing(&[a1]).unwrap();
        assert!(r.all_destabilizing);
        assert_abs_diff_eq!(r.lambda_bar_rhat.unwrap(), (-1.0 + 41f64.sqrt()) / 2.0, epsilon = 1e-12);
        let stable = ModeMatrices {
            id: "s".into(),
            a: -Mat::identity(2, 2),
            b: Mat::zeros(2, 1),
            e: Mat::zeros(2, 1),
        };
        assert!(!check_attack_destabilizing(&[stable]).unwrap().all_destabilizing);
        let empty = check_attack_destabilizing(&[]).unwrap();
        assert_eq!(empty.lambda_bar_rhat, None);
    }
}
