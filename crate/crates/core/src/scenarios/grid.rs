//! Linearized swing-equation grid with the average phase mode removed.

use super::ScenarioError;
use crate::matrixlab::{self, Mat, Vector};
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

/// Row-sum tolerance on the susceptance matrix.
pub const TOL_ROW_SUM: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwingGridSpec {
    /// Susceptance (weighted Laplacian), symmetric with zero row sums.
    pub y_mat: Vec<Vec<f64>>,
    /// Inertia diagonal.
    pub m: Vec<f64>,
    /// Damping diagonal.
    pub d: Vec<f64>,
    /// Generator selector, `n₁ × m`.
    pub b1: Vec<Vec<f64>>,
    /// Load selector, `n₁ × q`.
    pub e1: Vec<Vec<f64>>,
}

/// Reduced model `(A, B, E, C)` of dimension `2n₁ − 1` plus the pieces used
/// to build it.
#[derive(Debug, Clone)]
pub struct SwingModel {
    pub a: Mat,
    pub b: Mat,
    pub e: Mat,
    pub c: Mat,
    pub a_full: Mat,
    pub c_full: Mat,
    /// Orthonormal basis of `𝟙^⊥` built from eigenvectors of `Y`.
    pub u_basis: Mat,
    pub t_mat: Mat,
}

/// Copies the off-diagonal entries and recomputes each diagonal entry as the
/// negated sum of its row, so the row sums vanish to round-off.
pub fn rebuild_laplacian_diagonal(y: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = y.to_vec();
    for (i, row) in out.iter_mut().enumerate() {
        let off: f64 = row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).sum();
        row[i] = -off;
    }
    out
}

fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&Vector::from_column_slice(v))
}

/// `U`: eigenvectors of `Y` for its `n₁ − 1` nonzero eigenvalues, ordered by
/// eigenvalue, each signed so its largest-magnitude entry is positive.
fn average_free_basis(y: &Mat) -> Result<Mat, ScenarioError> {
    let n = y.nrows();
    let eig = SymmetricEigen::new(y.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].abs().total_cmp(&eig.eigenvalues[j].abs()));
    let scale = eig.eigenvalues.amax().max(1.0);
    if n >= 2 && eig.eigenvalues[order[1]].abs() <= 1e-9 * scale {
        return Err(ScenarioError::AverageModeNotIsolated);
    }
    let mut keep: Vec<usize> = order[1..].to_vec();
    keep.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut u = Mat::zeros(n, n - 1);
    for (col, &k) in keep.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v = -v;
        }
        u.set_column(col, &v);
    }
    Ok(u)
}

fn check_spec(spec: &SwingGridSpec) -> Result<(Mat, Mat, Mat), ScenarioError> {
    let y = matrixlab::from_rows(&spec.y_mat)?;
    let n = y.nrows();
    if y.ncols() != n || spec.m.len() != n || spec.d.len() != n {
        return Err(ScenarioError::Config("swing grid: Y, m and d sizes disagree".into()));
    }
    if (&y - y.transpose()).amax() > TOL_ROW_SUM {
        return Err(ScenarioError::Config("swing grid: Y is not symmetric".into()));
    }
    let worst = y.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max);
    if worst > TOL_ROW_SUM {
        return Err(ScenarioError::ZeroRowSumViolated { worst });
    }
    let b1 = matrixlab::from_rows(&spec.b1)?;
    let e1 = matrixlab::from_rows(&spec.e1)?;
    if b1.nrows() != n || e1.nrows() != n {
        return Err(ScenarioError::Config("swing grid: B1/E1 need one row per node".into()));
    }
    Ok((y, b1, e1))
}

fn full_state_matrix(y: &Mat, m: &[f64], d: &[f64]) -> Result<Mat, ScenarioError> {
    let n = y.nrows();
    if m.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(ScenarioError::Config("swing grid: inertia entries must be finite and nonzero".into()));
    }
    let m_inv = diag(&m.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
    let mut a = Mat::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).copy_from(&Mat::identity(n, n));
    a.view_mut((n, 0), (n, n)).copy_from(&(-(&m_inv * y)));
    a.view_mut((n, n), (n, n)).copy_from(&(-(&m_inv * diag(d))));
    Ok(a)
}

/// Assembles the full swing model, removes the average phase mode with
/// `T = blkdiag(U, I)` and returns `(TᵀĀT, TᵀB̄, TᵀĒ, C̄T)`.
pub fn build_swing_model(spec: &SwingGridSpec) -> Result<SwingModel, ScenarioError> {
    let (y, b1, e1) = check_spec(spec)?;
    if spec.m.iter().chain(&spec.d).any(|v| !(*v > 0.0)) {
        return Err(ScenarioError::Config("swing grid: m and d must be entrywise positive".into()));
    }
    let model = assemble(&y, &b1, &e1, &spec.m, &spec.d)?;
    let hw = matrixlab::is_hurwitz(&model.a)?;
    if !hw.hurwitz {
        return Err(ScenarioError::Config(format!(
            "reduced swing model is not Hurwitz (max real part {})",
            hw.max_real_part
        )));
    }
    Ok(model)
}

/// Reduced state matrix for a modified inertia diagonal (physical-parameter
/// attack). Positivity and stability are deliberately not enforced.
pub fn inertia_mode_matrix(spec: &SwingGridSpec, m_diag: &[f64]) -> Result<Mat, ScenarioError> {
    let (y, b1, e1) = check_spec(spec)?;
    if m_diag.len() != spec.m.len() {
        return Err(ScenarioError::Config("inertia attack: m_diag has the wrong length".into()));
    }
    Ok(assemble(&y, &b1, &e1, m_diag, &spec.d)?.a)
}

fn assemble(y: &Mat, b1: &Mat, e1: &Mat, m: &[f64], d: &[f64]) -> Result<SwingModel, ScenarioError> {
    let n = y.nrows();
    let a_full = full_state_matrix(y, m, d)?;
    let mut b_full = Mat::zeros(2 * n, b1.ncols());
    b_full.view_mut((n, 0), (n, b1.ncols())).copy_from(b1);
    let mut e_full = Mat::zeros(2 * n, e1.ncols());
    e_full.view_mut((n, 0), (n, e1.ncols())).copy_from(e1);
    let mut c_full = Mat::zeros(n + 1, 2 * n);
    c_full.view_mut((0, 0), (n, n)).copy_from(y);
    c_full.view_mut((n, n), (1, n)).fill(1.0 / n as f64);

    let u_basis = average_free_basis(y)?;
    let mut t_mat = Mat::zeros(2 * n, 2 * n - 1);
    t_mat.view_mut((0, 0), (n, n - 1)).copy_from(&u_basis);
    t_mat.view_mut((n, n - 1), (n, n)).copy_from(&Mat::identity(n, n));
    let tt = t_mat.transpose();
    Ok(SwingModel {
        a: &tt * &a_full * &t_mat,
        b: &tt * &b_full,
        e: &tt * &e_full,
        c: &c_full * &t_mat,
        a_full,
        c_full,
        u_basis,
        t_mat,
    })
}
