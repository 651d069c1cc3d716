//! Dense linear-algebra primitives shared by the rest of the crate.
//!
//! Everything here is a thin layer over `nalgebra`. The only bespoke pieces
//! are the Kronecker-vectorized Lyapunov solve and a closed-form 2×2
//! eigenvalue path, which keeps repeated real eigenvalues exact where a QR
//! sweep would split them by ~1e-8.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub const TOL_HURWITZ: f64 = 1e-9;
const TOL_SYMMETRY: f64 = 1e-10;
const TOL_PIVOT: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hurwitz (max real part {max_real_part})")]
    NotHurwitz { max_real_part: f64 },
    #[error("singular linear system")]
    Singular,
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entries")]
    NonFinite,
    #[error("matrix is not symmetric positive definite (lambda_min {lambda_min})")]
    NotPositiveDefinite { lambda_min: f64 },
}

/// Builds a matrix from row-major nested rows. Ragged input is an error.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat, LinalgError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(LinalgError::DimensionMismatch("ragged rows".into()));
    }
    let m = Mat::from_fn(r, c, |i, j| rows[i][j]);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn ensure_finite(m: &Mat) -> Result<(), LinalgError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

fn ensure_square(m: &Mat) -> Result<usize, LinalgError> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// Solves `a x = b` by partial-pivot LU, rejecting numerically singular `a`.
pub fn solve(a: &Mat, b: &Mat) -> Result<Mat, LinalgError> {
    let n = ensure_square(a)?;
    if b.nrows() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "solve: lhs {n}x{n}, rhs has {} rows",
            b.nrows()
        )));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if (0..n).any(|i| u[(i, i)].abs() <= TOL_PIVOT * scale) {
        return Err(LinalgError::Singular);
    }
    let x = lu.solve(b).ok_or(LinalgError::Singular)?;
    ensure_finite(&x).map_err(|_| LinalgError::Singular)?;
    Ok(x)
}

pub fn inverse(a: &Mat) -> Result<Mat, LinalgError> {
    let n = ensure_square(a)?;
    solve(a, &Mat::identity(n, n))
}

pub fn symmetrize(s: &Mat) -> Mat {
    (s + s.transpose()) * 0.5
}

/// Eigenvalues of a general square matrix.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex64>, LinalgError> {
    let n = ensure_square(a)?;
    ensure_finite(a)?;
    match n {
        0 => Ok(vec![]),
        1 => Ok(vec![Complex64::new(a[(0, 0)], 0.0)]),
        2 => {
            let tr = a[(0, 0)] + a[(1, 1)];
            let half = 0.5 * tr;
            // discriminant written as a difference of the diagonal to avoid cancellation
            let d = 0.25 * (a[(0, 0)] - a[(1, 1)]).powi(2) + a[(0, 1)] * a[(1, 0)];
            if d >= 0.0 {
                let s = d.sqrt();
                Ok(vec![Complex64::new(half + s, 0.0), Complex64::new(half - s, 0.0)])
            } else {
                let s = (-d).sqrt();
                Ok(vec![Complex64::new(half, s), Complex64::new(half, -s)])
            }
        }
        _ => Ok(a.clone().complex_eigenvalues().iter().copied().collect()),
    }
}

pub fn max_real_part(a: &Mat) -> Result<f64, LinalgError> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HurwitzVerdict {
    pub hurwitz: bool,
    pub max_real_part: f64,
}

pub fn is_hurwitz(a: &Mat) -> Result<HurwitzVerdict, LinalgError> {
    is_hurwitz_tol(a, TOL_HURWITZ)
}

pub fn is_hurwitz_tol(a: &Mat, tol: f64) -> Result<HurwitzVerdict, LinalgError> {
    let max_real_part = max_real_part(a)?;
    Ok(HurwitzVerdict {
        hurwitz: max_real_part < -tol,
        max_real_part,
    })
}

/// Extreme eigenvalues of a (nearly) symmetric matrix.
pub fn sym_eig_bounds(s: &Mat) -> Result<(f64, f64), LinalgError> {
    let n = ensure_square(s)?;
    ensure_finite(s)?;
    if n == 0 {
        return Err(LinalgError::DimensionMismatch("empty matrix".into()));
    }
    let asym = (s - s.transpose()).amax();
    if asym > TOL_SYMMETRY * (1.0 + s.amax()) {
        log::debug!("sym_eig_bounds: symmetrizing input with asymmetry {asym:e}");
    }
    let sym = symmetrize(s);
    if n == 2 {
        let half = 0.5 * (sym[(0, 0)] + sym[(1, 1)]);
        let rad = (0.25 * (sym[(0, 0)] - sym[(1, 1)]).powi(2) + sym[(0, 1)].powi(2)).sqrt();
        return Ok((half - rad, half + rad));
    }
    let ev = sym.symmetric_eigenvalues();
    Ok((ev.min(), ev.max()))
}

pub fn spectral_norm(a: &Mat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if a.ncols() == 1 || a.nrows() == 1 {
        return a.norm();
    }
    a.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Solves `aᵀP + Pa = −r` through the vectorized system
/// `(I⊗aᵀ + aᵀ⊗I) vec(P) = −vec(r)`.
pub fn solve_lyapunov(a: &Mat, r: &Mat) -> Result<Mat, LinalgError> {
    let n = ensure_square(a)?;
    if r.shape() != (n, n) {
        return Err(LinalgError::DimensionMismatch(format!(
            "lyapunov: a is {n}x{n}, r is {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    let verdict = is_hurwitz(a)?;
    if !verdict.hurwitz {
        return Err(LinalgError::NotHurwitz {
            max_real_part: verdict.max_real_part,
        });
    }
    let (r_min, _) = sym_eig_bounds(r)?;
    if r_min <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite { lambda_min: r_min });
    }
    let eye = Mat::identity(n, n);
    let at = a.transpose();
    let k = kron(&eye, &at) + kron(&at, &eye);
    let rhs = -Mat::from_column_slice(n * n, 1, symmetrize(r).as_slice());
    let vec_p = solve(&k, &rhs)?;
    let p = symmetrize(&Mat::from_column_slice(n, n, vec_p.as_slice()));
    Ok(p)
}

pub fn lyapunov_residual(a: &Mat, p: &Mat, r: &Mat) -> f64 {
    (a.transpose() * p + p * a + r).amax()
}
