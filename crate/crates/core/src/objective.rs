//! Steady-state objective `f(u,w) = f_u(u) + f_y(Gu + Hw)`, gradients,
//! PL/Lipschitz constants and the optimizer map `w ↦ u*_w`.

use crate::matrixlab::{self, LinalgError, Mat, Vector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GRAD_TOL: f64 = 1e-10;
const MAX_DESCENT_ITERS: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("input weight R must be positive definite (lambda_min {0})")]
    WeightNotPd(f64),
    #[error("box bounds must satisfy lo < hi componentwise")]
    BadBox,
    #[error("optimal-input descent did not reach tolerance in {iters} iterations (grad norm {grad_norm:e})")]
    MaxIter { iters: usize, grad_norm: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutputCost {
    /// `(y − y_ref)ᵀ Q (y − y_ref)`
    Quadratic { q: Mat, y_ref: Vector },
    /// `η Σ max{lo_i − y_i, y_i − hi_i, 0}²`
    SoftBox { eta: f64, lo: Vector, hi: Vector },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConstants {
    pub mu: f64,
    pub ell: f64,
    pub ell_u: f64,
    pub ell_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub r: Mat,
    pub output: OutputCost,
    pub g: Mat,
    pub h: Mat,
}

impl Objective {
    pub fn new(r: Mat, output: OutputCost, g: Mat, h: Mat) -> Result<Self, ObjectiveError> {
        let m = g.ncols();
        let p = g.nrows();
        if r.shape() != (m, m) {
            return Err(ObjectiveError::Dimension(format!("R must be {m}x{m}")));
        }
        if h.nrows() != p {
            return Err(ObjectiveError::Dimension("H rows must equal G rows".into()));
        }
        let (rmin, _) = matrixlab::sym_eig_bounds(&r)?;
        if rmin <= 0.0 {
            return Err(ObjectiveError::WeightNotPd(rmin));
        }
        match &output {
            OutputCost::Quadratic { q, y_ref } => {
                if q.shape() != (p, p) || y_ref.len() != p {
                    return Err(ObjectiveError::Dimension(format!("Q must be {p}x{p} and y_ref length {p}")));
                }
            }
            OutputCost::SoftBox { eta, lo, hi } => {
                if lo.len() != p || hi.len() != p {
                    return Err(ObjectiveError::Dimension(format!("box bounds must have length {p}")));
                }
                if lo.iter().zip(hi.iter()).any(|(l, h)| l >= h) || *eta <= 0.0 {
                    return Err(ObjectiveError::BadBox);
                }
            }
        }
        Ok(Self { r, output, g, h })
    }

    pub fn input_dim(&self) -> usize {
        self.g.ncols()
    }

    pub fn disturbance_dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn output_of(&self, u: &Vector, w: &Vector) -> Vector {
        &self.g * u + &self.h * w
    }

    pub fn fu(&self, u: &Vector) -> f64 {
        u.dot(&(&self.r * u))
    }

    pub fn grad_fu(&self, u: &Vector) -> Vector {
        (&self.r + self.r.transpose()) * u
    }

    pub fn fy(&self, y: &Vector) -> f64 {
        match &self.output {
            OutputCost::Quadratic { q, y_ref } => {
                let d = y - y_ref;
                d.dot(&(q * &d))
            }
            OutputCost::SoftBox { eta, lo, hi } => {
                eta * (0..y.len())
                    .map(|i| (lo[i] - y[i]).max(y[i] - hi[i]).max(0.0).powi(2))
                    .sum::<f64>()
            }
        }
    }

    pub fn grad_fy(&self, y: &Vector) -> Vector {
        match &self.output {
            OutputCost::Quadratic { q, y_ref } => (q + q.transpose()) * (y - y_ref),
            OutputCost::SoftBox { eta, lo, hi } => Vector::from_fn(y.len(), |i, _| {
                if y[i] > hi[i] {
                    2.0 * eta * (y[i] - hi[i])
                } else if y[i] < lo[i] {
                    2.0 * eta * (y[i] - lo[i])
                } else {
                    0.0
                }
            }),
        }
    }

    pub fn value(&self, u: &Vector, w: &Vector) -> f64 {
        self.fu(u) + self.fy(&self.output_of(u, w))
    }

    pub fn grad_f(&self, u: &Vector, w: &Vector) -> Vector {
        self.grad_fu(u) + self.g.transpose() * self.grad_fy(&self.output_of(u, w))
    }

    /// Controller vector field evaluated at a measured output, `∇f_u(u) + Gᵀ∇f_y(y)`.
    pub fn grad_from_output(&self, u: &Vector, y: &Vector) -> Vector {
        self.grad_fu(u) + self.g.transpose() * self.grad_fy(y)
    }

    fn normal_matrix(&self, q: &Mat) -> Mat {
        &self.r + self.g.transpose() * q * &self.g
    }

    pub fn constants(&self) -> Result<CostConstants, ObjectiveError> {
        let (_, r_max) = matrixlab::sym_eig_bounds(&self.r)?;
        let ell_u = 2.0 * r_max;
        match &self.output {
            OutputCost::Quadratic { q, .. } => {
                let hess = self.normal_matrix(q) * 2.0;
                let (mu, ell) = matrixlab::sym_eig_bounds(&hess)?;
                let (_, q_max) = matrixlab::sym_eig_bounds(q)?;
                Ok(CostConstants {
                    mu,
                    ell,
                    ell_u,
                    ell_y: 2.0 * q_max,
                })
            }
            OutputCost::SoftBox { eta, .. } => {
                let ell_y = 2.0 * eta;
                let (r_min, _) = matrixlab::sym_eig_bounds(&self.r)?;
                Ok(CostConstants {
                    mu: 2.0 * r_min,
                    ell: ell_u + ell_y * matrixlab::spectral_norm(&self.g).powi(2),
                    ell_u,
                    ell_y,
                })
            }
        }
    }

    pub fn optimal_input(&self, w: &Vector) -> Result<Vector, ObjectiveError> {
        self.optimal_input_from(w, None)
    }

    /// Like [`Objective::optimal_input`] but the descent oracle starts from `warm`.
    pub fn optimal_input_from(&self, w: &Vector, warm: Option<&Vector>) -> Result<Vector, ObjectiveError> {
        match &self.output {
            OutputCost::Quadratic { q, y_ref } => {
                let rhs = self.g.transpose() * q * (y_ref - &self.h * w);
                let sol = matrixlab::solve(&self.normal_matrix(q), &Mat::from_column_slice(rhs.len(), 1, rhs.as_slice()))?;
                Ok(Vector::from_column_slice(sol.as_slice()))
            }
            OutputCost::SoftBox { .. } => {
                let step = 1.0 / self.constants()?.ell;
                let mut u = warm.cloned().unwrap_or_else(|| Vector::zeros(self.input_dim()));
                for _ in 0..MAX_DESCENT_ITERS {
                    let g = self.grad_f(&u, w);
                    if g.norm() <= GRAD_TOL {
                        return Ok(u);
                    }
                    u -= g * step;
                }
                Err(ObjectiveError::MaxIter {
                    iters: MAX_DESCENT_ITERS,
                    grad_norm: self.grad_f(&u, w).norm(),
                })
            }
        }
    }

    /// `f(u,w) − f(u*_w,w)`; exact quadratic form in the quadratic case so the
    /// value does not lose digits to cancellation near the optimum.
    pub fn suboptimality(&self, u: &Vector, w: &Vector, u_star: &Vector) -> f64 {
        match &self.output {
            OutputCost::Quadratic { q, .. } => {
                let d = u - u_star;
                d.dot(&(self.normal_matrix(q) * &d))
            }
            OutputCost::SoftBox { .. } => (self.value(u, w) - self.value(u_star, w)).max(0.0),
        }
    }

    /// Bound on `‖∇_w h(w)‖` over the supplied disturbance samples.
    pub fn optimal_sensitivity_bound(&self, w_samples: &[Vector]) -> Result<f64, ObjectiveError> {
        match &self.output {
            OutputCost::Quadratic { q, .. } => {
                let rhs = self.g.transpose() * q * &self.h;
                Ok(matrixlab::spectral_norm(&matrixlab::solve(&self.normal_matrix(q), &rhs)?))
            }
            OutputCost::SoftBox { .. } => {
                let qd = self.disturbance_dim();
                let mut worst = 0.0f64;
                for w in w_samples {
                    let h_fd = 1e-6 * (1.0 + w.norm());
                    let base = self.optimal_input(w)?;
                    let mut jac = Mat::zeros(self.input_dim(), qd);
                    for k in 0..qd {
                        let mut wp = w.clone();
                        let mut wm = w.clone();
                        wp[k] += h_fd;
                        wm[k] -= h_fd;
                        let up = self.optimal_input_from(&wp, Some(&base))?;
                        let um = self.optimal_input_from(&wm, Some(&base))?;
                        jac.set_column(k, &((up - um) / (2.0 * h_fd)));
                    }
                    worst = worst.max(matrixlab::spectral_norm(&jac));
                }
                Ok(1.1 * worst)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixlab::from_rows;
    use approx::assert_abs_diff_eq;

    fn v(x: &[f64]) -> Vector {
        Vector::from_vec(x.to_vec())
    }

    fn diag(x: &[f64]) -> Mat {
        Mat::from_diagonal(&v(x))
    }

    fn static_objective() -> Objective {
        Objective::new(
            Mat::from_element(1, 1, 2.0),
            OutputCost::Quadratic { q: diag(&[1.0, 2.0]), y_ref: v(&[0.0, 0.0]) },
            from_rows(&[vec![-0.03425], vec![0.0065]]).unwrap(),
            from_rows(&[vec![-0.030375], vec![-0.01825]]).unwrap(),
        )
        .unwrap()
    }

    fn box_objective(half_width: f64) -> Objective {
        Objective::new(
            Mat::identity(2, 2),
            OutputCost::SoftBox { eta: 10.0, lo: v(&[-half_width; 2]), hi: v(&[half_width; 2]) },
            from_rows(&[vec![1.0, 0.5], vec![-0.3, 2.0]]).unwrap(),
            from_rows(&[vec![1.0], vec![1.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn grad_fy_examples() {
        let o = Objective::new(
            Mat::identity(2, 2),
            OutputCost::Quadratic { q: diag(&[1.0, 2.0]), y_ref: v(&[0.0, 0.0]) },
            Mat::identity(2, 2),
            Mat::zeros(2, 1),
        )
        .unwrap();
        assert_eq!(o.grad_fy(&v(&[1.0, 1.0])), v(&[2.0, 4.0]));
        let b = box_objective(5.0);
        assert_eq!(b.grad_fy(&v(&[1.0, -4.0])), v(&[0.0, 0.0]));
        let g = b.grad_fy(&v(&[6.0, 0.0]));
        assert_abs_diff_eq!(g[0], 20.0, epsilon = 1e-12);
        let h = 1e-6;
        let fd = (b.fy(&v(&[6.0 + h, 0.0])) - b.fy(&v(&[6.0 - h, 0.0]))) / (2.0 * h);
        assert_abs_diff_eq!(fd, 20.0, epsilon = 1e-6);
    }

    #[test]
    fn grad_f_at_zero_with_reference() {
        let o = Objective::new(
            Mat::identity(1, 1),
            OutputCost::Quadratic { q: diag(&[1.0, 2.0]), y_ref: v(&[1.0, -1.0]) },
            from_rows(&[vec![0.375], vec![0.25]]).unwrap(),
            Mat::zeros(2, 1),
        )
        .unwrap();
        let g = o.grad_f(&v(&[0.0]), &v(&[0.0]));
        // −2Gᵀ Q y_ref = −2(0.375·1 + 0.25·2·(−1)) = 0.25
        assert_abs_diff_eq!(g[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn inside_box_only_input_cost() {
        let o = box_objective(100.0);
        let u = v(&[0.3, -0.2]);
        assert_abs_diff_eq!(o.grad_f(&u, &v(&[0.1])), &u * 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(o.optimal_input(&v(&[0.5])).unwrap(), v(&[0.0, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn static_constants_closed_form() {
        let o = static_objective();
        let c = o.constants().unwrap();
        let gqg = 0.03425f64.powi(2) + 2.0 * 0.0065f64.powi(2);
        assert_abs_diff_eq!(c.mu, 2.0 * (2.0 + gqg), epsilon = 1e-14);
        assert_abs_diff_eq!(c.ell, c.mu, epsilon = 1e-14);
        assert_eq!(c.ell_u, 4.0);
        assert_eq!(c.ell_y, 4.0);
    }

    #[test]
    fn zero_q_constants() {
        let o = Objective::new(
            Mat::from_element(1, 1, 3.0),
            OutputCost::Quadratic { q: Mat::zeros(2, 2), y_ref: v(&[1.0, 1.0]) },
            from_rows(&[vec![1.0], vec![2.0]]).unwrap(),
            Mat::zeros(2, 1),
        )
        .unwrap();
        let c = o.constants().unwrap();
        assert_eq!((c.mu, c.ell), (6.0, 6.0));
        assert_eq!(o.optimal_sensitivity_bound(&[]).unwrap(), 0.0);
    }

    #[test]
    fn soft_box_lipschitz() {
        let o = box_objective(5.0);
        let c = o.constants().unwrap();
        let gn = matrixlab::spectral_norm(&o.g);
        assert_abs_diff_eq!(c.ell, 2.0 + 20.0 * gn * gn, epsilon = 1e-12);
        assert_eq!(c.mu, 2.0);
    }

    #[test]
    fn optimal_input_closed_form_matches_descent() {
        let o = static_objective();
        let w = v(&[0.96]);
        let closed = o.optimal_input(&w).unwrap();
        // plain gradient descent oracle, independent of the crate's soft-box path
        let step = 1.0 / o.constants().unwrap().ell;
        let mut u = v(&[0.0]);
        for _ in 0..10_000 {
            u -= o.grad_f(&u, &w) * step;
        }
        assert_abs_diff_eq!(closed, u, epsilon = 1e-8);
        assert!(o.grad_f(&closed, &w).norm() < 1e-12);
    }

    #[test]
    fn optimal_input_zero_when_target_met() {
        let mut o = static_objective();
        let w = v(&[2.0]);
        o.output = OutputCost::Quadratic { q: diag(&[1.0, 2.0]), y_ref: &o.h * &w };
        assert_abs_diff_eq!(o.optimal_input(&w).unwrap(), v(&[0.0]), epsilon = 1e-15);
    }

    #[test]
    fn sensitivity_closed_form_matches_fd() {
        let o = static_objective();
        let exact = o.optimal_sensitivity_bound(&[]).unwrap();
        let w = v(&[0.96]);
        let h = 1e-6 * (1.0 + w.norm());
        let up = o.optimal_input(&v(&[0.96 + h])).unwrap();
        let um = o.optimal_input(&v(&[0.96 - h])).unwrap();
        let fd = ((up - um) / (2.0 * h)).norm();
        assert_abs_diff_eq!(exact, fd, epsilon = 1e-6);
        let mut no_h = o.clone();
        no_h.h = Mat::zeros(2, 1);
        assert_eq!(no_h.optimal_sensitivity_bound(&[]).unwrap(), 0.0);
    }

    #[test]
    fn soft_box_descent_reaches_stationarity() {
        let o = box_objective(0.5);
        let w = v(&[3.0]);
        let u = o.optimal_input(&w).unwrap();
        assert!(o.grad_f(&u, &w).norm() <= GRAD_TOL);
        assert!(o.output_of(&u, &w).amax() > 0.5, "box should bind for this w");
        let bound = o.optimal_sensitivity_bound(&[w, v(&[-3.0])]).unwrap();
        assert!(bound > 0.0 && bound.is_finite());
    }
}
