use crate::matrixlab::Vector;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Disturbance generator, evaluated as an explicit function of plant time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Exosystem {
    Constant { w0: Vec<f64> },
    /// `ẇ = a sin(ωt)` from `w(0) = w0`, i.e. `w = w0 + (a/ω)(1 − cos ωt)`.
    SineRate { w0: Vec<f64>, a: Vec<f64>, omega: f64 },
    /// Each piece runs on its own local clock starting at `start`.
    Piecewise { pieces: Vec<ExoPiece> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExoPiece {
    pub start: f64,
    pub exo: Exosystem,
}

impl Exosystem {
    pub fn validate(&self) -> Result<usize, SimError> {
        let bad = |m: &str| Err(SimError::BadExosystem(m.to_string()));
        match self {
            Exosystem::Constant { w0 } => {
                if w0.iter().any(|v| !v.is_finite()) {
                    return bad("non-finite w0");
                }
                Ok(w0.len())
            }
            Exosystem::SineRate { w0, a, omega } => {
                if w0.len() != a.len() {
                    return bad("w0 and a differ in length");
                }
                if !(omega.is_finite() && *omega > 0.0) || w0.iter().chain(a).any(|v| !v.is_finite()) {
                    return bad("sine_rate needs finite entries and omega > 0");
                }
                Ok(w0.len())
            }
            Exosystem::Piecewise { pieces } => {
                if pieces.is_empty() || pieces[0].start != 0.0 {
                    return bad("piecewise needs a first piece at t = 0");
                }
                if pieces.windows(2).any(|p| !(p[1].start > p[0].start)) {
                    return bad("piece starts must strictly increase");
                }
                let mut dim = None;
                for p in pieces {
                    if matches!(p.exo, Exosystem::Piecewise { .. }) {
                        return bad("nested piecewise");
                    }
                    let d = p.exo.validate()?;
                    if dim.is_some_and(|x| x != d) {
                        return bad("pieces differ in dimension");
                    }
                    dim = Some(d);
                }
                Ok(dim.unwrap_or(0))
            }
        }
    }

    /// Active piece at `t`; with `left` a piece boundary belongs to the earlier piece.
    fn piece_at(&self, t: f64, left: bool) -> (&Exosystem, f64) {
        match self {
            Exosystem::Piecewise { pieces } => {
                let n = if left {
                    pieces.partition_point(|p| p.start < t)
                } else {
                    pieces.partition_point(|p| p.start <= t)
                };
                let idx = n.max(1) - 1;
                (&pieces[idx].exo, t - pieces[idx].start)
            }
            other => (other, t),
        }
    }

    pub fn w(&self, t: f64) -> Vector {
        self.w_side(t, false)
    }

    /// Left limit `w(t⁻)`, used when integrating up to a piece boundary.
    pub fn w_left(&self, t: f64) -> Vector {
        self.w_side(t, true)
    }

    fn w_side(&self, t: f64, left: bool) -> Vector {
        match self.piece_at(t, left) {
            (Exosystem::Constant { w0 }, _) => Vector::from_column_slice(w0),
            (Exosystem::SineRate { w0, a, omega }, s) => {
                let c = (1.0 - (omega * s).cos()) / omega;
                Vector::from_iterator(w0.len(), w0.iter().zip(a).map(|(w, a)| w + a * c))
            }
            (Exosystem::Piecewise { .. }, _) => unreachable!("validated: no nesting"),
        }
    }

    pub fn w_dot(&self, t: f64) -> Vector {
        match self.piece_at(t, false) {
            (Exosystem::Constant { w0 }, _) => Vector::zeros(w0.len()),
            (Exosystem::SineRate { a, omega, .. }, s) => {
                let sn = (omega * s).sin();
                Vector::from_iterator(a.len(), a.iter().map(|a| a * sn))
            }
            (Exosystem::Piecewise { .. }, _) => unreachable!("validated: no nesting"),
        }
    }

    /// Times in `(0, t_end)` where `w` may be discontinuous.
    pub fn breakpoints(&self, t_end: f64) -> Vec<f64> {
        match self {
            Exosystem::Piecewise { pieces } => pieces.iter().map(|p| p.start).filter(|&s| s > 0.0 && s < t_end).collect(),
            _ => vec![],
        }
    }

    /// `sup_t ‖ẇ(t)‖` over `[0, t_end]`.
    pub fn sup_rate(&self, t_end: f64) -> f64 {
        match self {
            Exosystem::Constant { .. } => 0.0,
            Exosystem::SineRate { a, .. } => a.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Exosystem::Piecewise { pieces } => pieces
                .iter()
                .filter(|p| p.start < t_end || p.start == 0.0)
                .map(|p| p.exo.sup_rate(t_end))
                .fold(0.0, f64::max),
        }
    }

    /// `sup ‖ẇ‖` over every piece already started at `t`.
    pub fn sup_rate_until(&self, t: f64) -> f64 {
        match self {
            Exosystem::Piecewise { pieces } => pieces
                .iter()
                .filter(|p| p.start <= t)
                .map(|p| p.exo.sup_rate(f64::INFINITY))
                .fold(0.0, f64::max),
            other => other.sup_rate(t),
        }
    }

    /// Bound `w̄` with `‖w(t)‖ ≤ w̄` for all `t`.
    pub fn w_bar(&self) -> f64 {
        match self {
            Exosystem::Constant { w0 } => Vector::from_column_slice(w0).norm(),
            Exosystem::SineRate { w0, a, omega } => {
                Vector::from_column_slice(w0).norm() + 2.0 * Vector::from_column_slice(a).norm() / omega
            }
            Exosystem::Piecewise { pieces } => pieces.iter().map(|p| p.exo.w_bar()).fold(0.0, f64::max),
        }
    }

    /// Evenly spaced samples of `w` on `[0, t_end]`, plus every breakpoint.
    pub fn samples(&self, t_end: f64, count: usize) -> Vec<Vector> {
        let count = count.max(2);
        let mut out: Vec<Vector> = (0..count).map(|i| self.w(t_end * i as f64 / (count - 1) as f64)).collect();
        out.extend(self.breakpoints(t_end).into_iter().map(|t| self.w(t)));
        out
    }
}
