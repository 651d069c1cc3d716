//! Stability certificates and hybrid simulation for gradient-flow feedback
//! optimization of LTI plants under switching multiplicative attacks.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod batch;
pub mod certify;
pub mod cli;
pub mod hsim;
pub mod matrixlab;
pub mod objective;
pub mod plant;
pub mod scenarios;
