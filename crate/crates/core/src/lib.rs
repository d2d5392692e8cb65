//! Forward and partial inverse spectral problems for Sturm–Liouville operators
//! with distributional potentials on a lasso graph.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod harness;
pub mod partial_inverse;
pub mod periodic_inverse;
pub mod quasi_ode;
pub mod roots;
pub mod spectral_forward;
pub mod trig;
