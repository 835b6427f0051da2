//! Discrete machinery for a priori estimates of fully nonlinear complex
//! Hessian equations on flat tori: spectral solvers for the equation and its
//! auxiliary Monge-Ampère problem, a Dirichlet real Monge-Ampère solver, the
//! comparison function, De Giorgi profile checks, discrete Green functions,
//! almost-Kähler data and a stability sweep.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod comparison;
pub mod degiorgi;
pub mod error;
pub mod field;
pub mod functionals;
pub mod green;
pub mod grid;
pub mod hermitian;
pub mod krylov;
pub mod operator;
pub mod solver_cma;
pub mod solver_rma;
pub mod spectral;
pub mod stability;
pub mod symplectic;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use grid::TorusGrid;
pub use operator::{OperatorKind, OperatorSpec};
