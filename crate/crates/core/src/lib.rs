//! Numerical detection of conformal Killing vector fields on coordinate patches,
//! bump-perturbation experiments, and exact jet-space dimension counts.
//!
//! The main entry points are [`ckv::count_ckv`] for the nullity of the
//! (conformal) Killing operator, [`perturb::run_trials`] for perturbation
//! batteries, and [`jet::scan`] for the dimension bookkeeping.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ckv;
pub mod cli;
pub mod error;
pub mod jet;
pub mod metrics;
pub mod perturb;
pub mod poly;
pub mod report;
pub mod tensor;

pub use ckv::{count_ckv, CkvReport, Mode, SolverConfig};
pub use error::{CkvError, Result};
pub use metrics::{builtin_factor, builtin_metric};
pub use poly::{Polynomial, VectorFieldPoly};
pub use tensor::{MetricProvider, Patch, SymTensor2};
