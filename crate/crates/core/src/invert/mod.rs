//! Variable-projection reconstruction.
//!
//! For fixed wall parameters `m` the reflectivity solves
//! `min_v ½‖F₀(m) + A(m)v − d‖² + λ R(|v|)` by FISTA, with `R` the total
//! variation or the ℓ₁ norm of the magnitude. The reduced objective
//! `J̄(m)` is then minimised over `m` by BFGS.

mod bfgs;
mod fista;
mod prox;
mod varpro;

pub use bfgs::{bfgs_minimize, spd_inverse, BfgsResult, OuterConfig, OuterRecord, OuterStop};
pub use fista::{fista, inner_objective, power_method_norm, FistaResult, InnerConfig, StopReason};
pub use prox::{prox, prox_l1, prox_tv_magnitude, prox_tv_real, regularizer_value, total_variation, Regularizer};
pub use varpro::{
    bfgs_outer, gauss_newton_inverse, InnerSolution, Reconstruction, ReconstructionTrace, ReducedEvaluation, TraceRecord, VarPro,
};
