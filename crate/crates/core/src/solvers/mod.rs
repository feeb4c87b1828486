//! Inner solvers for the weight subproblem.

mod lars;
mod llc;
mod sgl;

pub use lars::{lars_l1, lars_path, LarsSolution, LarsStop};
pub use llc::llc_closed_form;
pub use sgl::{
    sgl_objective, sgl_prox, sparse_group_lasso, SglPenalty, SglSolution, INNER_TOLERANCE,
    MAX_INNER_ITERATIONS,
};
