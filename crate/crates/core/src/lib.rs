//! Grading by sparse reconstruction over a graded reference dictionary.
//!
//! A test sample `y` is reconstructed from reference atoms `X` with sparse
//! weights `w`, and its grade is read off the atom grades `g`. The range
//! constraint variants add `γ‖w ⊙ (ĝ·1 − g)‖²`, which discourages weight on
//! atoms whose grade is far from the current estimate `ĝ`, and alternate
//! between solving for `w` and updating `ĝ`.

pub mod augment;
pub mod data;
pub mod distances;
pub mod domain;
pub mod error;
pub mod features;
mod linalg;
pub mod metrics;
pub mod solvers;
pub mod srcl;

pub use distances::{DistanceKind, DistanceVector};
pub use domain::{
    Dictionary, FeatureVector, GroupPartition, Hyperparameters, RangeConstraint, SolveTrace,
    SparseCoefficients, TraceEntry,
};
pub use error::{Result, SrclError};
pub use srcl::{
    grade_batch, solve_variant, DistanceSource, MethodKind, MethodVariant, Task, VariantSolution,
};
