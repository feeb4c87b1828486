use ndarray::Array2;

use crate::distances::DistanceVector;
use crate::domain::{validate_problem, Dictionary, FeatureVector, SparseCoefficients};
use crate::error::{Result, SrclError};
use crate::linalg::{solve_symmetric, NormalEquations};

/// Locality-constrained linear coding: minimises
/// `‖y − Xw‖² + λ1‖c ⊙ w‖²` through its normal equations
/// `(XᵀX + λ1·diag(c)²) w = Xᵀy`. The result is dense.
pub fn llc_closed_form(
    y: &FeatureVector,
    dict: &Dictionary,
    locality: &DistanceVector,
    lambda1: f64,
) -> Result<SparseCoefficients> {
    validate_problem(y, dict)?;
    if locality.len() != dict.len() {
        return Err(SrclError::DimensionMismatch {
            expected: dict.len(),
            found: locality.len(),
            context: "locality vector vs dictionary",
        });
    }
    if !(lambda1 >= 0.0) {
        return Err(SrclError::NegativeLambda(lambda1));
    }
    let normal = NormalEquations::from_design(dict.atoms(), y.values());
    let mut system: Array2<f64> = normal.gram;
    for (i, c) in locality.values().iter().enumerate() {
        system[(i, i)] += lambda1 * c * c;
    }
    let w = solve_symmetric(system.view(), normal.moment.view()).ok_or(SrclError::SingularSystem)?;
    Ok(SparseCoefficients::new(w))
}
