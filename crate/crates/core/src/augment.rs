//! Stacked least-squares systems.
//!
//! Quadratic penalties of the form `‖D w‖²` with diagonal `D` are folded into
//! the data term by appending rows: `‖[t; 0] − [A; D] w‖² = ‖t − Aw‖² + ‖Dw‖²`.
//! The range constraint and the distance term both take this shape, so every
//! variant ends up as a plain ℓ1 (or sparse group lasso) problem.

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::distances::DistanceVector;
use crate::domain::{validate_problem, Dictionary, FeatureVector, RangeConstraint};
use crate::error::{Result, SrclError};

/// A least-squares system `‖target − design·w‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSystem {
    pub target: Array1<f64>,
    pub design: Array2<f64>,
}

impl StackedSystem {
    pub fn new(target: Array1<f64>, design: Array2<f64>) -> Result<Self> {
        if target.len() != design.nrows() {
            return Err(SrclError::DimensionMismatch {
                expected: design.nrows(),
                found: target.len(),
                context: "target vs design rows",
            });
        }
        Ok(Self { target, design })
    }

    /// The unaugmented system `(y, X)`.
    pub fn from_problem(y: &FeatureVector, dict: &Dictionary) -> Result<Self> {
        validate_problem(y, dict)?;
        Ok(Self {
            target: y.values().to_owned(),
            design: dict.atoms().to_owned(),
        })
    }

    pub fn residual_sq(&self, w: ArrayView1<'_, f64>) -> f64 {
        let r = &self.target - &self.design.dot(&w);
        r.dot(&r)
    }

    fn append_diagonal(self, diag: ArrayView1<'_, f64>) -> Result<Self> {
        let n = self.design.ncols();
        if diag.len() != n {
            return Err(SrclError::DimensionMismatch {
                expected: n,
                found: diag.len(),
                context: "penalty diagonal vs design columns",
            });
        }
        let block = Array2::from_diag(&diag);
        let design = concatenate(Axis(0), &[self.design.view(), block.view()])
            .expect("column counts agree");
        let target = concatenate(Axis(0), &[self.target.view(), Array1::zeros(n).view()])
            .expect("1-d concatenation");
        Ok(Self { target, design })
    }
}

/// Diagonal of the range-constraint block, `Δ(i,i) = ĝ − g_i`.
pub fn range_deltas(rc: &RangeConstraint, grades: ArrayView1<'_, f64>) -> Array1<f64> {
    grades.mapv(|g| rc.current_grade() - g)
}

/// Appends `√γ·Δ` to the system of `(y, X)`: `[y; 0]` and `[X; √γΔ]`.
pub fn augment_with_rc(
    y: &FeatureVector,
    dict: &Dictionary,
    rc: &RangeConstraint,
) -> Result<StackedSystem> {
    let base = StackedSystem::from_problem(y, dict)?;
    append_rc(base, dict.grades(), rc)
}

/// Appends the range-constraint rows to an arbitrary (possibly already
/// augmented) system over the same atoms.
pub fn append_rc(
    system: StackedSystem,
    grades: ArrayView1<'_, f64>,
    rc: &RangeConstraint,
) -> Result<StackedSystem> {
    if !(rc.gamma() >= 0.0) {
        return Err(SrclError::NegativeGamma(rc.gamma()));
    }
    let root = rc.gamma().sqrt();
    let diag = range_deltas(rc, grades).mapv(|d| root * d);
    system.append_diagonal(diag.view())
}

/// Appends `√λ2·diag(d)`, realising `λ2‖d ⊙ w‖²`.
pub fn augment_with_distance(
    system: StackedSystem,
    d: &DistanceVector,
    lambda2: f64,
) -> Result<StackedSystem> {
    if !(lambda2 >= 0.0) {
        return Err(SrclError::NegativeLambda(lambda2));
    }
    let root = lambda2.sqrt();
    let diag = d.values().mapv(|v| root * v);
    system.append_diagonal(diag.view())
}

/// `‖y − Xw‖² + λ2‖d ⊙ w‖² + γ‖w ⊙ (ĝ·1 − g)‖²` evaluated term by term.
pub fn three_term_objective(
    y: ArrayView1<'_, f64>,
    atoms: ArrayView2<'_, f64>,
    grades: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
    d: Option<(&DistanceVector, f64)>,
    rc: Option<&RangeConstraint>,
) -> f64 {
    let r = &y - &atoms.dot(&w);
    let mut total = r.dot(&r);
    if let Some((d, lambda2)) = d {
        total += lambda2
            * d.values()
                .iter()
                .zip(w.iter())
                .map(|(di, wi)| (di * wi).powi(2))
                .sum::<f64>();
    }
    if let Some(rc) = rc {
        total += rc.penalty(w, grades);
    }
    total
}
