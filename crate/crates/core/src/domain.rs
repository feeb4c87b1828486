//! Shared domain types: feature vectors, graded dictionaries, coefficient
//! vectors, group partitions and solve traces.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SrclError};

/// Coefficients with magnitude at or below this are outside the support.
pub const SUPPORT_EPSILON: f64 = 1e-10;

/// A sample to be reconstructed.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Array1<f64>);

impl FeatureVector {
    pub fn new(values: Array1<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(SrclError::EmptyVector);
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(SrclError::NonFiniteData("feature vector"));
        }
        Ok(Self(values))
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        Self::new(Array1::from(values))
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.0
    }
}

/// Reference atoms (columns) with one known grade per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Array2<f64>,
    grades: Array1<f64>,
}

impl Dictionary {
    /// `atoms` is m×n, one atom per column.
    pub fn new(atoms: Array2<f64>, grades: Array1<f64>) -> Result<Self> {
        let (m, n) = atoms.dim();
        if n < 2 {
            return Err(SrclError::EmptyDictionary(n));
        }
        if m == 0 {
            return Err(SrclError::EmptyVector);
        }
        if grades.len() != n {
            return Err(SrclError::DimensionMismatch {
                expected: n,
                found: grades.len(),
                context: "grades vs dictionary columns",
            });
        }
        if !atoms.iter().all(|v| v.is_finite()) {
            return Err(SrclError::NonFiniteData("dictionary atoms"));
        }
        if !grades.iter().all(|v| v.is_finite()) {
            return Err(SrclError::NonFiniteData("dictionary grades"));
        }
        Ok(Self { atoms, grades })
    }

    /// Builds a dictionary from row-major samples (one atom per entry).
    pub fn from_samples(samples: &[Vec<f64>], grades: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        let m = samples.first().map_or(0, Vec::len);
        for (i, s) in samples.iter().enumerate() {
            if s.len() != m {
                return Err(SrclError::DimensionMismatch {
                    expected: m,
                    found: samples[i].len(),
                    context: "sample length",
                });
            }
        }
        let atoms = Array2::from_shape_fn((m, n), |(r, c)| samples[c][r]);
        Self::new(atoms, Array1::from(grades))
    }

    pub fn atoms(&self) -> ArrayView2<'_, f64> {
        self.atoms.view()
    }

    pub fn grades(&self) -> ArrayView1<'_, f64> {
        self.grades.view()
    }

    pub fn atom(&self, i: usize) -> ArrayView1<'_, f64> {
        self.atoms.column(i)
    }

    /// Feature dimension m.
    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    /// Number of atoms n.
    pub fn len(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.ncols() == 0
    }

    pub fn grade_range(&self) -> (f64, f64) {
        self.grades
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| {
                (lo.min(g), hi.max(g))
            })
    }
}

/// Checks that `y` can be reconstructed from `dict`.
pub fn validate_problem(y: &FeatureVector, dict: &Dictionary) -> Result<()> {
    if dict.len() < 2 {
        return Err(SrclError::EmptyDictionary(dict.len()));
    }
    if y.len() != dict.dim() {
        return Err(SrclError::DimensionMismatch {
            expected: dict.dim(),
            found: y.len(),
            context: "feature vector vs dictionary atoms",
        });
    }
    if !y.values().iter().all(|v| v.is_finite()) {
        return Err(SrclError::NonFiniteData("feature vector"));
    }
    Ok(())
}

/// Reconstruction weights `w` and their support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoefficients {
    weights: Array1<f64>,
    support: Vec<usize>,
}

impl SparseCoefficients {
    pub fn new(weights: Array1<f64>) -> Self {
        let support = support_of(weights.view());
        Self { weights, support }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(Array1::zeros(n))
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    pub fn into_weights(self) -> Array1<f64> {
        self.weights
    }
}

pub fn support_of(weights: ArrayView1<'_, f64>) -> Vec<usize> {
    weights
        .iter()
        .enumerate()
        .filter(|(_, w)| w.abs() > SUPPORT_EPSILON)
        .map(|(i, _)| i)
        .collect()
}

/// Disjoint groups of atom indices covering the dictionary, each with a
/// positive weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    group_weights: Vec<f64>,
}

impl GroupPartition {
    pub fn new(groups: Vec<Vec<usize>>, group_weights: Vec<f64>, n: usize) -> Result<Self> {
        if groups.len() != group_weights.len() {
            return Err(SrclError::InvalidPartition(format!(
                "{} groups but {} weights",
                groups.len(),
                group_weights.len()
            )));
        }
        if let Some(w) = group_weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(SrclError::InvalidPartition(format!(
                "group weight {w} is not positive"
            )));
        }
        let mut seen = vec![false; n];
        for idx in groups.iter().flatten() {
            match seen.get_mut(*idx) {
                None => {
                    return Err(SrclError::InvalidPartition(format!(
                        "index {idx} out of range for {n} atoms"
                    )))
                }
                Some(true) => {
                    return Err(SrclError::InvalidPartition(format!(
                        "index {idx} appears in more than one group"
                    )))
                }
                Some(s) => *s = true,
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(SrclError::InvalidPartition(format!(
                "index {missing} is not covered"
            )));
        }
        Ok(Self {
            groups,
            group_weights,
        })
    }

    /// Groups weighted by `sqrt(|G|)`.
    pub fn with_sqrt_size_weights(groups: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let weights = groups.iter().map(|g| (g.len() as f64).sqrt()).collect();
        Self::new(groups, weights, n)
    }

    /// Bins atoms by grade into `bins` equal-width intervals over
    /// `[min g, max g]`. Empty bins are dropped.
    pub fn by_grade_bins(grades: ArrayView1<'_, f64>, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(SrclError::InvalidPartition("bin count must be >= 1".into()));
        }
        let (lo, hi) = grades
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| {
                (lo.min(g), hi.max(g))
            });
        let width = (hi - lo) / bins as f64;
        let mut groups = vec![Vec::new(); bins];
        for (i, &g) in grades.iter().enumerate() {
            let b = if width > 0.0 {
                (((g - lo) / width) as usize).min(bins - 1)
            } else {
                0
            };
            groups[b].push(i);
        }
        groups.retain(|g| !g.is_empty());
        Self::with_sqrt_size_weights(groups, grades.len())
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_weights(&self) -> &[f64] {
        &self.group_weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.groups
            .iter()
            .map(Vec::as_slice)
            .zip(self.group_weights.iter().copied())
    }

    /// Number of indices covered.
    pub fn n_atoms(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }
}

/// Weight of the range-constraint term and the grade it pulls towards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeConstraint {
    gamma: f64,
    current_grade: f64,
}

impl RangeConstraint {
    pub fn new(gamma: f64, current_grade: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(SrclError::NegativeGamma(gamma));
        }
        if !current_grade.is_finite() {
            return Err(SrclError::NonFiniteData("current grade"));
        }
        Ok(Self {
            gamma,
            current_grade,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn current_grade(&self) -> f64 {
        self.current_grade
    }

    /// `γ‖w ⊙ (ĝ·1 − g)‖²`
    pub fn penalty(&self, w: ArrayView1<'_, f64>, grades: ArrayView1<'_, f64>) -> f64 {
        self.gamma
            * w.iter()
                .zip(grades.iter())
                .map(|(wi, gi)| (wi * (self.current_grade - gi)).powi(2))
                .sum::<f64>()
    }
}

/// Solver weights and the outer-loop budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// ℓ1 weight for the proximal solver.
    pub lambda1: f64,
    /// Step budget of the LARS homotopy; stands in for the ℓ1 weight there.
    pub lars_steps: usize,
    /// Distance-term weight.
    pub lambda2: f64,
    /// Group-lasso weight.
    pub lambda3: f64,
    /// Range-constraint weight.
    pub gamma: f64,
    pub max_outer_iterations: usize,
    pub convergence_tolerance: f64,
    /// Stop the outer loop once the grade moves less than the tolerance.
    /// When false, exactly `max_outer_iterations` are run.
    pub stop_on_tolerance: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            lambda1: 0.01,
            lars_steps: 100,
            lambda2: 0.0,
            lambda3: 0.0,
            gamma: 0.0,
            max_outer_iterations: 10,
            convergence_tolerance: 1e-4,
            stop_on_tolerance: false,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("gamma", self.gamma),
            ("convergence_tolerance", self.convergence_tolerance),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SrclError::InvalidHyperparameters(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.max_outer_iterations == 0 {
            return Err(SrclError::InvalidHyperparameters(
                "max_outer_iterations must be >= 1".into(),
            ));
        }
        if self.lars_steps == 0 {
            return Err(SrclError::InvalidHyperparameters(
                "lars_steps must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub weights: Array1<f64>,
    pub grade: f64,
    /// Value of the weight subproblem at `(w_t, ĝ_{t-1})`.
    pub objective: f64,
}

/// Per-iteration record of the alternating solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    pub iterations: Vec<TraceEntry>,
    pub converged: bool,
    pub final_grade: f64,
}

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn grades(&self) -> impl Iterator<Item = f64> + '_ {
        self.iterations.iter().map(|e| e.grade)
    }
}
