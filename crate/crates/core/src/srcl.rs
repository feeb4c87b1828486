//! Grading by reconstruction, with and without the range constraint.
//!
//! Baseline methods reconstruct the test vector once and read the grade off
//! the weights as `wᵀg / 1ᵀw`. Range-constrained methods start from that
//! grade and alternate two steps: solve for `w_t` with the penalty
//! `γ‖w ⊙ (ĝ_{t−1}·1 − g)‖²` folded into the data term, then update the grade
//! in closed form, `ĝ_t = Σ w_i² g_i / Σ w_i²`. The closed form is a convex
//! combination of the atom grades, so every `ĝ_t` stays in `[min g, max g]`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{append_rc, augment_with_distance, StackedSystem};
use crate::distances::{
    chi_square_distances, euclidean_distances, gaussian_locality, DistanceVector,
};
use crate::domain::{
    validate_problem, Dictionary, FeatureVector, GroupPartition, Hyperparameters,
    RangeConstraint, SolveTrace, SparseCoefficients, TraceEntry,
};
use crate::error::{Result, SrclError};
use crate::solvers::{
    lars_l1, llc_closed_form, sgl_objective, sparse_group_lasso, LarsStop, SglPenalty,
};

/// Sums below this (in absolute value) make a grade formula undefined.
pub const DEGENERATE_EPSILON: f64 = 1e-12;

/// Default number of equal-width grade bins for the group partition.
pub const DEFAULT_GRADE_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodKind {
    Sc,
    Llc,
    Sdc,
    Ssgl,
    ScRc,
    SdcRc,
    SsglRc,
}

impl MethodKind {
    pub const ALL: [MethodKind; 7] = [
        MethodKind::Sc,
        MethodKind::Llc,
        MethodKind::Sdc,
        MethodKind::Ssgl,
        MethodKind::ScRc,
        MethodKind::SdcRc,
        MethodKind::SsglRc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Sc => "sc",
            MethodKind::Llc => "llc",
            MethodKind::Sdc => "sdc",
            MethodKind::Ssgl => "ssgl",
            MethodKind::ScRc => "sc+rc",
            MethodKind::SdcRc => "sdc+rc",
            MethodKind::SsglRc => "ssgl+rc",
        }
    }

    pub fn is_range_constrained(self) -> bool {
        matches!(self, MethodKind::ScRc | MethodKind::SdcRc | MethodKind::SsglRc)
    }

    /// The one-shot method an RC variant is built on (and initialised from).
    pub fn base(self) -> MethodKind {
        match self {
            MethodKind::ScRc => MethodKind::Sc,
            MethodKind::SdcRc => MethodKind::Sdc,
            MethodKind::SsglRc => MethodKind::Ssgl,
            other => other,
        }
    }

    pub fn needs_distance(self) -> bool {
        matches!(self.base(), MethodKind::Sdc | MethodKind::Ssgl)
    }

    pub fn needs_groups(self) -> bool {
        self.base() == MethodKind::Ssgl
    }

    /// Outer iterations used for each RC variant in the CDR experiments.
    pub fn default_outer_iterations(self) -> usize {
        match self {
            MethodKind::ScRc => 10,
            MethodKind::SdcRc => 8,
            MethodKind::SsglRc => 5,
            _ => 1,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMethod(pub String);

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = MethodKind::ALL.iter().map(|k| k.name()).collect();
        write!(f, "unknown method `{}`; valid names: {}", self.0, names.join(", "))
    }
}

impl std::error::Error for UnknownMethod {}

impl FromStr for MethodKind {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase()
            .replace(['_', '-'], "+");
        MethodKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

/// Application preset for the default hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Cup-to-disc ratio from resized disc images.
    Cdr,
    /// Cataract grading from bag-of-words histograms.
    Cataract,
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cdr" => Ok(Task::Cdr),
            "cataract" => Ok(Task::Cataract),
            other => Err(format!("unknown task `{other}`; valid: cdr, cataract")),
        }
    }
}

impl Task {
    pub fn hyperparameters(self, kind: MethodKind) -> Hyperparameters {
        let mut p = Hyperparameters {
            max_outer_iterations: kind.default_outer_iterations(),
            ..Hyperparameters::default()
        };
        match (self, kind.base()) {
            (_, MethodKind::Llc) => p.lambda1 = 1e-4,
            (Task::Cdr, MethodKind::Sdc) => p.lambda2 = 1e4,
            (Task::Cataract, MethodKind::Sdc) => p.lambda2 = 2.0,
            (Task::Cdr, MethodKind::Ssgl) => {
                p.lambda1 = 0.01;
                p.lambda2 = 10.0;
                p.lambda3 = 0.05;
            }
            (Task::Cataract, MethodKind::Ssgl) => {
                p.lambda1 = 0.035;
                p.lambda2 = 10.0;
                p.lambda3 = 0.05;
            }
            _ => {}
        }
        if kind.is_range_constrained() {
            p.gamma = match (self, kind) {
                (Task::Cdr, MethodKind::ScRc | MethodKind::SdcRc) => 200.0,
                _ => 100.0,
            };
        }
        p
    }

    pub fn default_distance(self) -> DistanceSource {
        match self {
            Task::Cdr => DistanceSource::Euclidean,
            Task::Cataract => DistanceSource::ChiSquare,
        }
    }
}

/// How the per-sample distance vector `d` is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceSource {
    Euclidean,
    ChiSquare,
    /// Caller-computed distances for the sample being graded.
    Precomputed(DistanceVector),
}

impl DistanceSource {
    pub fn distances(&self, y: &FeatureVector, dict: &Dictionary) -> Result<DistanceVector> {
        match self {
            DistanceSource::Euclidean => euclidean_distances(y, dict),
            DistanceSource::ChiSquare => chi_square_distances(y, dict),
            DistanceSource::Precomputed(d) => {
                if d.len() != dict.len() {
                    return Err(SrclError::DimensionMismatch {
                        expected: dict.len(),
                        found: d.len(),
                        context: "precomputed distances vs dictionary",
                    });
                }
                Ok(d.clone())
            }
        }
    }
}

/// A fully configured grading method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodVariant {
    pub kind: MethodKind,
    pub params: Hyperparameters,
    pub distance: Option<DistanceSource>,
    pub groups: Option<GroupPartition>,
    /// Bandwidth of the LLC locality weights; `None` uses the RMS distance
    /// from the sample to the atoms.
    pub llc_sigma: Option<f64>,
}

impl MethodVariant {
    pub fn new(kind: MethodKind, params: Hyperparameters) -> Self {
        Self {
            kind,
            params,
            distance: None,
            groups: None,
            llc_sigma: None,
        }
    }

    /// Preset hyperparameters plus default distance and grade-bin groups.
    pub fn preset(kind: MethodKind, task: Task, dict: &Dictionary) -> Result<Self> {
        let mut v = Self::new(kind, task.hyperparameters(kind));
        if kind.needs_distance() {
            v.distance = Some(task.default_distance());
        }
        if kind.needs_groups() {
            v.groups = Some(GroupPartition::by_grade_bins(dict.grades(), DEFAULT_GRADE_BINS)?);
        }
        Ok(v)
    }

    pub fn with_distance(mut self, distance: DistanceSource) -> Self {
        self.distance = Some(distance);
        self
    }

    pub fn with_groups(mut self, groups: GroupPartition) -> Self {
        self.groups = Some(groups);
        self
    }

    pub fn validate(&self, n_atoms: usize) -> Result<()> {
        self.params.validate()?;
        if self.kind.needs_distance() && self.distance.is_none() {
            return Err(SrclError::MissingRequirement {
                method: self.kind.name(),
                what: "a distance vector",
            });
        }
        if self.kind.needs_groups() {
            let groups = self.groups.as_ref().ok_or(SrclError::MissingRequirement {
                method: self.kind.name(),
                what: "a group partition",
            })?;
            if groups.n_atoms() != n_atoms {
                return Err(SrclError::DimensionMismatch {
                    expected: n_atoms,
                    found: groups.n_atoms(),
                    context: "group partition vs dictionary",
                });
            }
        }
        if let Some(sigma) = self.llc_sigma {
            if !(sigma > 0.0) {
                return Err(SrclError::NonPositiveSigma(sigma));
            }
        }
        Ok(())
    }
}

/// `(wᵀg) / (1ᵀw)`.
pub fn baseline_grade(w: &SparseCoefficients, grades: ArrayView1<'_, f64>) -> Result<f64> {
    check_len(w, grades)?;
    let sum: f64 = w.weights().sum();
    if sum.abs() <= DEGENERATE_EPSILON {
        return Err(SrclError::DegenerateWeights(sum));
    }
    Ok(w.weights().dot(&grades) / sum)
}

/// Closed-form grade update `Σ w_i² g_i / Σ w_i²`.
pub fn rc_grade_update(w: &SparseCoefficients, grades: ArrayView1<'_, f64>) -> Result<f64> {
    check_len(w, grades)?;
    let (num, den) = w
        .weights()
        .iter()
        .zip(grades.iter())
        .fold((0.0, 0.0), |(num, den), (wi, gi)| {
            let sq = wi * wi;
            (num + sq * gi, den + sq)
        });
    if den <= DEGENERATE_EPSILON {
        return Err(SrclError::DegenerateWeights(den));
    }
    Ok(num / den)
}

fn check_len(w: &SparseCoefficients, grades: ArrayView1<'_, f64>) -> Result<()> {
    if w.len() != grades.len() {
        return Err(SrclError::DimensionMismatch {
            expected: grades.len(),
            found: w.len(),
            context: "weights vs grades",
        });
    }
    Ok(())
}

/// Outcome of grading one sample.
#[derive(Debug, Clone)]
pub struct VariantSolution {
    pub coefficients: SparseCoefficients,
    pub grade: f64,
    pub trace: SolveTrace,
    /// Baseline weights and grade the RC loop started from.
    pub initial: Option<(SparseCoefficients, f64)>,
    /// False if any inner solve stopped early (step breakdown or iteration
    /// budget).
    pub inner_converged: bool,
}

struct InnerSolve {
    coefficients: SparseCoefficients,
    objective: f64,
    clean: bool,
}

fn solve_system(system: &StackedSystem, variant: &MethodVariant) -> Result<InnerSolve> {
    match variant.kind.base() {
        MethodKind::Ssgl => {
            let groups = variant.groups.as_ref().expect("validated");
            let penalty = SglPenalty {
                lambda1: variant.params.lambda1,
                lambda3: variant.params.lambda3,
            };
            let sol = sparse_group_lasso(system.design.view(), system.target.view(), penalty, groups)?;
            let objective = sgl_objective(
                system.design.view(),
                system.target.view(),
                sol.coefficients.weights(),
                penalty,
                groups,
            );
            Ok(InnerSolve {
                coefficients: sol.coefficients,
                objective,
                clean: sol.converged,
            })
        }
        _ => {
            let sol = lars_l1(system.design.view(), system.target.view(), variant.params.lars_steps)?;
            let objective = system.residual_sq(sol.coefficients.weights());
            Ok(InnerSolve {
                coefficients: sol.coefficients,
                objective,
                clean: !matches!(sol.stop, LarsStop::Breakdown { .. }),
            })
        }
    }
}

/// Builds the stacked system for one inner solve: optional range-constraint
/// rows first, then the distance rows.
fn build_system(
    y: &FeatureVector,
    dict: &Dictionary,
    variant: &MethodVariant,
    distances: Option<&DistanceVector>,
    rc: Option<&RangeConstraint>,
) -> Result<StackedSystem> {
    let mut system = StackedSystem::from_problem(y, dict)?;
    if let Some(rc) = rc {
        system = append_rc(system, dict.grades(), rc)?;
    }
    if let Some(d) = distances {
        system = augment_with_distance(system, d, variant.params.lambda2)?;
    }
    Ok(system)
}

fn solve_baseline(
    y: &FeatureVector,
    dict: &Dictionary,
    variant: &MethodVariant,
    distances: Option<&DistanceVector>,
) -> Result<(InnerSolve, f64)> {
    let inner = if variant.kind.base() == MethodKind::Llc {
        let sigma = match variant.llc_sigma {
            Some(s) => s,
            None => rms_distance(y, dict)?,
        };
        let locality = gaussian_locality(y, dict, sigma)?;
        let coefficients = llc_closed_form(y, dict, &locality, variant.params.lambda1)?;
        let r = &y.values() - &dict.atoms().dot(&coefficients.weights());
        let ridge: f64 = coefficients
            .weights()
            .iter()
            .zip(locality.values().iter())
            .map(|(w, c)| (c * w).powi(2))
            .sum();
        InnerSolve {
            objective: r.dot(&r) + variant.params.lambda1 * ridge,
            coefficients,
            clean: true,
        }
    } else {
        let system = build_system(y, dict, variant, distances, None)?;
        solve_system(&system, variant)?
    };
    let grade = baseline_grade(&inner.coefficients, dict.grades())?;
    Ok((inner, grade))
}

fn rms_distance(y: &FeatureVector, dict: &Dictionary) -> Result<f64> {
    let d = euclidean_distances(y, dict)?;
    let rms = (d.values().iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt();
    Ok(if rms > 0.0 { rms } else { 1.0 })
}

/// Grades `y` against `dict` with the configured method.
pub fn solve_variant(
    y: &FeatureVector,
    dict: &Dictionary,
    variant: &MethodVariant,
) -> Result<VariantSolution> {
    validate_problem(y, dict)?;
    variant.validate(dict.len())?;
    let distances = match (&variant.distance, variant.kind.needs_distance()) {
        (Some(src), true) => Some(src.distances(y, dict)?),
        _ => None,
    };

    let (base, initial_grade) = solve_baseline(y, dict, variant, distances.as_ref())?;
    if !variant.kind.is_range_constrained() {
        let trace = SolveTrace {
            iterations: vec![TraceEntry {
                iteration: 1,
                weights: base.coefficients.weights().to_owned(),
                grade: initial_grade,
                objective: base.objective,
            }],
            converged: base.clean,
            final_grade: initial_grade,
        };
        return Ok(VariantSolution {
            coefficients: base.coefficients,
            grade: initial_grade,
            trace,
            initial: None,
            inner_converged: base.clean,
        });
    }

    let params = &variant.params;
    let mut current = (base.coefficients.clone(), initial_grade);
    let mut trace = SolveTrace::default();
    let mut inner_converged = base.clean;
    let mut converged = false;
    for t in 1..=params.max_outer_iterations {
        let previous_grade = current.1;
        let rc = RangeConstraint::new(params.gamma, previous_grade)?;
        let system = build_system(y, dict, variant, distances.as_ref(), Some(&rc))?;
        let inner = solve_system(&system, variant)?;
        inner_converged &= inner.clean;
        let grade = match rc_grade_update(&inner.coefficients, dict.grades()) {
            Ok(g) => g,
            Err(SrclError::DegenerateWeights(_)) => {
                converged = false;
                break;
            }
            Err(e) => return Err(e),
        };
        trace.iterations.push(TraceEntry {
            iteration: t,
            weights: inner.coefficients.weights().to_owned(),
            grade,
            objective: inner.objective,
        });
        current = (inner.coefficients, grade);
        converged = (grade - previous_grade).abs() < params.convergence_tolerance;
        if converged && params.stop_on_tolerance {
            break;
        }
    }
    trace.converged = converged;
    trace.final_grade = current.1;
    Ok(VariantSolution {
        coefficients: current.0,
        grade: current.1,
        trace,
        initial: Some((base.coefficients, initial_grade)),
        inner_converged,
    })
}

/// Grades every sample against a shared dictionary in parallel. Results are
/// in input order.
pub fn grade_batch(
    samples: &[FeatureVector],
    dict: &Dictionary,
    variant: &MethodVariant,
) -> Vec<Result<VariantSolution>> {
    samples
        .par_iter()
        .map(|y| solve_variant(y, dict, variant))
        .collect()
}

/// Spread `max g − min g` over the atoms carrying the `k` largest weights
/// (by magnitude) among the nonzero ones.
pub fn top_k_grade_range(w: ArrayView1<'_, f64>, grades: ArrayView1<'_, f64>, k: usize) -> f64 {
    let mut idx: Vec<usize> = crate::domain::support_of(w);
    idx.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    if idx.is_empty() {
        return 0.0;
    }
    let sel: Array1<f64> = idx.iter().map(|&i| grades[i]).collect();
    let lo = sel.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}
