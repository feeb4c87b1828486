//! Per-atom distances between a test vector and the dictionary.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::domain::{validate_problem, Dictionary, FeatureVector};
use crate::error::{Result, SrclError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    Euclidean,
    GaussianLocality,
    ChiSquare,
    Custom,
}

/// Nonnegative per-atom distance, one entry per dictionary atom.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceVector {
    values: Array1<f64>,
    kind: DistanceKind,
}

impl DistanceVector {
    /// Wraps caller-supplied distances, e.g. a shape-similarity measure.
    pub fn custom(values: Array1<f64>) -> Result<Self> {
        Self::with_kind(values, DistanceKind::Custom)
    }

    fn with_kind(values: Array1<f64>, kind: DistanceKind) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) {
            return Err(SrclError::NonFiniteData("distance vector"));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(SrclError::InvalidHyperparameters(format!(
                "distance {index} is negative ({value})"
            )));
        }
        Ok(Self { values, kind })
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.values.view()
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn squared_distances(y: &FeatureVector, dict: &Dictionary) -> Result<Array1<f64>> {
    validate_problem(y, dict)?;
    let y = y.values();
    Ok(dict
        .atoms()
        .columns()
        .into_iter()
        .map(|x| {
            x.iter()
                .zip(y.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .collect())
}

/// `‖y − x_i‖₂` for every atom.
pub fn euclidean_distances(y: &FeatureVector, dict: &Dictionary) -> Result<DistanceVector> {
    let sq = squared_distances(y, dict)?;
    DistanceVector::with_kind(sq.mapv(f64::sqrt), DistanceKind::Euclidean)
}

/// LLC locality weights `exp(‖y − x_i‖² / 2σ²)`. These grow with distance,
/// so far atoms are penalised more.
pub fn gaussian_locality(
    y: &FeatureVector,
    dict: &Dictionary,
    sigma: f64,
) -> Result<DistanceVector> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(SrclError::NonPositiveSigma(sigma));
    }
    let sq = squared_distances(y, dict)?;
    let two_sigma_sq = 2.0 * sigma * sigma;
    DistanceVector::with_kind(
        sq.mapv(|d| (d / two_sigma_sq).exp()),
        DistanceKind::GaussianLocality,
    )
}

/// Symmetric χ² distance `½ Σ (y_k − x_k)² / (y_k + x_k)` between
/// histograms; bins empty in both contribute nothing.
pub fn chi_square_distances(y: &FeatureVector, dict: &Dictionary) -> Result<DistanceVector> {
    validate_problem(y, dict)?;
    if let Some((index, &value)) = y.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(SrclError::NegativeHistogramEntry { index, value });
    }
    if let Some(((index, _), &value)) = dict.atoms().indexed_iter().find(|(_, v)| **v < 0.0) {
        return Err(SrclError::NegativeHistogramEntry { index, value });
    }
    let y = y.values();
    let values = dict
        .atoms()
        .columns()
        .into_iter()
        .map(|x| chi_square(y, x))
        .collect();
    DistanceVector::with_kind(values, DistanceKind::ChiSquare)
}

fn chi_square(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    0.5 * a
        .iter()
        .zip(b.iter())
        .map(|(p, q)| {
            let denom = p + q;
            if denom > 0.0 {
                (p - q) * (p - q) / denom
            } else {
                0.0
            }
        })
        .sum::<f64>()
}
