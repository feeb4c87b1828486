//! Grading accuracy measures.

use serde::Serialize;

use crate::error::{Result, SrclError};

fn check_pair(truth: &[f64], pred: &[f64], min_len: usize) -> Result<()> {
    if truth.len() != pred.len() {
        return Err(SrclError::LengthMismatch(truth.len(), pred.len()));
    }
    if truth.len() < min_len {
        return Err(SrclError::Empty(min_len));
    }
    Ok(())
}

/// Mean of `|truth_i − pred_i|`.
pub fn mean_absolute_error(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_pair(truth, pred, 1)?;
    let sum: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p).abs()).sum();
    Ok(sum / truth.len() as f64)
}

/// Pearson's correlation coefficient.
pub fn pearson_correlation(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_pair(truth, pred, 2)?;
    let n = truth.len() as f64;
    let mt = truth.iter().sum::<f64>() / n;
    let mp = pred.iter().sum::<f64>() / n;
    let (mut cov, mut vt, mut vp) = (0.0, 0.0, 0.0);
    for (t, p) in truth.iter().zip(pred) {
        let (dt, dp) = (t - mt, p - mp);
        cov += dt * dp;
        vt += dt * dt;
        vp += dp * dp;
    }
    if vt == 0.0 || vp == 0.0 {
        return Err(SrclError::ConstantVector);
    }
    Ok((cov / (vt.sqrt() * vp.sqrt())).clamp(-1.0, 1.0))
}

/// Fraction of samples whose ceiled grades agree.
pub fn integral_agreement(truth: &[f64], pred: &[f64]) -> Result<f64> {
    tolerance_ratio(truth, pred, 0.0)
}

/// Fraction of samples with `|⌈pred⌉ − ⌈truth⌉| ≤ tol`.
pub fn tolerance_ratio(truth: &[f64], pred: &[f64], tol: f64) -> Result<f64> {
    check_pair(truth, pred, 1)?;
    Ok(fraction(truth, pred, |t, p| (p.ceil() - t.ceil()).abs() <= tol))
}

/// Fraction of samples with `|pred − truth| ≤ tol` on the raw decimals.
pub fn tolerance_ratio_decimal(truth: &[f64], pred: &[f64], tol: f64) -> Result<f64> {
    check_pair(truth, pred, 1)?;
    Ok(fraction(truth, pred, |t, p| (p - t).abs() <= tol))
}

fn fraction(truth: &[f64], pred: &[f64], hit: impl Fn(f64, f64) -> bool) -> f64 {
    let hits = truth.iter().zip(pred).filter(|(t, p)| hit(**t, **p)).count();
    hits as f64 / truth.len() as f64
}

/// Continuous-score measures: mean absolute error and correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdrMetrics {
    pub mean_abs_error: f64,
    pub correlation: f64,
}

pub fn cdr_metrics(truth: &[f64], pred: &[f64]) -> Result<CdrMetrics> {
    Ok(CdrMetrics {
        mean_abs_error: mean_absolute_error(truth, pred)?,
        correlation: pearson_correlation(truth, pred)?,
    })
}

/// Cataract grading measures. `r0_5`/`r1` difference ceiled grades; the
/// `*_decimal` fields apply the same thresholds to raw decimal errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CataractMetrics {
    pub mean_abs_error: f64,
    pub r0: f64,
    pub r0_5: f64,
    pub r1: f64,
    pub r0_5_decimal: f64,
    pub r1_decimal: f64,
}

pub fn cataract_metrics(truth: &[f64], pred: &[f64]) -> Result<CataractMetrics> {
    Ok(CataractMetrics {
        mean_abs_error: mean_absolute_error(truth, pred)?,
        r0: integral_agreement(truth, pred)?,
        r0_5: tolerance_ratio(truth, pred, 0.5)?,
        r1: tolerance_ratio(truth, pred, 1.0)?,
        r0_5_decimal: tolerance_ratio_decimal(truth, pred, 0.5)?,
        r1_decimal: tolerance_ratio_decimal(truth, pred, 1.0)?,
    })
}
