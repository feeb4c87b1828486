//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

/// Normal-equation data of a least-squares problem `‖t − Aw‖²`.
#[derive(Debug, Clone)]
pub(crate) struct NormalEquations {
    /// `AᵀA`
    pub gram: Array2<f64>,
    /// `Aᵀt`
    pub moment: Array1<f64>,
    /// `tᵀt`
    pub target_sq: f64,
}

impl NormalEquations {
    /// Rows of `[A | t]` that are identically zero contribute nothing and are
    /// skipped, so a problem padded with zero rows yields the very same bits.
    pub fn from_design(design: ArrayView2<'_, f64>, target: ArrayView1<'_, f64>) -> Self {
        let keep: Vec<usize> = (0..design.nrows())
            .filter(|&r| target[r] != 0.0 || design.row(r).iter().any(|&v| v != 0.0))
            .collect();
        let (a, t) = if keep.len() == design.nrows() {
            (design.to_owned(), target.to_owned())
        } else {
            (design.select(Axis(0), &keep), target.select(Axis(0), &keep))
        };
        let gram = a.t().dot(&a);
        let moment = a.t().dot(&t);
        let target_sq = t.dot(&t);
        Self {
            gram,
            moment,
            target_sq,
        }
    }
}

pub(crate) fn to_nalgebra(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Solves the symmetric positive definite system `a x = b` by Cholesky.
/// Returns `None` when `a` is singular to working precision.
pub(crate) fn solve_symmetric(a: ArrayView2<'_, f64>, b: ArrayView1<'_, f64>) -> Option<Array1<f64>> {
    let scale = a.diag().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ch = to_nalgebra(a).cholesky()?;
    let l = ch.l_dirty();
    let min_pivot_sq = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot_sq > 1e-13 * scale) {
        return None;
    }
    let rhs = DVector::from_iterator(b.len(), b.iter().copied());
    let x = ch.solve(&rhs);
    x.iter().all(|v| v.is_finite()).then(|| Array1::from_iter(x.iter().copied()))
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub(crate) fn power_iteration(a: ArrayView2<'_, f64>, steps: usize) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..steps {
        let av = a.dot(&v);
        let norm = av.dot(&av).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        estimate = v.dot(&av);
        v = av / norm;
    }
    estimate.max(v.dot(&a.dot(&v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_rows_do_not_change_normal_equations() {
        let a = array![[1.0, 2.0], [0.5, -1.0], [3.0, 0.25]];
        let t = array![1.0, 2.0, 3.0];
        let mut padded = Array2::zeros((5, 2));
        padded.slice_mut(ndarray::s![0..3, ..]).assign(&a);
        let mut tp = Array1::zeros(5);
        tp.slice_mut(ndarray::s![0..3]).assign(&t);
        let plain = NormalEquations::from_design(a.view(), t.view());
        let pad = NormalEquations::from_design(padded.view(), tp.view());
        assert_eq!(plain.gram, pad.gram);
        assert_eq!(plain.moment, pad.moment);
        assert_eq!(plain.target_sq, pad.target_sq);
    }

    #[test]
    fn power_iteration_finds_dominant_eigenvalue() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let exact = (7.0 + 5f64.sqrt()) / 2.0;
        assert!((power_iteration(a.view(), 50) - exact).abs() < 1e-10);
    }

    #[test]
    fn symmetric_solve() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let x = solve_symmetric(a.view(), array![1.0, 2.0].view()).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
        assert!(solve_symmetric(array![[1.0, 1.0], [1.0, 1.0]].view(), array![1.0, 0.0].view()).is_none());
    }
}
