//! Sparse group lasso by accelerated proximal gradient.
//!
//! Minimises `½‖t − Aw‖² + λ1‖w‖₁ + λ3 Σ ψ_G ‖w_G‖₂`. The proximal operator
//! of the combined penalty is exact for non-overlapping groups: soft-threshold
//! every coordinate, then shrink each group's norm.

use ndarray::{Array1, ArrayView1, ArrayView2, Zip};

use crate::domain::{GroupPartition, SparseCoefficients};
use crate::error::{Result, SrclError};
use crate::linalg::{power_iteration, NormalEquations};

/// Relative objective change that ends the iteration.
pub const INNER_TOLERANCE: f64 = 1e-8;
pub const MAX_INNER_ITERATIONS: usize = 10_000;
const POWER_ITERATION_STEPS: usize = 50;
/// Gradient-mapping bound (relative to `max(1, ‖Aᵀt‖∞)`) required on top of
/// the objective test, so returned points satisfy the optimality conditions.
const STATIONARITY_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SglPenalty {
    pub lambda1: f64,
    pub lambda3: f64,
}

#[derive(Debug, Clone)]
pub struct SglSolution {
    pub coefficients: SparseCoefficients,
    pub objective: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out; the best iterate seen is
    /// returned anyway.
    pub converged: bool,
}

impl SglSolution {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(SrclError::MaxInnerIterationsExceeded(self.iterations))
        }
    }
}

/// `½‖t − Aw‖² + λ1‖w‖₁ + λ3 Σ ψ‖w_G‖`, evaluated directly.
pub fn sgl_objective(
    design: ArrayView2<'_, f64>,
    target: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
    penalty: SglPenalty,
    partition: &GroupPartition,
) -> f64 {
    let r = &target - &design.dot(&w);
    0.5 * r.dot(&r) + penalty_value(w, penalty, partition)
}

fn penalty_value(w: ArrayView1<'_, f64>, penalty: SglPenalty, partition: &GroupPartition) -> f64 {
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let group: f64 = partition
        .iter()
        .map(|(g, psi)| psi * g.iter().map(|&i| w[i] * w[i]).sum::<f64>().sqrt())
        .sum();
    penalty.lambda1 * l1 + penalty.lambda3 * group
}

/// Proximal map of `η(λ1‖·‖₁ + λ3 Σ ψ‖·_G‖)` at `v`.
pub fn sgl_prox(
    v: ArrayView1<'_, f64>,
    step: f64,
    penalty: SglPenalty,
    partition: &GroupPartition,
) -> Array1<f64> {
    let t1 = step * penalty.lambda1;
    let mut u = v.mapv(|x| x.signum() * (x.abs() - t1).max(0.0));
    for (g, psi) in partition.iter() {
        let norm = g.iter().map(|&i| u[i] * u[i]).sum::<f64>().sqrt();
        let t3 = step * penalty.lambda3 * psi;
        let factor = if norm > t3 { 1.0 - t3 / norm } else { 0.0 };
        for &i in g {
            u[i] *= factor;
        }
    }
    u
}

pub fn sparse_group_lasso(
    design: ArrayView2<'_, f64>,
    target: ArrayView1<'_, f64>,
    penalty: SglPenalty,
    partition: &GroupPartition,
) -> Result<SglSolution> {
    if target.len() != design.nrows() {
        return Err(SrclError::DimensionMismatch {
            expected: design.nrows(),
            found: target.len(),
            context: "target vs design rows",
        });
    }
    if partition.n_atoms() != design.ncols()
        || partition.groups().iter().flatten().any(|&i| i >= design.ncols())
    {
        return Err(SrclError::DimensionMismatch {
            expected: design.ncols(),
            found: partition.n_atoms(),
            context: "group partition vs design columns",
        });
    }
    for lambda in [penalty.lambda1, penalty.lambda3] {
        if !(lambda >= 0.0) {
            return Err(SrclError::NegativeLambda(lambda));
        }
    }
    if !design.iter().chain(target.iter()).all(|v| v.is_finite()) {
        return Err(SrclError::NonFiniteData("sparse group lasso input"));
    }
    let normal = NormalEquations::from_design(design, target);
    Ok(solve_normal(&normal, penalty, partition))
}

fn solve_normal(
    normal: &NormalEquations,
    penalty: SglPenalty,
    partition: &GroupPartition,
) -> SglSolution {
    let n = normal.moment.len();
    let gram = &normal.gram;
    let b = &normal.moment;
    let smooth = |w: &Array1<f64>, gw: &Array1<f64>| 0.5 * (normal.target_sq - 2.0 * b.dot(w) + w.dot(gw));
    let total = |w: &Array1<f64>, gw: &Array1<f64>| smooth(w, gw) + penalty_value(w.view(), penalty, partition);

    let mut lipschitz = power_iteration(gram.view(), POWER_ITERATION_STEPS);
    if lipschitz <= 0.0 {
        let w = Array1::zeros(n);
        return SglSolution {
            objective: 0.5 * normal.target_sq,
            coefficients: SparseCoefficients::new(w),
            iterations: 0,
            converged: true,
        };
    }
    let stationarity = STATIONARITY_TOLERANCE * b.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut w = Array1::<f64>::zeros(n);
    let mut gw = Array1::<f64>::zeros(n);
    let mut objective = total(&w, &gw);
    let mut y = w.clone();
    let mut gy = gw.clone();
    let mut theta = 1.0f64;
    let mut best = (objective, w.clone());

    for iteration in 1..=MAX_INNER_ITERATIONS {
        let grad = &gy - b;
        let f_y = smooth(&y, &gy);
        let (w_next, gw_next) = loop {
            let candidate = sgl_prox((&y - &(&grad / lipschitz)).view(), 1.0 / lipschitz, penalty, partition);
            let g_candidate = gram.dot(&candidate);
            let diff = &candidate - &y;
            let bound = f_y + grad.dot(&diff) + 0.5 * lipschitz * diff.dot(&diff);
            if smooth(&candidate, &g_candidate) <= bound + 1e-12 * bound.abs().max(1.0) {
                break (candidate, g_candidate);
            }
            lipschitz *= 2.0;
        };
        let next_objective = total(&w_next, &gw_next);
        let mapping = (&y - &w_next).iter().fold(0.0f64, |m, v| m.max(v.abs())) * lipschitz;

        if next_objective > objective && theta > 1.0 {
            // momentum overshoot: restart from the last accepted point
            theta = 1.0;
            y.assign(&w);
            gy.assign(&gw);
            continue;
        }

        let change = (objective - next_objective).abs() / objective.abs().max(f64::MIN_POSITIVE);
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        Zip::from(&mut y)
            .and(&w_next)
            .and(&w)
            .for_each(|yi, &a, &p| *yi = a + beta * (a - p));
        Zip::from(&mut gy)
            .and(&gw_next)
            .and(&gw)
            .for_each(|yi, &a, &p| *yi = a + beta * (a - p));
        theta = theta_next;
        w = w_next;
        gw = gw_next;
        objective = next_objective;
        if objective <= best.0 {
            best = (objective, w.clone());
        }

        if change < INNER_TOLERANCE && mapping <= stationarity {
            return SglSolution {
                coefficients: SparseCoefficients::new(w),
                objective,
                iterations: iteration,
                converged: true,
            };
        }
    }
    SglSolution {
        coefficients: SparseCoefficients::new(best.1),
        objective: best.0,
        iterations: MAX_INNER_ITERATIONS,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn partition(groups: Vec<Vec<usize>>, n: usize) -> GroupPartition {
        GroupPartition::with_sqrt_size_weights(groups, n).unwrap()
    }

    #[test]
    fn prox_zeroes_small_groups() {
        let p = partition(vec![vec![0, 1], vec![2]], 3);
        let pen = SglPenalty { lambda1: 0.1, lambda3: 1.0 };
        let u = sgl_prox(array![0.5, -0.3, 3.0].view(), 1.0, pen, &p);
        assert_eq!(u[0], 0.0);
        assert_eq!(u[1], 0.0);
        // 2.9 shrunk by 1.0
        assert!((u[2] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn unregularised_matches_least_squares() {
        let design = array![[1.0, 0.2, 0.1], [0.3, 1.0, 0.0], [0.0, 0.4, 1.0], [0.5, 0.5, 0.5]];
        let target = array![1.0, -0.5, 0.25, 0.3];
        let p = partition(vec![vec![0, 1], vec![2]], 3);
        let sol = sparse_group_lasso(
            design.view(),
            target.view(),
            SglPenalty { lambda1: 0.0, lambda3: 0.0 },
            &p,
        )
        .unwrap();
        assert!(sol.converged);
        let grad = design.t().dot(&(design.dot(&sol.coefficients.weights()) - &target));
        assert!(grad.iter().all(|g| g.abs() < 1e-6), "{grad}");
    }

    #[test]
    fn large_group_weight_kills_groups() {
        let design = array![[1.0, 0.2, 0.1, 0.0], [0.3, 1.0, 0.0, 0.2], [0.0, 0.4, 1.0, 0.1], [0.5, 0.5, 0.5, 1.0]];
        let target = array![1.0, -0.5, 0.25, 0.3];
        let p = partition(vec![vec![0, 1], vec![2, 3]], 4);
        let sol = sparse_group_lasso(
            design.view(),
            target.view(),
            SglPenalty { lambda1: 0.0, lambda3: 100.0 },
            &p,
        )
        .unwrap();
        assert!(sol.coefficients.support().is_empty());
    }

    #[test]
    fn rejects_partition_of_wrong_size() {
        let design = Array2::<f64>::eye(3);
        let p = partition(vec![vec![0, 1]], 2);
        assert!(sparse_group_lasso(
            design.view(),
            array![1.0, 2.0, 3.0].view(),
            SglPenalty { lambda1: 0.0, lambda3: 0.0 },
            &p
        )
        .is_err());
    }
}
