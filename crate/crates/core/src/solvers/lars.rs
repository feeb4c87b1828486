//! Least angle regression with the lasso modification.
//!
//! The path starts at `w = 0` and moves along the equiangular direction of
//! the active set. A step ends at the next breakpoint: a column joins the
//! active set, an active coefficient crosses zero and is dropped, or all
//! correlations vanish (least-squares end of the path). Every iterate is
//! therefore the ℓ1-constrained least-squares solution for its own ℓ1 norm.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::domain::SparseCoefficients;
use crate::error::{Result, SrclError};
use crate::linalg::NormalEquations;

/// Why the path stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LarsStop {
    /// The step budget ran out.
    StepBudget,
    /// All correlations reached zero: least-squares end of the path.
    PathEnd,
    /// The next column would have made the active Gram matrix singular.
    /// The column was not added and the path halted at the current iterate.
    Breakdown { step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LarsSolution {
    pub coefficients: SparseCoefficients,
    pub steps: usize,
    pub stop: LarsStop,
}

impl LarsSolution {
    /// Turns a halted path into [`SrclError::NumericalBreakdown`].
    pub fn require_complete(self) -> Result<Self> {
        match self.stop {
            LarsStop::Breakdown { step } => Err(SrclError::NumericalBreakdown { step }),
            _ => Ok(self),
        }
    }
}

/// Runs at most `max_steps` LARS-lasso steps on `‖target − design·w‖²`.
pub fn lars_l1(
    design: ArrayView2<'_, f64>,
    target: ArrayView1<'_, f64>,
    max_steps: usize,
) -> Result<LarsSolution> {
    let normal = prepare(design, target, max_steps)?;
    let mut path = LarsPath::new(&normal);
    path.run(max_steps, |_| {});
    Ok(path.finish())
}

/// Like [`lars_l1`] but also returns the iterate after every step.
pub fn lars_path(
    design: ArrayView2<'_, f64>,
    target: ArrayView1<'_, f64>,
    max_steps: usize,
) -> Result<(LarsSolution, Vec<Array1<f64>>)> {
    let normal = prepare(design, target, max_steps)?;
    let mut path = LarsPath::new(&normal);
    let mut iterates = Vec::new();
    path.run(max_steps, |w| iterates.push(w.to_owned()));
    Ok((path.finish(), iterates))
}

fn prepare(
    design: ArrayView2<'_, f64>,
    target: ArrayView1<'_, f64>,
    max_steps: usize,
) -> Result<NormalEquations> {
    if design.ncols() == 0 {
        return Err(SrclError::DimensionMismatch {
            expected: 1,
            found: 0,
            context: "design columns",
        });
    }
    if target.len() != design.nrows() {
        return Err(SrclError::DimensionMismatch {
            expected: design.nrows(),
            found: target.len(),
            context: "target vs design rows",
        });
    }
    if max_steps == 0 {
        return Err(SrclError::InvalidHyperparameters(
            "LARS needs at least one step".into(),
        ));
    }
    if !design.iter().chain(target.iter()).all(|v| v.is_finite()) {
        return Err(SrclError::NonFiniteData("LARS input"));
    }
    Ok(NormalEquations::from_design(design, target))
}

/// Relative pivot below which a new active column counts as dependent.
const PIVOT_TOLERANCE: f64 = 1e-10;

struct LarsPath<'a> {
    normal: &'a NormalEquations,
    w: Array1<f64>,
    corr: Array1<f64>,
    active: Vec<usize>,
    is_active: Vec<bool>,
    signs: Vec<f64>,
    chol: Cholesky,
    steps: usize,
    stop: Option<LarsStop>,
}

impl<'a> LarsPath<'a> {
    fn new(normal: &'a NormalEquations) -> Self {
        let n = normal.moment.len();
        Self {
            normal,
            w: Array1::zeros(n),
            corr: normal.moment.clone(),
            active: Vec::new(),
            is_active: vec![false; n],
            signs: Vec::new(),
            chol: Cholesky::default(),
            steps: 0,
            stop: None,
        }
    }

    fn finish(self) -> LarsSolution {
        LarsSolution {
            coefficients: SparseCoefficients::new(self.w),
            steps: self.steps,
            stop: self.stop.unwrap_or(LarsStop::StepBudget),
        }
    }

    fn refresh_correlations(&mut self) {
        let gram = &self.normal.gram;
        let mut c = self.normal.moment.clone();
        for &j in &self.active {
            let wj = self.w[j];
            if wj != 0.0 {
                c.scaled_add(-wj, &gram.column(j));
            }
        }
        self.corr = c;
    }

    fn max_inactive(&self, skip: Option<usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &c) in self.corr.iter().enumerate() {
            if self.is_active[j] || Some(j) == skip {
                continue;
            }
            if best.is_none_or(|(_, b)| c.abs() > b) {
                best = Some((j, c.abs()));
            }
        }
        best
    }

    /// Adds column `j`; returns false if it is linearly dependent on the
    /// current active set.
    fn activate(&mut self, j: usize) -> bool {
        let gram = &self.normal.gram;
        let cross: Vec<f64> = self.active.iter().map(|&a| gram[(a, j)]).collect();
        if !self.chol.push(&cross, gram[(j, j)]) {
            return false;
        }
        self.active.push(j);
        self.is_active[j] = true;
        self.signs.push(self.corr[j].signum());
        true
    }

    fn deactivate(&mut self, positions: &[usize]) {
        let mut pos = positions.to_vec();
        pos.sort_unstable_by(|a, b| b.cmp(a));
        for p in pos {
            let j = self.active.remove(p);
            self.signs.remove(p);
            self.is_active[j] = false;
            self.w[j] = 0.0;
        }
        let gram = &self.normal.gram;
        self.chol = Cholesky::default();
        for (k, &j) in self.active.iter().enumerate() {
            let cross: Vec<f64> = self.active[..k].iter().map(|&a| gram[(a, j)]).collect();
            let ok = self.chol.push(&cross, gram[(j, j)]);
            debug_assert!(ok, "subset of an independent set stays independent");
        }
    }

    fn run(&mut self, max_steps: usize, mut on_step: impl FnMut(ArrayView1<'_, f64>)) {
        let scale = self.normal.moment.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let zero = 1e-14 * scale.max(f64::MIN_POSITIVE);
        let Some((first, c0)) = self.max_inactive(None) else {
            self.stop = Some(LarsStop::PathEnd);
            return;
        };
        if c0 <= zero {
            self.stop = Some(LarsStop::PathEnd);
            return;
        }
        if !self.activate(first) {
            self.stop = Some(LarsStop::Breakdown { step: 1 });
            return;
        }
        let mut just_dropped: Option<usize> = None;

        while self.steps < max_steps {
            let level = self
                .active
                .iter()
                .map(|&j| self.corr[j].abs())
                .fold(0.0f64, f64::max);
            if level <= zero {
                self.stop = Some(LarsStop::PathEnd);
                return;
            }
            let direction = self.chol.solve(&self.signs);
            let gram = &self.normal.gram;

            // Correlation change per unit step: a = G[:, A] d.
            let mut slope = Array1::<f64>::zeros(self.w.len());
            for (k, &j) in self.active.iter().enumerate() {
                slope.scaled_add(direction[k], &gram.column(j));
            }

            let mut step = level;
            let mut entering: Option<usize> = None;
            for j in 0..self.w.len() {
                if self.is_active[j] || Some(j) == just_dropped {
                    continue;
                }
                let (c, a) = (self.corr[j], slope[j]);
                if level - c.abs() <= 1e-12 * level {
                    // already tied: joins with a zero-length step
                    if 0.0 < step || entering.is_none() {
                        step = 0.0;
                        entering = Some(j);
                    }
                    continue;
                }
                for gamma in [(level - c) / (1.0 - a), (level + c) / (1.0 + a)] {
                    if gamma.is_finite() && gamma > 0.0 && gamma < step {
                        step = gamma;
                        entering = Some(j);
                    }
                }
            }
            let mut dropping: Vec<usize> = Vec::new();
            for (k, &j) in self.active.iter().enumerate() {
                let d = direction[k];
                if d == 0.0 {
                    continue;
                }
                let gamma = -self.w[j] / d;
                if gamma > 0.0 && gamma <= step {
                    if gamma < step {
                        dropping.clear();
                        step = gamma;
                        entering = None;
                    }
                    dropping.push(k);
                }
            }

            for (k, &j) in self.active.iter().enumerate() {
                self.w[j] += step * direction[k];
            }
            self.steps += 1;
            just_dropped = None;

            if !dropping.is_empty() {
                for &k in &dropping {
                    self.w[self.active[k]] = 0.0;
                }
                just_dropped = dropping.last().map(|&k| self.active[k]);
                self.deactivate(&dropping);
                self.refresh_correlations();
                on_step(self.w.view());
                if self.active.is_empty() {
                    match self.max_inactive(None) {
                        Some((j, c)) if c > zero => {
                            if !self.activate(j) {
                                self.stop = Some(LarsStop::Breakdown {
                                    step: self.steps + 1,
                                });
                                return;
                            }
                        }
                        _ => {
                            self.stop = Some(LarsStop::PathEnd);
                            return;
                        }
                    }
                }
                continue;
            }

            self.refresh_correlations();
            on_step(self.w.view());
            match entering {
                None => {
                    self.stop = Some(LarsStop::PathEnd);
                    return;
                }
                Some(j) => {
                    if self.steps < max_steps && !self.activate(j) {
                        self.stop = Some(LarsStop::Breakdown {
                            step: self.steps + 1,
                        });
                        return;
                    }
                }
            }
        }
    }
}

/// Lower-triangular factor of the active Gram matrix, grown one column at a
/// time.
#[derive(Debug, Default)]
struct Cholesky {
    rows: Vec<Vec<f64>>,
}

impl Cholesky {
    fn push(&mut self, cross: &[f64], diag: f64) -> bool {
        let z = self.forward(cross);
        let pivot_sq = diag - z.iter().map(|v| v * v).sum::<f64>();
        if !(pivot_sq > PIVOT_TOLERANCE * diag.abs()) || diag <= 0.0 {
            return false;
        }
        let mut row = z;
        row.push(pivot_sq.sqrt());
        self.rows.push(row);
        true
    }

    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(b.len());
        for (i, row) in self.rows.iter().enumerate() {
            let s: f64 = row[..i].iter().zip(&z).map(|(l, zj)| l * zj).sum();
            z.push((b[i] - s) / row[i]);
        }
        z
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.forward(b);
        for i in (0..x.len()).rev() {
            let s: f64 = ((i + 1)..x.len()).map(|k| self.rows[k][i] * x[k]).sum();
            x[i] = (x[i] - s) / self.rows[i][i];
        }
        x
    }
}
