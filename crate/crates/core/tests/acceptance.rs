//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srcl_core::augment::{append_rc, augment_with_distance, three_term_objective, StackedSystem};
use srcl_core::data::{generate_synthetic, SyntheticConfig};
use srcl_core::features::{bow_histogram, build_codebook, extract_patches, patch_count, patch_stride, GrayImage};
use srcl_core::metrics::{
    cataract_metrics, integral_agreement, mean_absolute_error, pearson_correlation, tolerance_ratio,
    tolerance_ratio_decimal,
};
use srcl_core::solvers::{lars_l1, sparse_group_lasso, LarsStop, SglPenalty};
use srcl_core::srcl::{baseline_grade, rc_grade_update, top_k_grade_range};
use srcl_core::{
    grade_batch, solve_variant, Dictionary, DistanceVector, FeatureVector, GroupPartition, MethodKind, MethodVariant,
    RangeConstraint, SparseCoefficients, Task, VariantSolution,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((m, n), |_| rng.random_range(lo..hi))
}

fn random_vector(rng: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> Array1<f64> {
    Array1::from_shape_fn(m, |_| rng.random_range(lo..hi))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(1..=30);
        let n = rng.random_range(2..=20);
        let x = random_matrix(&mut rng, m, n, -2.0, 2.0);
        let y = random_vector(&mut rng, m, -2.0, 2.0);
        let g = random_vector(&mut rng, n, 0.0, 1.0);
        let d = random_vector(&mut rng, n, 0.0, 3.0);
        let w = random_vector(&mut rng, n, -1.5, 1.5);
        let rc = RangeConstraint::new(rng.random_range(0.0..500.0), rng.random_range(0.0..1.0)).unwrap();
        let lambda2 = rng.random_range(0.0..1e4);

        let fv = FeatureVector::new(y.clone()).unwrap();
        let dict = Dictionary::new(x.clone(), g.clone()).unwrap();
        let dv = DistanceVector::custom(d).unwrap();
        let base = StackedSystem::from_problem(&fv, &dict).unwrap();

        let only_rc = append_rc(base.clone(), g.view(), &rc).unwrap();
        let only_d = augment_with_distance(base, &dv, lambda2).unwrap();
        let both = augment_with_distance(only_rc.clone(), &dv, lambda2).unwrap();
        let cases = [
            (only_rc.residual_sq(w.view()), None, Some(&rc)),
            (only_d.residual_sq(w.view()), Some((&dv, lambda2)), None),
            (both.residual_sq(w.view()), Some((&dv, lambda2)), Some(&rc)),
        ];
        for (stacked, dist, range) in cases {
            let direct = three_term_objective(y.view(), x.view(), g.view(), w.view(), dist, range);
            worst = worst.max(rel_err(stacked, direct));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && within(elapsed, Duration::from_secs(5)),
        format!("1000 instances x 3 augmentations, max rel err {worst:.2e} (tol 1e-9), {:.2?} (limit 5 s)", elapsed),
    )
}

/// Minimum of `‖t − Aw‖²` over the `[−2, 2]ⁿ` grid at `step` restricted to
/// `‖w‖₁ ≤ bound`.
fn grid_min(a: ArrayView2<'_, f64>, t: ArrayView1<'_, f64>, bound: f64, step: f64) -> f64 {
    let n = a.ncols();
    let gram = a.t().dot(&a);
    let g: Vec<f64> = gram.iter().copied().collect();
    let b = a.t().dot(&t).to_vec();
    let tt = t.dot(&t);
    let ticks = (4.0 / step).round() as i64;
    let at = |i: i64| -2.0 + i as f64 * step;
    let eval = |w: &[f64]| {
        let mut v = tt;
        for i in 0..n {
            v -= 2.0 * b[i] * w[i];
            for j in 0..n {
                v += w[i] * g[i * n + j] * w[j];
            }
        }
        v
    };
    let budget = bound + 1e-12;
    // Tick indices whose value lies in [−r, r].
    let span = |r: f64| -> std::ops::RangeInclusive<i64> {
        let r = r.min(2.0);
        (((2.0 - r) / step).ceil() as i64).max(0)..=(((2.0 + r) / step).floor() as i64).min(ticks)
    };
    let mut best = f64::INFINITY;
    let mut w = vec![0.0; n];
    let mut visit = |w: &[f64]| {
        if w.iter().map(|v| v.abs()).sum::<f64>() <= budget {
            best = best.min(eval(w));
        }
    };
    match n {
        1 => {
            for i in span(budget) {
                w[0] = at(i);
                visit(&w);
            }
        }
        2 => {
            for i in span(budget) {
                w[0] = at(i);
                for j in span(budget - w[0].abs()) {
                    w[1] = at(j);
                    visit(&w);
                }
            }
        }
        3 => {
            for i in span(budget) {
                w[0] = at(i);
                for j in span(budget - w[0].abs()) {
                    w[1] = at(j);
                    for k in span(budget - w[0].abs() - w[1].abs()) {
                        w[2] = at(k);
                        visit(&w);
                    }
                }
            }
        }
        _ => unreachable!("grid oracle handles n ≤ 3"),
    }
    best
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut checked, mut rejected, mut n3) = (0, 0, 0);
    let (mut worst_gap, mut worst_undershoot) = (0.0f64, 0.0f64);
    while checked < 200 {
        // One instance in four uses three columns; the rest alternate 1 and 2.
        let n = if checked % 4 == 3 { 3 } else { 1 + checked % 2 };
        let m = 6;
        let mut a = random_matrix(&mut rng, m, n, -1.0, 1.0);
        for mut col in a.columns_mut() {
            let norm = col.dot(&col).sqrt();
            col.mapv_inplace(|v| v * 0.12 / norm);
        }
        let w_true = random_vector(&mut rng, n, -1.5, 1.5);
        let t = a.dot(&w_true) + random_vector(&mut rng, m, -0.02, 0.02);
        let steps = rng.random_range(1..=n + 1);
        let sol = lars_l1(a.view(), t.view(), steps).unwrap();
        let w = sol.coefficients.weights();
        if matches!(sol.stop, LarsStop::Breakdown { .. }) || w.iter().any(|v| v.abs() > 1.9) {
            rejected += 1;
            continue;
        }
        let bound: f64 = w.iter().map(|v| v.abs()).sum();
        let r = &t - &a.dot(&w);
        let ours = r.dot(&r);
        let grid = grid_min(a.view(), t.view(), bound, 1e-2);
        worst_gap = worst_gap.max((ours - grid).abs());
        worst_undershoot = worst_undershoot.max(grid - ours);
        checked += 1;
        if n == 3 {
            n3 += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst_gap <= 1e-3 && within(elapsed, Duration::from_secs(60)),
        format!(
            "200 instances ({n3} with n=3, {rejected} rejected off-grid), max |lars - grid| {worst_gap:.2e} (tol 1e-3), \
             max grid-above-lars {worst_undershoot:.2e}, {:.2?} (limit 60 s)",
            elapsed
        ),
    )
}

/// Worst subgradient violation over active coordinates and inactive
/// coordinates of live groups, plus the worst group-zero violation.
fn sgl_kkt(a: ArrayView2<'_, f64>, t: ArrayView1<'_, f64>, w: ArrayView1<'_, f64>, p: SglPenalty, groups: &GroupPartition) -> (f64, f64, usize) {
    let neg_grad = a.t().dot(&(&t - &a.dot(&w)));
    let (mut active, mut zero, mut killed) = (0.0f64, f64::NEG_INFINITY, 0);
    for (idx, psi) in groups.iter() {
        let norm = idx.iter().map(|&i| w[i] * w[i]).sum::<f64>().sqrt();
        if norm == 0.0 {
            killed += 1;
            let shrunk = idx
                .iter()
                .map(|&i| (neg_grad[i].abs() - p.lambda1).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt();
            zero = zero.max(shrunk - p.lambda3 * psi);
            continue;
        }
        for &i in idx {
            let v = if w[i] != 0.0 {
                (neg_grad[i] - p.lambda1 * w[i].signum() - p.lambda3 * psi * w[i] / norm).abs()
            } else {
                neg_grad[i].abs() - p.lambda1
            };
            active = active.max(v);
        }
    }
    (active, zero, killed)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut worst, mut worst_zero, mut killed, mut unconverged) = (0.0f64, f64::NEG_INFINITY, 0, 0);
    for _ in 0..200 {
        let m = rng.random_range(8..=25);
        let n = rng.random_range(3..=15);
        let a = random_matrix(&mut rng, m, n, -1.0, 1.0);
        let t = random_vector(&mut rng, m, -2.0, 2.0);
        let n_groups = rng.random_range(1..=4.min(n));
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
        for i in 0..n {
            let gi = if i < n_groups { i } else { rng.random_range(0..n_groups) };
            members[gi].push(i);
        }
        let groups = GroupPartition::with_sqrt_size_weights(members, n).unwrap();
        let p = SglPenalty { lambda1: rng.random_range(0.0..1.0), lambda3: rng.random_range(0.0..2.0) };
        let sol = sparse_group_lasso(a.view(), t.view(), p, &groups).unwrap();
        if !sol.converged {
            unconverged += 1;
        }
        let (v, z, k) = sgl_kkt(a.view(), t.view(), sol.coefficients.weights(), p, &groups);
        worst = worst.max(v);
        worst_zero = worst_zero.max(z);
        killed += k;
    }
    let elapsed = start.elapsed();
    let zero_ok = worst_zero <= 1e-5;
    outcome(
        worst <= 1e-5 && zero_ok && unconverged == 0 && within(elapsed, Duration::from_secs(60)),
        format!(
            "200 instances, max coordinate violation {worst:.2e} (tol 1e-5), {killed} killed groups with max \
             group-zero excess {:.2e}, {unconverged} unconverged, {:.2?} (limit 60 s)",
            worst_zero.max(0.0),
            elapsed
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(2..30);
        let g = random_vector(&mut rng, n, 0.0, 1.0);
        let w = SparseCoefficients::new(random_vector(&mut rng, n, 0.0, 1.0));
        let base = baseline_grade(&w, g.view()).unwrap();
        for alpha in [-7.5, -1.0, -1e-3, 1e-4, 0.5, 3.0, 1e3] {
            let scaled = SparseCoefficients::new(w.weights().mapv(|v| v * alpha));
            worst = worst.max((baseline_grade(&scaled, g.view()).unwrap() - base).abs());
        }
    }
    let hand = [
        (vec![2.0, 1.0], vec![0.3, 0.9], 0.42),
        (vec![1.0, 0.0, 0.0], vec![0.3, 0.9, 0.5], 0.3),
        (vec![1.0, 1.0], vec![0.4, 0.6], 0.5),
    ];
    let mut hand_worst = 0.0f64;
    for (w, g, expected) in hand {
        let got = rc_grade_update(&SparseCoefficients::new(Array1::from(w)), Array1::from(g).view()).unwrap();
        hand_worst = hand_worst.max((got - expected).abs());
    }
    let w = SparseCoefficients::new(ndarray::array![0.5, 0.5, 0.0, 0.0]);
    let baseline_hand = (baseline_grade(&w, ndarray::array![0.6, 0.8, 0.2, 0.1].view()).unwrap() - 0.7).abs();
    hand_worst = hand_worst.max(baseline_hand);
    outcome(
        worst <= 1e-12 && hand_worst <= 1e-12,
        format!("scale invariance max dev {worst:.2e}, hand values max dev {hand_worst:.2e} (tol 1e-12)"),
    )
}

/// Shared synthetic run behind criteria 4, 6 and 7.
struct Benchmark {
    truth: Vec<f64>,
    dict_grades: Array1<f64>,
    grade_range: (f64, f64),
    results: Vec<(MethodKind, Vec<VariantSolution>)>,
    elapsed: Duration,
}

fn run_benchmark() -> Benchmark {
    let start = Instant::now();
    let ds = generate_synthetic(&SyntheticConfig::default()).unwrap();
    let kinds = [
        MethodKind::Sc,
        MethodKind::ScRc,
        MethodKind::Sdc,
        MethodKind::SdcRc,
        MethodKind::Ssgl,
        MethodKind::SsglRc,
    ];
    let results = kinds
        .iter()
        .map(|&kind| {
            let v = MethodVariant::preset(kind, Task::Cdr, &ds.dictionary).unwrap();
            let sols = grade_batch(&ds.tests, &ds.dictionary, &v)
                .into_iter()
                .map(|r| r.unwrap())
                .collect();
            (kind, sols)
        })
        .collect();
    Benchmark {
        truth: ds.test_grades,
        dict_grades: ds.dictionary.grades().to_owned(),
        grade_range: ds.dictionary.grade_range(),
        results,
        elapsed: start.elapsed(),
    }
}

impl Benchmark {
    fn solutions(&self, kind: MethodKind) -> &[VariantSolution] {
        &self.results.iter().find(|(k, _)| *k == kind).unwrap().1
    }

    fn grades(&self, kind: MethodKind) -> Vec<f64> {
        self.solutions(kind).iter().map(|s| s.grade).collect()
    }
}

fn criterion_4(b: &Benchmark) -> Outcome {
    let (lo, hi) = b.grade_range;
    let (mut checked, mut violations) = (0, 0);
    for (kind, sols) in &b.results {
        if !kind.is_range_constrained() {
            continue;
        }
        for s in sols {
            for g in s.trace.iterations.iter().map(|e| e.grade).chain([s.grade]) {
                checked += 1;
                if !(lo <= g && g <= hi) {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0 && checked > 0,
        format!("{checked} intermediate/final RC grades, {violations} outside [{lo:.4}, {hi:.4}]"),
    )
}

fn criterion_6(b: &Benchmark) -> Outcome {
    let pairs = [
        (MethodKind::Sc, MethodKind::ScRc),
        (MethodKind::Sdc, MethodKind::SdcRc),
        (MethodKind::Ssgl, MethodKind::SsglRc),
    ];
    let (mut mae_ok, mut mae_strict, mut corr_better) = (true, 0, 0);
    let mut parts = Vec::new();
    for (base, rc) in pairs {
        let (pb, pr) = (b.grades(base), b.grades(rc));
        let (eb, er) = (mean_absolute_error(&b.truth, &pb).unwrap(), mean_absolute_error(&b.truth, &pr).unwrap());
        let (cb, cr) = (
            pearson_correlation(&b.truth, &pb).unwrap_or(f64::NAN),
            pearson_correlation(&b.truth, &pr).unwrap_or(f64::NAN),
        );
        mae_ok &= er <= eb;
        if er < eb {
            mae_strict += 1;
        }
        if cr > cb {
            corr_better += 1;
        }
        parts.push(format!("{base} {eb:.4}/r={cb:.3} vs {rc} {er:.4}/r={cr:.3}"));
    }
    let elapsed_ok = within(b.elapsed, Duration::from_secs(600));
    outcome(
        mae_ok && mae_strict >= 2 && corr_better >= 2 && elapsed_ok,
        format!(
            "MAE {}; strict MAE wins {mae_strict}/3, correlation wins {corr_better}/3, {:.1?} for all six methods (limit 600 s)",
            parts.join("; "),
            b.elapsed
        ),
    )
}

fn criterion_7(b: &Benchmark) -> Outcome {
    let grades = &b.dict_grades;
    let sols = b.solutions(MethodKind::ScRc);
    let mut shrunk = 0;
    for s in sols {
        let (w0, _) = s.initial.as_ref().unwrap();
        let r0 = top_k_grade_range(w0.weights(), grades.view(), 20);
        let r1 = top_k_grade_range(s.trace.iterations[0].weights.view(), grades.view(), 20);
        if r1 < r0 {
            shrunk += 1;
        }
    }
    let frac = shrunk as f64 / sols.len() as f64;
    outcome(
        frac >= 0.8,
        format!("top-20 grade range shrinks in {shrunk}/{} samples ({:.1}%, threshold 80%)", sols.len(), 100.0 * frac),
    )
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    let mut real = |name: &str, got: f64, expected: f64| {
        if (got - expected).abs() > 1e-9 {
            failures.push(format!("{name}: {got} != {expected}"));
        }
    };
    real("mae identity", mean_absolute_error(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
    real("mae hand", mean_absolute_error(&[1.0, 3.0], &[1.2, 2.8]).unwrap(), 0.2);
    let t = [0.2, 0.5, 0.4, 0.9];
    let neg: Vec<f64> = t.iter().map(|v| -v).collect();
    real("pearson identity", pearson_correlation(&t, &t).unwrap(), 1.0);
    real("pearson negation", pearson_correlation(&t, &neg).unwrap(), -1.0);
    // cov = 3, var = 2 and 14/3 after centring (1,2,3) and (1,2,4).
    real("pearson hand", pearson_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap(), 3.0 / (2.0f64 * 14.0 / 3.0).sqrt());
    real("epsilon", cataract_metrics(&[1.0, 3.0], &[1.2, 2.8]).unwrap().mean_abs_error, 0.2);

    let mut ratio = |name: &str, got: f64, expected: f64| {
        if got != expected {
            failures.push(format!("{name}: {got} != {expected}"));
        }
    };
    ratio("R0 identity", integral_agreement(&[1.2, 3.7], &[1.2, 3.7]).unwrap(), 1.0);
    ratio("R0 1.9 vs 2.1", integral_agreement(&[1.9], &[2.1]).unwrap(), 0.0);
    ratio("R0 1.2 vs 1.9", integral_agreement(&[1.2], &[1.9]).unwrap(), 1.0);
    ratio("R1 2.2 vs 3.1", tolerance_ratio(&[2.2], &[3.1], 1.0).unwrap(), 1.0);
    ratio("R0.5 2.2 vs 3.1", tolerance_ratio(&[2.2], &[3.1], 0.5).unwrap(), 0.0);
    ratio("tol 0 equals R0", tolerance_ratio(&[1.9, 1.2], &[2.1, 1.9], 0.0).unwrap(), 0.5);
    ratio("huge tol", tolerance_ratio(&[0.3, 5.0], &[5.0, 0.3], 1e9).unwrap(), 1.0);
    ratio("decimal R0.5", tolerance_ratio_decimal(&[2.2, 1.0], &[2.6, 1.6], 0.5).unwrap(), 0.5);
    let count = failures.len();
    outcome(count == 0, if count == 0 { "all 14 golden values match".into() } else { failures.join("; ") })
}

fn criterion_9() -> Outcome {
    let mut count_failures = 0;
    let mut cases = 0;
    for h in [3usize, 4, 7, 10, 31, 50, 64] {
        for w in [3usize, 5, 8, 17, 50] {
            for s in [1usize, 2, 3, 4, 5] {
                if h < s || w < s {
                    continue;
                }
                cases += 1;
                let stride = patch_stride(s);
                let formula = ((h - s) / stride + 1) * ((w - s) / stride + 1);
                let img = GrayImage::new(Array2::from_elem((h, w), 0.5)).unwrap();
                let n = extract_patches(&img, s).unwrap().len();
                if n != formula || patch_count(h, w, s) != formula {
                    count_failures += 1;
                }
            }
        }
    }

    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(909);
        let images: Vec<GrayImage> = (0..4)
            .map(|_| GrayImage::new(Array2::from_shape_fn((24, 30), |_| rng.random_range(0.0..1.0))).unwrap())
            .collect();
        let patches: Vec<Vec<f64>> = images.iter().flat_map(|i| extract_patches(i, 3).unwrap()).collect();
        let cb = build_codebook(&patches, 16, 42).unwrap();
        let hists: Vec<Vec<u64>> = images
            .iter()
            .map(|i| bow_histogram(i, &cb).unwrap().values().iter().map(|v| v.to_bits()).collect())
            .collect();
        let cb_bits: Vec<u64> = cb.centroids.iter().flatten().map(|v| v.to_bits()).collect();
        (cb_bits, hists)
    };
    let (first, second) = (run(), run());
    let deterministic = first == second;
    let probability = first.1.iter().all(|h| {
        let vals: Vec<f64> = h.iter().map(|b| f64::from_bits(*b)).collect();
        vals.iter().all(|&v| v >= 0.0) && (vals.iter().sum::<f64>() - 1.0).abs() < 1e-12
    });
    outcome(
        count_failures == 0 && deterministic && probability,
        format!(
            "{cases} (H, W, s) cases, {count_failures} count mismatches; histograms are probability vectors: {probability}; \
             byte-exact across runs: {deterministic}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let ds = generate_synthetic(&SyntheticConfig { n_ref: 40, n_test: 10, dim: 900, ..SyntheticConfig::default() }).unwrap();
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for rc_kind in [MethodKind::ScRc, MethodKind::SdcRc, MethodKind::SsglRc] {
        let base = MethodVariant::preset(rc_kind.base(), Task::Cdr, &ds.dictionary).unwrap();
        let mut rc = MethodVariant::preset(rc_kind, Task::Cdr, &ds.dictionary).unwrap();
        rc.params.gamma = 0.0;
        rc.params.max_outer_iterations = 1;
        for (i, y) in ds.tests.iter().enumerate() {
            let wb = solve_variant(y, &ds.dictionary, &base).unwrap().coefficients;
            let wr = solve_variant(y, &ds.dictionary, &rc).unwrap().coefficients;
            compared += 1;
            let same = wb.weights().iter().zip(wr.weights().iter()).all(|(a, b)| a.to_bits() == b.to_bits());
            if !same {
                mismatches.push(format!("{rc_kind} sample {i}"));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{compared} baseline/RC pairs, {} not bit-identical {:?}", mismatches.len(), mismatches),
    )
}

fn main() {
    let mut outcomes: Vec<(usize, &str, Outcome)> = vec![
        (1, "stacking identities", criterion_1()),
        (2, "LARS vs grid oracle", criterion_2()),
        (3, "sparse group lasso KKT", criterion_3()),
        (5, "grade formulas", criterion_5()),
    ];
    let bench = run_benchmark();
    outcomes.push((4, "RC grade bound", criterion_4(&bench)));
    outcomes.push((6, "synthetic ordering", criterion_6(&bench)));
    outcomes.push((7, "top-20 range shrink", criterion_7(&bench)));
    outcomes.push((8, "metric golden values", criterion_8()));
    outcomes.push((9, "bag-of-words pipeline", criterion_9()));
    outcomes.push((10, "zero-gamma reduction", criterion_10()));
    outcomes.sort_by_key(|(n, _, _)| *n);

    let mut failed = 0;
    for (n, name, o) in &outcomes {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {tag} {name}: {}", o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
