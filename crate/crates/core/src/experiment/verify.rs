//! Seeded sweep over the recovery, certificate and bound checks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::Result;
use crate::linop::{compute_singular_system, DenseMatrix, SingularSystem, TruncatedOperator};
use crate::models::noise::standard_normal;
use crate::models::{build_heat_matrix, HeatModelConfig};
use crate::solvers::{
    reconstruct, solve_basis_pursuit, solve_l1, AlphaRule, Formulation, InverseProblem, SolveSpec, KKT_REL_TOL,
};
use crate::theory::{
    bregman_ledger, build_lambda_k, check_condition_a2, check_nonparallel, max_index_lemma, recovery_certificate,
    tikhonov_proximity, DualElement, BOUND_SLACK,
};
use crate::weighting::{compute_weights, Basis, WeightingScheme, DEFAULT_TAU};

/// Magnitude tolerance of the one-sparse recovery check.
pub const GAMMA_TOL: f64 = 1e-5;
/// Tolerance on recovering `φ_j` by basis pursuit.
pub const BP_RECOVERY_TOL: f64 = 1e-5;
/// Largest accepted dual-certificate gap of a basis-pursuit solution.
pub const BP_GAP_TOL: f64 = 1e-8;
/// Largest accepted relative mismatch between `‖λ‖²` and its singular-value series.
pub const SERIES_TOL: f64 = 1e-9;
/// Admissible range of the log-log slope of the Bregman bound against `δ`.
pub const SLOPE_RANGE: (f64, f64) = (0.5, 2.0);
/// Noise norms of the Bregman sweep; `α = δ`.
pub const BREGMAN_DELTAS: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];
/// Regularization parameters of the Tikhonov proximity sweep.
pub const PROXIMITY_ALPHAS: [f64; 9] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub seeds: Vec<u64>,
    /// Fixed `(rows, cols)` shapes; empty means rows in 6..=12 and cols in 10..=24 drawn per seed.
    pub sizes: Vec<(usize, usize)>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seeds: (0..50).collect(),
            sizes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// Smallest distance to the failure threshold over all cases; negative when failing.
    pub worst_margin: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            passed: true,
            cases: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            detail: String::new(),
        }
    }

    /// Records one case whose margin must be nonnegative.
    fn case(&mut self, margin: f64, what: impl FnOnce() -> String) {
        self.cases += 1;
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
        if margin < 0.0 {
            self.failures += 1;
            if self.passed {
                self.detail = what();
            }
            self.passed = false;
        }
    }

    fn error(&mut self, msg: String) {
        self.case(f64::NEG_INFINITY, || msg);
    }

    fn finish(mut self) -> Self {
        if self.cases == 0 {
            self.passed = false;
            self.detail = "no cases were checked".into();
        }
        if self.worst_margin == f64::INFINITY || self.worst_margin == 0.0 {
            self.worst_margin = 0.0;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seeds: Vec<u64>,
    pub sizes: Vec<(usize, usize)>,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }
}

fn shape(seed: u64, opts: &VerifyOptions, i: usize) -> (usize, usize) {
    if opts.sizes.is_empty() {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (rng.random_range(6..=12), rng.random_range(10..=24))
    } else {
        opts.sizes[i % opts.sizes.len()]
    }
}

/// Gaussian `rows × cols` matrix determined by `seed`.
pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> DenseMatrix {
    let g = standard_normal(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1), rows * cols);
    DenseMatrix::from_row_major(rows, cols, g.as_slice()).expect("positive shape")
}

struct Instance {
    a: DenseMatrix,
    op: TruncatedOperator,
    w: WeightingScheme,
}

fn instance(a: DenseMatrix, k: usize) -> Result<Instance> {
    let svd = Arc::new(compute_singular_system(&a)?);
    let op = TruncatedOperator::new(svd, k)?;
    let w = compute_weights(&op, &Basis::Canonical, DEFAULT_TAU)?;
    Ok(Instance { a, op, w })
}

fn random_instances(opts: &VerifyOptions) -> Vec<(u64, Result<Instance>)> {
    opts.seeds
        .iter()
        .enumerate()
        .map(|(i, &seed)| {
            let (m, n) = shape(seed, opts, i);
            (seed, instance(random_matrix(seed, m, n), (m / 2).max(1)))
        })
        .collect()
}

/// `W_L1_MODFID` with exact data `K φ_j` and `α = 0.3‖P_kφ_j‖` returns `γ φ_j`.
pub fn check_one_sparse_recovery(opts: &VerifyOptions) -> CheckResult {
    let mut res = CheckResult::new("one_sparse_recovery");
    for (seed, inst) in random_instances(opts) {
        let inst = match inst {
            Ok(i) => i,
            Err(e) => {
                res.error(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let n = inst.a.cols();
        for j in (0..n).filter(|&j| inst.w.admissible(j)) {
            let alpha = 0.3 * inst.w.proj_norms[j];
            let outcome = (|| -> Result<(Vec<usize>, f64, f64)> {
                let y = inst.a.column(j);
                let prob = InverseProblem::new(inst.a.clone(), y, 0.0)?;
                let spec = SolveSpec::fixed(Formulation::WeightedModFid, alpha);
                let rec = solve_l1(&prob, &inst.op, Some(&inst.w), &spec)?;
                let cert = recovery_certificate(&inst.a, &inst.op, &inst.w, &Basis::Canonical, j, alpha)?;
                Ok((rec.support, rec.x[j], cert.gamma.unwrap_or(f64::NAN)))
            })();
            match outcome {
                Ok((support, xj, gamma)) => {
                    let err = (xj - gamma).abs();
                    let margin = if support == [j] { GAMMA_TOL - err } else { -1.0 };
                    res.case(margin, || {
                        format!("seed {seed}, j = {j}: support {support:?}, x_j = {xj}, gamma = {gamma}")
                    });
                }
                Err(e) => res.error(format!("seed {seed}, j = {j}: {e}")),
            }
        }
    }
    res.finish()
}

/// Matrices whose column `j` is dominated by a longer, strongly correlated column.
pub fn a2_violating_instances() -> Vec<(DMatrix<f64>, usize)> {
    let mut out = Vec::new();
    for seed in 0..4u64 {
        let (m, n) = (4 + seed as usize % 2, 5 + seed as usize % 3);
        let mut a = random_matrix(1000 + seed, m, n).into_matrix();
        let aj = a.column(0).into_owned();
        let noise = standard_normal(2000 + seed, m);
        let scale = 1.5 + 0.5 * seed as f64;
        a.set_column(1, &(aj * scale + noise * 0.05));
        out.push((a, 0));
    }
    out
}

/// `STD_L1` never returns a positive multiple of `φ_j` when `|(Kφ_j, Kφ_l)| > ‖Kφ_j‖²` for some `l`.
pub fn check_standard_failure() -> CheckResult {
    let mut res = CheckResult::new("standard_method_failure");
    for (idx, (a, j)) in a2_violating_instances().into_iter().enumerate() {
        let a2 = match check_condition_a2(&a, j) {
            Ok(c) => c,
            Err(e) => {
                res.error(format!("instance {idx}: {e}"));
                continue;
            }
        };
        // Violation of the hypothesis is part of the construction.
        res.case(a2.worst_ratio - 1.0, || format!("instance {idx}: condition holds, ratio {}", a2.worst_ratio));
        let own = a.column(j).norm_squared();
        let outcome = (|| -> Result<Vec<(f64, bool)>> {
            let dense = DenseMatrix::from_matrix(a.clone())?;
            let k = compute_singular_system(&dense)?.rank();
            let inst = instance(dense, k)?;
            let y = inst.a.column(j);
            let prob = InverseProblem::new(inst.a.clone(), y, 0.0)?;
            let mut out = Vec::new();
            for scale in [1e-1, 1e-2, 1e-3, 1e-4] {
                let alpha = scale * own;
                let rec = solve_l1(&prob, &inst.op, None, &SolveSpec::fixed(Formulation::StdL1, alpha))?;
                // A positive multiple γφ_j needs (1−γ)‖Kφ_j‖² = α and (1−γ)|(Kφ_j,Kφ_l)| ≤ α.
                let gamma = 1.0 - alpha / own;
                let feasible = gamma > 0.0 && (1.0 - gamma) * a2.worst_ratio * own <= alpha * (1.0 + 1e-12);
                let recovered = rec.support == [j] && rec.x[j] > 0.0;
                out.push((alpha, recovered || feasible));
            }
            Ok(out)
        })();
        match outcome {
            Ok(cases) => {
                for (alpha, bad) in cases {
                    res.case(if bad { -1.0 } else { 1.0 }, || {
                        format!("instance {idx}, alpha = {alpha}: one-sparse solution returned")
                    });
                }
            }
            Err(e) => res.error(format!("instance {idx}: {e}")),
        }
    }
    res.finish()
}

/// Basis pursuit returns `φ_j` for data `Kφ_j` and a certified minimizer for random targets.
pub fn check_basis_pursuit(opts: &VerifyOptions) -> CheckResult {
    let mut res = CheckResult::new("basis_pursuit");
    for &seed in &opts.seeds {
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xB5);
        let n = rng.random_range(4..=6);
        let m = rng.random_range(2..n);
        let outcome = (|| -> Result<()> {
            let inst = instance(random_matrix(seed ^ 0xB5, m, n), m)?;
            let np = check_nonparallel(&inst.op, &Basis::Canonical)?;
            if !np.holds {
                return Ok(());
            }
            for j in (0..n).filter(|&j| inst.w.admissible(j)) {
                let phi = Basis::Canonical.vector(n, j);
                let rec = solve_basis_pursuit(&inst.op, &inst.w, &phi)?;
                let err = (&rec.x - &phi).amax();
                res.case(BP_RECOVERY_TOL - err, || format!("seed {seed}, j = {j}: error {err}"));
            }
            let target = standard_normal(seed ^ 0x7A, n);
            let rec = solve_basis_pursuit(&inst.op, &inst.w, &target)?;
            let gap = rec.optimality_residual;
            res.case(BP_GAP_TOL - gap, || format!("seed {seed}: certificate gap {gap}"));
            Ok(())
        })();
        if let Err(e) = outcome {
            res.error(format!("seed {seed}: {e}"));
        }
    }
    res.finish()
}

/// The argmax of `W_k⁻¹P_kφ_j` is `{j}` and unchanged when the data are rescaled.
pub fn check_max_index(opts: &VerifyOptions) -> CheckResult {
    let mut res = CheckResult::new("max_index_lemma");
    for (seed, inst) in random_instances(opts) {
        let outcome = (|| -> Result<()> {
            let inst = inst?;
            for j in (0..inst.a.cols()).filter(|&j| inst.w.admissible(j)) {
                let rep = max_index_lemma(&inst.op, &inst.w, &Basis::Canonical, j)?;
                // Homogeneity: the minimum-norm solution for c·Kφ_j is c·P_kφ_j.
                let scaled = inst.op.apply_pinv(&(inst.a.column(j) * 3.7))?;
                let vals: Vec<f64> = (0..scaled.len()).map(|i| scaled[i] / inst.w.weights[i]).collect();
                let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let scaled_arg: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] >= best * (1.0 - 1e-12)).collect();
                let runner_up = rep
                    .values
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, v)| *v)
                    .fold(f64::NEG_INFINITY, f64::max);
                let ok = rep.argmax == [j] && scaled_arg == [j];
                let margin = if ok { (rep.max_value - runner_up) / rep.max_value } else { -1.0 };
                res.case(margin, || format!("seed {seed}, j = {j}: argmax {:?}", rep.argmax));
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            res.error(format!("seed {seed}: {e}"));
        }
    }
    res.finish()
}

/// `K_kᵀλ` lies in the subdifferential at `φ_j` and `‖λ‖²` matches its series.
pub fn check_source_condition(opts: &VerifyOptions) -> CheckResult {
    let mut res = CheckResult::new("source_condition");
    for (seed, inst) in random_instances(opts) {
        let outcome = (|| -> Result<()> {
            let inst = inst?;
            for j in (0..inst.a.cols()).filter(|&j| inst.w.admissible(j)) {
                let c = build_lambda_k(&inst.op, &inst.w, &Basis::Canonical, j)?;
                let margin = (BOUND_SLACK - c.membership_margin).min(SERIES_TOL - c.series_mismatch);
                res.case(margin, || {
                    format!(
                        "seed {seed}, j = {j}: membership margin {}, series mismatch {}",
                        c.membership_margin, c.series_mismatch
                    )
                });
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            res.error(format!("seed {seed}: {e}"));
        }
    }
    res.finish()
}

/// `A = U diag(σ) Vᵀ` with random orthogonal factors and prescribed singular values.
pub fn matrix_with_spectrum(seed: u64, rows: usize, cols: usize, sigma: &[f64]) -> DenseMatrix {
    let q = |s: u64, d: usize| random_matrix(s, d, d).into_matrix().qr().q();
    let u = q(seed ^ 0x11, rows);
    let v = q(seed ^ 0x22, cols);
    let mut s = DMatrix::zeros(rows, cols);
    for (i, &si) in sigma.iter().enumerate().take(rows.min(cols)) {
        s[(i, i)] = si;
    }
    DenseMatrix::from_matrix(u * s * v.transpose()).expect("finite entries")
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Bregman sweep on one instance: `x† = φ_j`, noise of norm `δ`, `α = δ`.
///
/// Returns `(d_k, bound)` per noise level; solves are `W_L1_STDFID`.
pub fn bregman_sweep(a: &DenseMatrix, k: usize, j: usize, noise_seed: u64) -> Result<Vec<(f64, f64, bool)>> {
    let inst = instance(a.clone(), k)?;
    let n = a.cols();
    let x_true = Basis::Canonical.vector(n, j);
    let y = a.mul_vec(&x_true)?;
    let dir = standard_normal(noise_seed, a.rows());
    let dir = &dir / dir.norm();
    let mut out = Vec::new();
    for delta in BREGMAN_DELTAS {
        let prob = InverseProblem::synthetic(a.clone(), y.clone(), &dir * delta)?;
        let spec = SolveSpec::fixed(Formulation::WeightedStdFid, delta);
        let rec = solve_l1(&prob, &inst.op, Some(&inst.w), &spec)?;
        let led = bregman_ledger(
            &prob,
            &inst.op,
            &inst.w,
            &Basis::Canonical,
            &rec.x,
            &x_true,
            &DualElement::OneSparse(j),
            delta,
        )?;
        out.push((led.d_k, led.bound, led.holds && rec.converged));
    }
    Ok(out)
}

type BregmanCase = (String, Result<(DenseMatrix, usize, usize)>);

/// Heat matrix and random instances with small tail spectra; the ledger holds and the bound is linear in `δ`.
pub fn check_bregman(opts: &VerifyOptions) -> CheckResult {
    let mut res = CheckResult::new("bregman_bound");
    let mut cases: Vec<BregmanCase> = vec![(
        "heat".into(),
        build_heat_matrix(&HeatModelConfig::default()).map(|a| (a, 4, 2)),
    )];
    for &seed in opts.seeds.iter().take(5) {
        let sigma = [3.0, 2.0, 1.0, 1e-10, 1e-11, 1e-12];
        cases.push((format!("seed {seed}"), Ok((matrix_with_spectrum(seed, 6, 8, &sigma), 3, seed as usize % 8))));
    }
    for (name, case) in cases {
        let outcome = case.and_then(|(a, k, j)| {
            let inst = instance(a.clone(), k)?;
            // Pick an admissible index when the requested one is below the threshold.
            let j = if inst.w.admissible(j) {
                j
            } else {
                (0..a.cols()).find(|&i| inst.w.admissible(i)).unwrap_or(j)
            };
            bregman_sweep(&a, k, j, 77)
        });
        match outcome {
            Ok(rows) => {
                for (i, &(d, b, holds)) in rows.iter().enumerate() {
                    res.case(if holds { (b - d) / b } else { -1.0 }, || {
                        format!("{name}, delta = {}: d_k = {d}, bound = {b}", BREGMAN_DELTAS[i])
                    });
                }
                let bounds: Vec<f64> = rows.iter().map(|r| r.1).collect();
                let slope = loglog_slope(&BREGMAN_DELTAS, &bounds);
                res.case((slope - SLOPE_RANGE.0).min(SLOPE_RANGE.1 - slope), || {
                    format!("{name}: bound slope {slope}")
                });
            }
            Err(e) => res.error(format!("{name}: {e}")),
        }
    }
    res.finish()
}

/// `‖x_α − x_{k,α}‖ ≤ σ_{k+1}²‖x†‖/α` on the heat matrix and random instances.
pub fn check_tikhonov_proximity(opts: &VerifyOptions) -> CheckResult {
    let mut res = CheckResult::new("tikhonov_proximity");
    let mut cases: Vec<(String, Result<DenseMatrix>, Vec<usize>)> = vec![(
        "heat".into(),
        build_heat_matrix(&HeatModelConfig::default()),
        vec![1, 2, 3, 4, 5],
    )];
    for (i, &seed) in opts.seeds.iter().enumerate().take(10) {
        let (m, n) = shape(seed, opts, i);
        cases.push((format!("seed {seed}"), Ok(random_matrix(seed, m, n)), vec![1, m / 2, m - 1]));
    }
    for (name, a, ks) in cases {
        let outcome = a.and_then(|a| {
            let svd: SingularSystem = compute_singular_system(&a)?;
            let x_true = standard_normal(5, a.cols());
            let mut out = Vec::new();
            for k in ks.into_iter().filter(|&k| k >= 1 && k <= svd.len()) {
                for alpha in PROXIMITY_ALPHAS {
                    let r = tikhonov_proximity(&svd, &a, k, alpha, &x_true)?;
                    out.push((k, alpha, r));
                }
            }
            Ok(out)
        });
        match outcome {
            Ok(rows) => {
                for (k, alpha, r) in rows {
                    let margin = if r.holds {
                        if r.rhs > 0.0 {
                            1.0 - r.lhs / r.rhs
                        } else {
                            0.0
                        }
                    } else {
                        -1.0
                    };
                    res.case(margin, || format!("{name}, k = {k}, alpha = {alpha}: {} > {}", r.lhs, r.rhs));
                }
            }
            Err(e) => res.error(format!("{name}: {e}")),
        }
    }
    res.finish()
}

/// Converged ℓ¹ solves satisfy the subgradient conditions.
pub fn check_kkt(opts: &VerifyOptions) -> CheckResult {
    let mut res = CheckResult::new("kkt");
    for (seed, inst) in random_instances(opts).into_iter().take(20) {
        let outcome = (|| -> Result<()> {
            let inst = inst?;
            let x_true = standard_normal(seed ^ 0x55, inst.a.cols());
            let y = inst.a.mul_vec(&x_true)?;
            let eta = standard_normal(seed ^ 0x66, inst.a.rows()) * 0.01;
            let prob = InverseProblem::synthetic(inst.a.clone(), y, eta)?;
            for f in [Formulation::StdL1, Formulation::WeightedModFid, Formulation::WeightedStdFid] {
                for alpha in [1e-2, 1e-1, 1.0] {
                    for bounds in [None, Some((-0.5, 0.5))] {
                        let mut spec = SolveSpec::fixed(f, alpha);
                        spec.bounds = bounds;
                        let rec = solve_l1(&prob, &inst.op, Some(&inst.w), &spec)?;
                        let limit = KKT_REL_TOL * alpha;
                        let margin = if rec.converged {
                            (limit - rec.optimality_residual) / limit
                        } else {
                            -1.0
                        };
                        res.case(margin, || {
                            format!(
                                "seed {seed}, {f}, alpha = {alpha}, box {bounds:?}: residual {}, converged {}",
                                rec.optimality_residual, rec.converged
                            )
                        });
                    }
                }
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            res.error(format!("seed {seed}: {e}"));
        }
    }
    res.finish()
}

/// Duplicated columns are flagged as parallel instead of certified.
pub fn check_duplicate_detection(opts: &VerifyOptions) -> CheckResult {
    let mut res = CheckResult::new("duplicate_columns_detected");
    for &seed in opts.seeds.iter().take(10) {
        let outcome = (|| -> Result<()> {
            let mut a = random_matrix(seed ^ 0xD0, 5, 8).into_matrix();
            let c = a.column(2).into_owned();
            a.set_column(5, &c);
            let inst = instance(DenseMatrix::from_matrix(a)?, 3)?;
            let np = check_nonparallel(&inst.op, &Basis::Canonical)?;
            let flagged = !np.holds && np.closest_pair == Some((2, 5));
            res.case(if flagged { 0.0 } else { -1.0 }, || {
                format!("seed {seed}: closest pair {:?}, holds {}", np.closest_pair, np.holds)
            });
            if inst.w.admissible(2) {
                let cert = recovery_certificate(&inst.a, &inst.op, &inst.w, &Basis::Canonical, 2, 0.1 * inst.w.proj_norms[2])?;
                res.case(if cert.nonparallel_holds { -1.0 } else { 0.0 }, || {
                    format!("seed {seed}: certificate claims non-parallel images")
                });
                let rep = max_index_lemma(&inst.op, &inst.w, &Basis::Canonical, 2)?;
                res.case(if rep.argmax == [2, 5] { 0.0 } else { -1.0 }, || {
                    format!("seed {seed}: argmax {:?} instead of both copies", rep.argmax)
                });
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            res.error(format!("seed {seed}: {e}"));
        }
    }
    res.finish()
}

/// A full-rank diagonal instance where every bound is zero or tight.
pub fn check_full_rank_trivial() -> CheckResult {
    let mut res = CheckResult::new("full_rank_trivial");
    let outcome = (|| -> Result<()> {
        let a = DenseMatrix::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 3.0, 2.0, 1.0])))?;
        let inst = instance(a.clone(), 4)?;
        let svd = compute_singular_system(&a)?;
        let x_true = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        for alpha in PROXIMITY_ALPHAS {
            let r = tikhonov_proximity(&svd, &a, 4, alpha, &x_true)?;
            res.case(-r.lhs, || format!("proximity lhs {} at full rank", r.lhs));
        }
        for j in 0..4 {
            let w = inst.w.weights[j];
            res.case(1e-12 - (w - 1.0).abs(), || format!("weight {j} = {w}, expected 1"));
            let x = Basis::Canonical.vector(4, j);
            let prob = InverseProblem::new(a.clone(), a.column(j), 0.0)?;
            let led = bregman_ledger(&prob, &inst.op, &inst.w, &Basis::Canonical, &x, &x, &DualElement::OneSparse(j), 0.1)?;
            res.case(1e-14 - led.d_k.abs(), || format!("ledger d_k = {} at the truth", led.d_k));
            let bp = reconstruct(&prob, &inst.op, Some(&inst.w), &SolveSpec::new(Formulation::BasisPursuit, AlphaRule::Fixed(0.0)))?;
            let err = (&bp.reconstruction.x - &x).amax();
            res.case(1e-10 - err, || format!("basis pursuit error {err} for j = {j}"));
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        res.error(e.to_string());
    }
    res.finish()
}

/// Runs every check; the report passes only when all of them do.
pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let jobs: Vec<Box<dyn Fn() -> CheckResult + Sync>> = vec![
        Box::new(|| check_one_sparse_recovery(opts)),
        Box::new(check_standard_failure),
        Box::new(|| check_basis_pursuit(opts)),
        Box::new(|| check_max_index(opts)),
        Box::new(|| check_source_condition(opts)),
        Box::new(|| check_bregman(opts)),
        Box::new(|| check_tikhonov_proximity(opts)),
        Box::new(|| check_kkt(opts)),
        Box::new(|| check_duplicate_detection(opts)),
        Box::new(check_full_rank_trivial),
    ];
    use rayon::prelude::*;
    let checks: Vec<CheckResult> = jobs.par_iter().map(|f| f()).collect();
    VerifyReport {
        seeds: opts.seeds.clone(),
        sizes: opts.sizes.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
