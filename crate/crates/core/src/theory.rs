//! Numerical checks of the recovery results: the cross-correlation condition under which
//! the standard method fails, non-parallel images, the one-sparse magnitude, the argmax
//! property of the minimum-norm solution, source-condition certificates, the Bregman
//! distance bound and the Tikhonov proximity bound.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linop::{lstsq, DenseMatrix, SingularSystem, TruncatedOperator};
use crate::weighting::{Basis, WeightingScheme};

/// Chordal distance between normalized images below which two images count as parallel.
pub const COLLINEARITY_TOL: f64 = 1e-10;
/// Relative slack used when comparing computed quantities against bounds.
pub const BOUND_SLACK: f64 = 1e-9;
/// Entries of the argmax vector within this relative distance of the maximum tie.
pub const ARGMAX_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2Check {
    pub j: usize,
    pub holds: bool,
    /// Index `l ≠ j` with the largest `|(Kφ_j, Kφ_l)|`.
    pub worst: Option<usize>,
    /// `max_l |(Kφ_j, Kφ_l)| / (Kφ_j, Kφ_j)`.
    pub worst_ratio: f64,
}

/// Checks `|(Kφ_j, Kφ_l)| ≤ (Kφ_j, Kφ_j)` for all `l`, where the columns of `images` are `Kφ_i`.
pub fn check_condition_a2(images: &DMatrix<f64>, j: usize) -> Result<A2Check> {
    let n = images.ncols();
    if j >= n {
        return Err(Error::Input(format!("index {j} out of range for {n} columns")));
    }
    let aj = images.column(j);
    let own = aj.dot(&aj);
    let mut worst = None;
    let mut worst_val = 0.0f64;
    for l in (0..n).filter(|&l| l != j) {
        let c = aj.dot(&images.column(l)).abs();
        if worst.is_none() || c > worst_val {
            worst = Some(l);
            worst_val = c;
        }
    }
    let worst_ratio = if own > 0.0 {
        worst_val / own
    } else if worst_val > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(A2Check {
        j,
        holds: worst_val <= own,
        worst,
        worst_ratio,
    })
}

/// Same check with the images taken from the columns of `a` and the basis.
pub fn check_condition_a2_for(a: &DenseMatrix, basis: &Basis, j: usize) -> Result<A2Check> {
    let images = match basis {
        Basis::Canonical => a.as_matrix().clone(),
        Basis::Columns(phi) => {
            check_dim(a.cols(), phi.nrows())?;
            a.as_matrix() * phi
        }
    };
    check_condition_a2(&images, j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonparallelCheck {
    pub holds: bool,
    /// Pair with the smallest distance between normalized images.
    pub closest_pair: Option<(usize, usize)>,
    /// `min ‖â_l ∓ â_q‖` over pairs; zero if some image vanishes.
    pub min_distance: f64,
}

/// Checks that no two images `K_kφ_l`, `K_kφ_q` (`l ≠ q`) are scalar multiples of each other.
///
/// A vanishing image is a multiple (by zero) of every other one.
pub fn check_nonparallel(op: &TruncatedOperator, basis: &Basis) -> Result<NonparallelCheck> {
    let n = op.cols();
    let phi = basis.matrix(n);
    check_dim(n, phi.nrows())?;
    // K_kφ = U_k Σ_k V_kᵀφ and U_k has orthonormal columns
    let mut g = op.right_k().tr_mul(&phi);
    for (i, mut row) in g.row_iter_mut().enumerate() {
        row *= op.sigma_head()[i];
    }
    let norms: Vec<f64> = g.column_iter().map(|c| c.norm()).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let mut best: Option<(usize, usize, f64)> = None;
    for l in 0..phi.ncols() {
        for q in (l + 1)..phi.ncols() {
            let d = if norms[l] <= COLLINEARITY_TOL * scale || norms[q] <= COLLINEARITY_TOL * scale {
                0.0
            } else {
                let a = g.column(l) / norms[l];
                let b = g.column(q) / norms[q];
                (&a - &b).norm().min((&a + &b).norm())
            };
            if best.is_none_or(|b| d < b.2) {
                best = Some((l, q, d));
            }
        }
    }
    Ok(match best {
        Some((l, q, d)) => NonparallelCheck {
            holds: d > COLLINEARITY_TOL,
            closest_pair: Some((l, q)),
            min_distance: d,
        },
        None => NonparallelCheck {
            holds: true,
            closest_pair: None,
            min_distance: f64::INFINITY,
        },
    })
}

/// `γ = 1 − α/‖P_kφ_j‖`, the magnitude of the one-sparse weighted solution.
pub fn predicted_gamma(w: &WeightingScheme, j: usize, alpha: f64) -> Result<f64> {
    if !w.admissible(j) {
        return Err(Error::Domain(format!(
            "basis function {j} is below the threshold (‖P_kφ_j‖ < τ = {})",
            w.tau
        )));
    }
    let p = w.proj_norms[j];
    if !(alpha > 0.0 && alpha < p) {
        return Err(Error::Domain(format!("alpha must lie in (0, {p:.6e}), got {alpha}")));
    }
    Ok(1.0 - alpha / p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCertificate {
    pub j: usize,
    pub alpha: f64,
    /// Predicted magnitude; absent when the threshold or the range of `α` is violated.
    pub gamma: Option<f64>,
    pub condition_a2_holds: bool,
    pub nonparallel_holds: bool,
    pub threshold_ok: bool,
}

/// Collects the hypotheses of the one-sparse recovery results for basis function `j`.
pub fn recovery_certificate(
    a: &DenseMatrix,
    op: &TruncatedOperator,
    w: &WeightingScheme,
    basis: &Basis,
    j: usize,
    alpha: f64,
) -> Result<RecoveryCertificate> {
    let a2 = check_condition_a2_for(a, basis, j)?;
    let np = check_nonparallel(op, basis)?;
    Ok(RecoveryCertificate {
        j,
        alpha,
        gamma: predicted_gamma(w, j, alpha).ok(),
        condition_a2_holds: a2.holds,
        nonparallel_holds: np.holds,
        threshold_ok: w.admissible(j),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxIndexReport {
    pub j: usize,
    /// `[W_k⁻¹ P_kφ_j]_i` for every `i`.
    pub values: Vec<f64>,
    pub argmax: Vec<usize>,
    pub max_value: f64,
}

/// Argmax set of `W_k⁻¹ x̄_k` with `x̄_k = K_k†K_kφ_j = P_kφ_j`, the minimum-norm solution.
pub fn max_index_lemma(
    op: &TruncatedOperator,
    w: &WeightingScheme,
    basis: &Basis,
    j: usize,
) -> Result<MaxIndexReport> {
    let n = op.cols();
    check_dim(n, w.len())?;
    if !w.admissible(j) {
        return Err(Error::Domain(format!("basis function {j} is below the threshold")));
    }
    let xbar = op.project(&basis.vector(n, j))?;
    let coeffs = basis.coefficients(&xbar);
    let values: Vec<f64> = coeffs.iter().zip(&w.weights).map(|(c, wi)| c / wi).collect();
    let max_value = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = max_value - ARGMAX_REL_TOL * max_value.abs();
    let argmax = (0..values.len()).filter(|&i| values[i] >= cut).collect();
    Ok(MaxIndexReport {
        j,
        values,
        argmax,
        max_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConditionCertificate {
    pub j: usize,
    /// `λ = w_{k,j}⁻¹ (K_kK_kᵀ)† K_kφ_j`.
    pub lambda_k: Vec<f64>,
    pub lambda_norm: f64,
    /// `Σ_{i≤k} (v_i, φ_j)²/σ_i²`.
    pub norm_series: f64,
    /// `|‖λ‖² − w_{k,j}⁻²·norm_series| / ‖λ‖²`.
    pub series_mismatch: f64,
    /// `K_kᵀλ` lies in the subdifferential of the weighted ℓ¹ norm at `φ_j`.
    pub membership_holds: bool,
    /// `max(|[K_kᵀλ]_j − w_j|/w_j, max_{l≠j} |[K_kᵀλ]_l|/w_l − 1)`.
    pub membership_margin: f64,
}

/// Builds the dual element of the source condition for `x† = φ_j` and checks it.
///
/// `λ` is computed as the minimum-norm solution of `A_kᵀλ = w_j⁻¹P_kφ_j` from the assembled
/// truncated matrix; its norm is compared against the singular-value series.
pub fn build_lambda_k(
    op: &TruncatedOperator,
    w: &WeightingScheme,
    basis: &Basis,
    j: usize,
) -> Result<SourceConditionCertificate> {
    let n = op.cols();
    check_dim(n, w.len())?;
    if !w.admissible(j) {
        return Err(Error::Domain(format!("basis function {j} is below the threshold")));
    }
    let wj = w.weights[j];
    let phi_j = basis.vector(n, j);
    let ak = op.to_matrix();
    let akt = ak.transpose();
    let rhs = op.project(&phi_j)? / wj;
    let rtol = 0.5 * op.sigma_k() / op.system().sigma_at(1);
    let lambda = lstsq(&akt, &rhs, rtol);

    let vphi = op.right_k().tr_mul(&phi_j);
    let norm_series: f64 = vphi
        .iter()
        .zip(op.sigma_head().iter())
        .map(|(c, s)| (c / s).powi(2))
        .sum();
    let lambda_norm = lambda.norm();
    let sq = lambda_norm * lambda_norm;
    let series_mismatch = (sq - norm_series / (wj * wj)).abs() / sq.max(f64::MIN_POSITIVE);

    let g = basis.coefficients(&(&akt * &lambda));
    let mut margin = (g[j] - wj).abs() / wj;
    for l in (0..n).filter(|&l| l != j) {
        margin = margin.max(g[l].abs() / w.weights[l] - 1.0);
    }
    Ok(SourceConditionCertificate {
        j,
        lambda_k: lambda.iter().copied().collect(),
        lambda_norm,
        norm_series,
        series_mismatch,
        membership_holds: margin <= BOUND_SLACK,
        membership_margin: margin,
    })
}

/// Subgradient used in the Bregman distance.
#[derive(Debug, Clone)]
pub enum DualElement {
    /// `x† = φ_j` with `K_kᵀλ = w_{k,j}⁻¹P_kφ_j`.
    OneSparse(usize),
    /// A caller-supplied `λ_k`.
    Supplied(DVector<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BregmanLedger {
    pub d_k: f64,
    pub bound: f64,
    pub sigma_kp1: f64,
    pub delta: f64,
    pub alpha: f64,
    pub lambda_norm: f64,
    /// `0 ≤ d_k ≤ bound` up to rounding.
    pub holds: bool,
}

fn weighted_l1(basis: &Basis, w: &WeightingScheme, x: &DVector<f64>) -> f64 {
    basis
        .coefficients(x)
        .iter()
        .zip(&w.weights)
        .map(|(c, wi)| c.abs() * wi)
        .sum()
}

/// Bregman distance between a solution of `½‖A_k x − y^δ‖² + α R_W(x)` and `x†`, and the
/// bound `(σ_{k+1}‖x†‖+δ)²/(2α) + ‖λ‖(δ + σ_{k+1}‖x†‖) + α‖λ‖²/2`.
#[allow(clippy::too_many_arguments)]
pub fn bregman_ledger(
    prob: &crate::solvers::InverseProblem,
    op: &TruncatedOperator,
    w: &WeightingScheme,
    basis: &Basis,
    x_sol: &DVector<f64>,
    x_true: &DVector<f64>,
    dual: &DualElement,
    alpha: f64,
) -> Result<BregmanLedger> {
    let n = op.cols();
    check_dim(n, x_sol.len())?;
    check_dim(n, x_true.len())?;
    check_dim(prob.a.cols(), n)?;
    if !(alpha > 0.0) {
        return Err(Error::Input(format!("alpha must be positive, got {alpha}")));
    }
    let (subgradient, lambda_norm) = match dual {
        DualElement::OneSparse(j) => {
            let cert = build_lambda_k(op, w, basis, *j)?;
            let g = op.project(&basis.vector(n, *j))? / w.weights[*j];
            (g, cert.norm_series.sqrt() / w.weights[*j])
        }
        DualElement::Supplied(lambda) => (op.apply_transpose(lambda)?, lambda.norm()),
    };
    let diff = x_sol - x_true;
    let r_sol = weighted_l1(basis, w, x_sol);
    let r_true = weighted_l1(basis, w, x_true);
    let d_k = r_sol - r_true - subgradient.dot(&diff);

    let sigma_kp1 = op.sigma_next();
    let delta = prob.delta;
    let e = sigma_kp1 * x_true.norm() + delta;
    let bound = e * e / (2.0 * alpha) + lambda_norm * e + 0.5 * alpha * lambda_norm * lambda_norm;
    let rounding = 1e-12 * (r_sol + r_true);
    Ok(BregmanLedger {
        d_k,
        bound,
        sigma_kp1,
        delta,
        alpha,
        lambda_norm,
        holds: d_k >= -rounding && d_k <= bound * (1.0 + BOUND_SLACK) + rounding,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityReport {
    /// `‖x_α − x_{k,α}‖`.
    pub lhs: f64,
    /// `σ_{k+1}²‖x†‖/α`.
    pub rhs: f64,
    pub holds: bool,
}

/// Tikhonov solution `Σ σ_l/(σ_l²+α) (y,u_l) v_l` over the first `terms` triplets.
fn tikhonov_filter(svd: &SingularSystem, y: &DVector<f64>, alpha: f64, terms: usize) -> Result<DVector<f64>> {
    let c = svd.left_coefficients(y)?;
    let mut x = DVector::zeros(svd.cols());
    for l in 0..terms.min(svd.len()) {
        let s = svd.sigma()[l];
        x.axpy(s / (s * s + alpha) * c[l], &svd.right().column(l), 1.0);
    }
    Ok(x)
}

/// Distance between the Tikhonov solutions for `A` and `A_k` with exact data `A x†`.
pub fn tikhonov_proximity(
    svd: &SingularSystem,
    a: &DenseMatrix,
    k: usize,
    alpha: f64,
    x_true: &DVector<f64>,
) -> Result<ProximityReport> {
    if !(alpha > 0.0) {
        return Err(Error::Input(format!("alpha must be positive, got {alpha}")));
    }
    if k == 0 || k > svd.len() {
        return Err(Error::Input(format!("truncation level {k} outside 1..={}", svd.len())));
    }
    let y = a.mul_vec(x_true)?;
    let full = tikhonov_filter(svd, &y, alpha, svd.len())?;
    let trunc = tikhonov_filter(svd, &y, alpha, k)?;
    let lhs = (full - trunc).norm();
    let s = svd.sigma_at(k + 1);
    let rhs = s * s / alpha * x_true.norm();
    Ok(ProximityReport {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + BOUND_SLACK),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::linop::compute_singular_system;
    use crate::weighting::compute_weights;

    fn op_for(a: &DenseMatrix, k: usize) -> TruncatedOperator {
        TruncatedOperator::new(Arc::new(compute_singular_system(a).unwrap()), k).unwrap()
    }

    #[test]
    fn a2_orthogonal_columns() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 5.0]);
        for j in 0..3 {
            assert!(check_condition_a2(&a, j).unwrap().holds);
        }
    }

    #[test]
    fn a2_violated_by_longer_parallel_column() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 0.0]);
        let c = check_condition_a2(&a, 0).unwrap();
        assert!(!c.holds);
        assert_eq!(c.worst, Some(1));
        assert_eq!(c.worst_ratio, 2.0);
        assert!(check_condition_a2(&a, 1).unwrap().holds);
    }

    #[test]
    fn gamma_substitution_and_domain() {
        let w = WeightingScheme {
            k: 1,
            tau: 1e-3,
            proj_norms: vec![0.5, 1e-4],
            weights: vec![0.5, 1e-3],
        };
        assert!((predicted_gamma(&w, 0, 0.1).unwrap() - 0.8).abs() < 1e-15);
        assert!(predicted_gamma(&w, 0, 0.6).is_err());
        assert!(predicted_gamma(&w, 1, 1e-5).is_err());
        assert!((predicted_gamma(&w, 0, 1e-12).unwrap() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn duplicated_columns_are_parallel_and_tie() {
        let a = DenseMatrix::from_row_major(2, 3, &[1.0, 1.0, 0.0, 0.5, 0.5, 1.0]).unwrap();
        let op = op_for(&a, 2);
        let np = check_nonparallel(&op, &Basis::Canonical).unwrap();
        assert!(!np.holds);
        assert_eq!(np.closest_pair, Some((0, 1)));
        let w = compute_weights(&op, &Basis::Canonical, 1e-3).unwrap();
        let rep = max_index_lemma(&op, &w, &Basis::Canonical, 0).unwrap();
        assert_eq!(rep.argmax, vec![0, 1]);
    }

    #[test]
    fn singular_basis_argmax_is_unit() {
        let a = DenseMatrix::from_row_major(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]).unwrap();
        let op = op_for(&a, 2);
        let basis = Basis::Columns(op.system().right().clone());
        let w = compute_weights(&op, &basis, 1e-3).unwrap();
        for j in 0..2 {
            let rep = max_index_lemma(&op, &w, &basis, j).unwrap();
            assert_eq!(rep.argmax, vec![j]);
            assert!((rep.max_value - 1.0).abs() < 1e-12);
        }
        assert!(max_index_lemma(&op, &w, &basis, 2).is_err());
    }

    #[test]
    fn lambda_for_leading_singular_vector() {
        let a = DenseMatrix::from_row_major(2, 2, &[2.0, 0.0, 0.0, 1.0]).unwrap();
        let op = op_for(&a, 1);
        let basis = Basis::Columns(op.system().right().clone());
        let w = compute_weights(&op, &basis, 1e-3).unwrap();
        let cert = build_lambda_k(&op, &w, &basis, 0).unwrap();
        assert!((cert.lambda_norm - 0.5).abs() < 1e-14);
        assert!(cert.membership_holds);
        assert!(cert.series_mismatch < 1e-12);
    }

    #[test]
    fn ledger_vanishes_at_truth() {
        let a = DenseMatrix::from_row_major(2, 3, &[1.0, 0.3, 0.0, 0.2, 1.0, 0.4]).unwrap();
        let op = op_for(&a, 2);
        let w = compute_weights(&op, &Basis::Canonical, 1e-3).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let prob = crate::solvers::InverseProblem::new(a.clone(), a.mul_vec(&x).unwrap(), 1e-3).unwrap();
        let l = bregman_ledger(&prob, &op, &w, &Basis::Canonical, &x, &x, &DualElement::OneSparse(0), 0.1)
            .unwrap();
        assert_eq!(l.d_k, 0.0);
        assert!(l.holds);
    }

    #[test]
    fn proximity_full_rank_is_zero() {
        let a = DenseMatrix::from_row_major(3, 3, &[3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let svd = compute_singular_system(&a).unwrap();
        let x = DVector::from_element(3, 1.0);
        let r = tikhonov_proximity(&svd, &a, 3, 1e-2, &x).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
    }
}
