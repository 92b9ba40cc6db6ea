use nalgebra::{DMatrix, DVector};

use super::{support_of, Formulation, InverseProblem, Reconstruction};
use crate::error::{check_dim, Error, Result};
use crate::linop::{thin_svd, TruncatedOperator};
use crate::weighting::WeightingScheme;

const NORMAL_EQ_TOL: f64 = 1e-10;
const MAX_REFINE: usize = 3;

/// Which operator the data term uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fidelity {
    /// All singular triplets of `A`.
    Full,
    /// Only the first `k`, i.e. `A_k`.
    Truncated,
}

/// Minimizes `‖A x − b‖² + α‖W x‖²` with `A` the full or truncated operator.
///
/// Without weights this is the spectral filter `Σ σ_l/(σ_l²+α) (b,u_l) v_l`. With
/// weights the problem is brought to standard form through `B = A W⁻¹` and the result is
/// checked against the normal equations `(AᵀA + αWᵀW)x = Aᵀb`.
pub fn solve_tikhonov(
    prob: &InverseProblem,
    op: &TruncatedOperator,
    fidelity: Fidelity,
    w: Option<&WeightingScheme>,
    alpha: f64,
) -> Result<Reconstruction> {
    if !(alpha > 0.0) {
        return Err(Error::Input(format!("alpha must be positive, got {alpha}")));
    }
    check_dim(prob.a.cols(), op.cols())?;
    let b = &prob.y_delta;
    let svd = op.system();
    let terms = match fidelity {
        Fidelity::Full => svd.len(),
        Fidelity::Truncated => op.k(),
    };

    let (x, backward_error, iterations) = match w {
        None => {
            let coeffs = svd.left().columns(0, terms).tr_mul(b);
            let filt = DVector::from_fn(terms, |l, _| {
                let s = svd.sigma()[l];
                s / (s * s + alpha) * coeffs[l]
            });
            (svd.right().columns(0, terms) * filt, 0.0, 1)
        }
        Some(w) => {
            check_dim(prob.a.cols(), w.len())?;
            let a_s = match fidelity {
                Fidelity::Full => prob.a.as_matrix().clone(),
                Fidelity::Truncated => op.to_matrix(),
            };
            weighted_solve(&a_s, &w.weight_vector(), b, alpha)?
        }
    };

    let a_x = match fidelity {
        Fidelity::Full => prob.a.mul_vec(&x)?,
        Fidelity::Truncated => op.apply(&x)?,
    };
    let penalty = match w {
        None => x.norm_squared(),
        Some(w) => x.component_mul(&w.weight_vector()).norm_squared(),
    };
    Ok(Reconstruction {
        formulation: if w.is_some() {
            Formulation::WeightedTikhonov
        } else {
            Formulation::Tikhonov
        },
        alpha,
        residual_norm: prob.residual_norm(&x)?,
        objective: (a_x - b).norm_squared() + alpha * penalty,
        iterations,
        converged: backward_error <= NORMAL_EQ_TOL,
        optimality_residual: backward_error,
        support: support_of(&x),
        x,
    })
}

fn weighted_solve(
    a: &DMatrix<f64>,
    w: &DVector<f64>,
    b: &DVector<f64>,
    alpha: f64,
) -> Result<(DVector<f64>, f64, usize)> {
    let n = a.ncols();
    let mut scaled = a.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col /= w[j];
    }
    let (u, s, v) = thin_svd(&scaled);
    let v_t = v.transpose();

    // (BᵀB + αI)⁻¹ r with B = A W⁻¹; W⁻¹ on both sides gives the normal-matrix inverse
    let apply_inv = |r: &DVector<f64>| -> DVector<f64> {
        let rw = r.component_div(w);
        let c = &v_t * &rw;
        let mut y = &rw / alpha;
        let corr = DVector::from_fn(s.len(), |i, _| c[i] * (1.0 / (s[i] * s[i] + alpha) - 1.0 / alpha));
        y += v_t.tr_mul(&corr);
        y.component_div(w)
    };

    let coeffs = u.tr_mul(b);
    let filt = DVector::from_fn(s.len(), |i, _| s[i] / (s[i] * s[i] + alpha) * coeffs[i]);
    let mut x = v_t.tr_mul(&filt).component_div(w);

    let ata = a.tr_mul(a);
    let w2 = w.map(|v| v * v);
    let rhs = a.tr_mul(b);
    let normal_norm = (&ata + DMatrix::from_diagonal(&(&w2 * alpha))).norm();
    let residual = |x: &DVector<f64>| -> DVector<f64> {
        &ata * x + x.component_mul(&w2) * alpha - &rhs
    };
    let backward = |x: &DVector<f64>, r: &DVector<f64>| -> f64 {
        let denom = normal_norm * x.norm() + rhs.norm();
        if denom == 0.0 {
            0.0
        } else {
            r.norm() / denom
        }
    };

    let mut r = residual(&x);
    let mut err = backward(&x, &r);
    let mut iterations = 1;
    while err > NORMAL_EQ_TOL && iterations <= MAX_REFINE {
        x -= apply_inv(&r);
        r = residual(&x);
        err = backward(&x, &r);
        iterations += 1;
    }
    if x.len() != n || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("weighted normal equations produced non-finite values".into()));
    }
    Ok((x, err, iterations))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::linop::{compute_singular_system, DenseMatrix};

    fn setup(a: DenseMatrix, b: Vec<f64>, k: usize) -> (InverseProblem, TruncatedOperator) {
        let op = TruncatedOperator::new(Arc::new(compute_singular_system(&a).unwrap()), k).unwrap();
        (InverseProblem::new(a, DVector::from_vec(b), 0.0).unwrap(), op)
    }

    #[test]
    fn scalar_closed_form() {
        let (p, op) = setup(DenseMatrix::identity(1), vec![1.0], 1);
        let rec = solve_tikhonov(&p, &op, Fidelity::Full, None, 1.0).unwrap();
        assert!((rec.x[0] - 0.5).abs() < 1e-15);
        assert_eq!(rec.formulation, Formulation::Tikhonov);
    }

    #[test]
    fn identity_weights_reduce_to_unweighted() {
        let a = DenseMatrix::from_row_major(3, 4, &[
            1.0, 0.5, 0.2, 0.1, 0.3, 1.1, -0.4, 0.0, 0.2, 0.1, 0.9, 0.7,
        ])
        .unwrap();
        let (p, op) = setup(a, vec![1.0, -0.5, 0.25], 2);
        let unit = WeightingScheme::unit(4);
        for fid in [Fidelity::Full, Fidelity::Truncated] {
            let plain = solve_tikhonov(&p, &op, fid, None, 1e-2).unwrap();
            let weighted = solve_tikhonov(&p, &op, fid, Some(&unit), 1e-2).unwrap();
            assert!((plain.x - &weighted.x).amax() < 1e-9);
            assert!(weighted.converged);
        }
    }

    #[test]
    fn weighted_solution_satisfies_normal_equations() {
        let a = DenseMatrix::from_row_major(2, 3, &[1.0, 0.4, 0.0, 0.2, 0.3, 0.05]).unwrap();
        let (p, op) = setup(a, vec![0.7, 0.1], 1);
        let w = WeightingScheme {
            k: 1,
            tau: 1e-3,
            proj_norms: vec![0.9, 0.4, 1e-4],
            weights: vec![0.9, 0.4, 1e-3],
        };
        let rec = solve_tikhonov(&p, &op, Fidelity::Truncated, Some(&w), 1e-4).unwrap();
        assert!(rec.converged, "backward error {}", rec.optimality_residual);
        assert_eq!(rec.formulation, Formulation::WeightedTikhonov);
    }

    #[test]
    fn nonpositive_alpha_rejected() {
        let (p, op) = setup(DenseMatrix::identity(1), vec![1.0], 1);
        assert!(solve_tikhonov(&p, &op, Fidelity::Full, None, 0.0).is_err());
    }
}
