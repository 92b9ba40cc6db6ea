use nalgebra::DVector;

use super::admm::BasisPursuitSetup;
use super::{l1_norm_weighted, support_of, Formulation, Reconstruction, DEFAULT_MAX_ITER};
use crate::error::{check_dim, Result};
use crate::linop::TruncatedOperator;
use crate::weighting::WeightingScheme;

const BP_TOL: f64 = 1e-10;
const CERTIFICATE_TOL: f64 = 1e-8;

/// `argmin Σ w_i|x_i|` subject to `K_k x = K_k target`.
///
/// The constraint is equivalent to `P_k x = P_k target`. `residual_norm` of the result
/// holds the constraint violation `‖K_k x − K_k target‖`.
pub fn solve_basis_pursuit(
    op: &TruncatedOperator,
    w: &WeightingScheme,
    target: &DVector<f64>,
) -> Result<Reconstruction> {
    check_dim(op.cols(), target.len())?;
    let proj = op.project(target)?;
    solve_basis_pursuit_projected(op, w, &proj)
}

/// Same problem with the right-hand side already given as a vector in `span{v_1..v_k}`.
pub fn solve_basis_pursuit_projected(
    op: &TruncatedOperator,
    w: &WeightingScheme,
    target_proj: &DVector<f64>,
) -> Result<Reconstruction> {
    check_dim(op.cols(), target_proj.len())?;
    check_dim(op.cols(), w.len())?;
    let vk = op.right_k().into_owned();
    let weights = w.weight_vector();
    let setup = BasisPursuitSetup {
        vk: &vk,
        target_proj,
        weights: &weights,
        tol: BP_TOL,
        max_iter: DEFAULT_MAX_ITER,
    };
    let out = setup.run();
    let violation = (op.apply(&out.x)? - op.apply(target_proj)?).norm();
    Ok(Reconstruction {
        formulation: Formulation::BasisPursuit,
        alpha: 0.0,
        objective: l1_norm_weighted(&out.x, &weights),
        residual_norm: violation,
        iterations: out.iterations,
        converged: out.certificate_gap <= CERTIFICATE_TOL && violation <= 1e-8,
        optimality_residual: out.certificate_gap,
        support: support_of(&out.x),
        x: out.x,
    })
}
