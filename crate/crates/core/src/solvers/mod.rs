//! Regularized reconstruction: the three ℓ¹ formulations, standard and weighted
//! Tikhonov, weighted basis pursuit, and the discrepancy-principle parameter search.
//!
//! All ℓ¹ problems are written as `½‖·‖² + α Σ w_i|x_i|` so that the one-sparse
//! magnitude is `1 − α/‖P_k φ_j‖`; Tikhonov problems use `‖·‖² + α‖W x‖²`.

mod active_set;
mod admm;
mod basis_pursuit;
pub mod kkt;
mod morozov;
mod quadratic;
mod tikhonov;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use admm::AdmmState;
pub use basis_pursuit::{solve_basis_pursuit, solve_basis_pursuit_projected};
pub use morozov::{morozov_alpha, MorozovReport, ALPHA_MAX, ALPHA_MIN};
pub use tikhonov::{solve_tikhonov, Fidelity};

use crate::error::{check_dim, Error, Result};
use crate::linop::{DenseMatrix, TruncatedOperator};
use crate::weighting::WeightingScheme;
use admm::L1Setup;
use quadratic::SpectralQuadratic;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50_000;
pub const DEFAULT_RHO: f64 = 1.0;
/// Relative threshold `support_tol = SUPPORT_REL_TOL·‖x‖_∞`.
pub const SUPPORT_REL_TOL: f64 = 1e-6;
/// Converged ℓ¹ solutions have subgradient residual at most `KKT_REL_TOL·α`.
pub const KKT_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formulation {
    /// `½‖A_k x − b‖² + α‖x‖₁`; with `k = rank` this is the untruncated problem
    #[serde(rename = "STD_L1")]
    StdL1,
    /// `½‖P_k x − A_k† b‖² + α‖W x‖₁`
    #[serde(rename = "W_L1_MODFID")]
    WeightedModFid,
    /// `½‖A_k x − b‖² + α‖W x‖₁`
    #[serde(rename = "W_L1_STDFID")]
    WeightedStdFid,
    /// `‖A x − b‖² + α‖x‖²`
    #[serde(rename = "TIKH")]
    Tikhonov,
    /// `‖A_k x − b‖² + α‖W x‖²`
    #[serde(rename = "W_TIKH")]
    WeightedTikhonov,
    /// `min ‖W x‖₁` subject to `A_k x = A_k A_k† b`
    #[serde(rename = "BASIS_PURSUIT")]
    BasisPursuit,
}

impl Formulation {
    pub const ALL: [Formulation; 6] = [
        Formulation::StdL1,
        Formulation::WeightedModFid,
        Formulation::WeightedStdFid,
        Formulation::Tikhonov,
        Formulation::WeightedTikhonov,
        Formulation::BasisPursuit,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Formulation::StdL1 => "STD_L1",
            Formulation::WeightedModFid => "W_L1_MODFID",
            Formulation::WeightedStdFid => "W_L1_STDFID",
            Formulation::Tikhonov => "TIKH",
            Formulation::WeightedTikhonov => "W_TIKH",
            Formulation::BasisPursuit => "BASIS_PURSUIT",
        }
    }

    pub fn is_weighted(self) -> bool {
        matches!(
            self,
            Formulation::WeightedModFid
                | Formulation::WeightedStdFid
                | Formulation::WeightedTikhonov
                | Formulation::BasisPursuit
        )
    }

    pub fn is_l1(self) -> bool {
        matches!(
            self,
            Formulation::StdL1 | Formulation::WeightedModFid | Formulation::WeightedStdFid
        )
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formulation::ALL
            .into_iter()
            .find(|f| f.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Input(format!("unknown formulation '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlphaRule {
    Fixed(f64),
    Morozov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSpec {
    pub formulation: Formulation,
    pub alpha: AlphaRule,
    /// Componentwise `[lo, hi]` bounds for the ℓ¹ formulations.
    pub bounds: Option<(f64, f64)>,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
    pub rho: f64,
}

impl SolveSpec {
    pub fn new(formulation: Formulation, alpha: AlphaRule) -> Self {
        Self {
            formulation,
            alpha,
            bounds: None,
            tol_primal: DEFAULT_TOL,
            tol_dual: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            rho: DEFAULT_RHO,
        }
    }

    pub fn fixed(formulation: Formulation, alpha: f64) -> Self {
        Self::new(formulation, AlphaRule::Fixed(alpha))
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = Some((lo, hi));
        self
    }

    fn validate(&self) -> Result<()> {
        if let AlphaRule::Fixed(a) = self.alpha {
            if !(a > 0.0) && self.formulation != Formulation::BasisPursuit {
                return Err(Error::Input(format!("alpha must be positive, got {a}")));
            }
        }
        if let Some((lo, hi)) = self.bounds {
            if !(lo <= hi) || lo > 0.0 || hi < 0.0 {
                return Err(Error::Input(format!(
                    "box [{lo}, {hi}] must be ordered and contain zero"
                )));
            }
        }
        if self.max_iter == 0 || !(self.rho > 0.0) {
            return Err(Error::Input("max_iter and rho must be positive".into()));
        }
        Ok(())
    }
}

/// Forward matrix, data and noise information for one reconstruction.
#[derive(Debug, Clone)]
pub struct InverseProblem {
    pub a: DenseMatrix,
    pub y_clean: Option<DVector<f64>>,
    pub y_delta: DVector<f64>,
    pub eta: Option<DVector<f64>>,
    pub delta: f64,
}

impl InverseProblem {
    pub fn new(a: DenseMatrix, y_delta: DVector<f64>, delta: f64) -> Result<Self> {
        check_dim(a.rows(), y_delta.len())?;
        if !(delta >= 0.0) {
            return Err(Error::Input(format!("noise bound must be nonnegative, got {delta}")));
        }
        Ok(Self {
            a,
            y_clean: None,
            y_delta,
            eta: None,
            delta,
        })
    }

    /// Synthetic problem with known noise; `δ = ‖η‖`.
    pub fn synthetic(a: DenseMatrix, y_clean: DVector<f64>, eta: DVector<f64>) -> Result<Self> {
        check_dim(a.rows(), y_clean.len())?;
        check_dim(a.rows(), eta.len())?;
        let delta = eta.norm();
        Ok(Self {
            a,
            y_delta: &y_clean + &eta,
            y_clean: Some(y_clean),
            eta: Some(eta),
            delta,
        })
    }

    /// `‖A x − y^δ‖`.
    pub fn residual_norm(&self, x: &DVector<f64>) -> Result<f64> {
        Ok((self.a.mul_vec(x)? - &self.y_delta).norm())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub formulation: Formulation,
    pub alpha: f64,
    pub x: DVector<f64>,
    /// `‖A x − y^δ‖` with the full forward matrix.
    pub residual_norm: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Subgradient residual (ℓ¹), normal-equation backward error (Tikhonov) or dual
    /// certificate gap (basis pursuit).
    pub optimality_residual: f64,
    pub support: Vec<usize>,
}

impl Reconstruction {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for (i, v) in self.x.iter().enumerate() {
            out.push_str(&format!("{i},{v:.17e}\n"));
        }
        out
    }

    pub fn sidecar(&self, k: Option<usize>, tau: Option<f64>) -> serde_json::Value {
        serde_json::json!({
            "formulation": self.formulation.tag(),
            "alpha": self.alpha,
            "k": k,
            "tau": tau,
            "iterations": self.iterations,
            "residual": self.residual_norm,
            "objective": self.objective,
            "converged": self.converged,
            "optimality_residual": self.optimality_residual,
            "support": self.support,
        })
    }
}

/// Indices with `|x_i| > SUPPORT_REL_TOL·‖x‖_∞`.
pub fn support_of(x: &DVector<f64>) -> Vec<usize> {
    let tol = SUPPORT_REL_TOL * x.amax();
    (0..x.len()).filter(|&i| x[i].abs() > tol).collect()
}

pub(crate) fn l1_norm_weighted(x: &DVector<f64>, w: &DVector<f64>) -> f64 {
    x.iter().zip(w.iter()).map(|(a, b)| a.abs() * b).sum()
}

/// Quadratic data of an ℓ¹ formulation: `½xᵀQx − cᵀx`, plus the callable objective.
struct L1Fidelity {
    quad: SpectralQuadratic,
    linear: DVector<f64>,
}

fn l1_fidelity(
    formulation: Formulation,
    prob: &InverseProblem,
    op: &TruncatedOperator,
) -> Result<L1Fidelity> {
    check_dim(prob.a.cols(), op.cols())?;
    check_dim(prob.a.rows(), op.rows())?;
    match formulation {
        Formulation::WeightedModFid => Ok(L1Fidelity {
            quad: SpectralQuadratic::new(
                op.right_k().into_owned(),
                DVector::from_element(op.k(), 1.0),
            ),
            linear: op.apply_pinv(&prob.y_delta)?,
        }),
        Formulation::StdL1 | Formulation::WeightedStdFid => Ok(L1Fidelity {
            quad: SpectralQuadratic::new(
                op.right_k().into_owned(),
                op.sigma_head().map(|s| s * s),
            ),
            linear: op.apply_transpose(&prob.y_delta)?,
        }),
        other => Err(Error::Input(format!("{other} is not an l1 formulation"))),
    }
}

fn l1_objective(
    formulation: Formulation,
    prob: &InverseProblem,
    op: &TruncatedOperator,
    x: &DVector<f64>,
    w: &DVector<f64>,
    alpha: f64,
) -> Result<f64> {
    let fid = match formulation {
        Formulation::WeightedModFid => {
            (op.project(x)? - op.apply_pinv(&prob.y_delta)?).norm_squared()
        }
        Formulation::StdL1 | Formulation::WeightedStdFid => {
            (op.apply(x)? - &prob.y_delta).norm_squared()
        }
        other => return Err(Error::Input(format!("{other} is not an l1 formulation"))),
    };
    Ok(0.5 * fid + alpha * l1_norm_weighted(x, w))
}

fn resolve_weights(
    formulation: Formulation,
    w: Option<&WeightingScheme>,
    n: usize,
) -> Result<DVector<f64>> {
    if formulation.is_weighted() {
        let w = w.ok_or_else(|| Error::Input(format!("{formulation} requires weights")))?;
        check_dim(n, w.len())?;
        Ok(w.weight_vector())
    } else {
        Ok(DVector::from_element(n, 1.0))
    }
}

/// ℓ¹ solve with an explicit `α`, optionally continuing from a previous iterate.
pub fn solve_l1_at(
    prob: &InverseProblem,
    op: &TruncatedOperator,
    w: Option<&WeightingScheme>,
    spec: &SolveSpec,
    alpha: f64,
    warm: Option<&mut AdmmState>,
) -> Result<Reconstruction> {
    spec.validate()?;
    if !(alpha > 0.0) {
        return Err(Error::Input(format!("alpha must be positive, got {alpha}")));
    }
    let weights = resolve_weights(spec.formulation, w, prob.a.cols())?;
    let fid = l1_fidelity(spec.formulation, prob, op)?;
    let setup = L1Setup {
        quad: &fid.quad,
        linear: &fid.linear,
        weights: &weights,
        alpha,
        bounds: spec.bounds,
        tol_primal: spec.tol_primal,
        tol_dual: spec.tol_dual,
        max_iter: spec.max_iter,
        kkt_tol: KKT_REL_TOL * alpha,
    };
    let mut local;
    let state = match warm {
        Some(s) if s.z.len() == prob.a.cols() => s,
        _ => {
            local = AdmmState::cold(prob.a.cols(), spec.rho);
            &mut local
        }
    };
    let out = setup.run(state);
    let objective = l1_objective(spec.formulation, prob, op, &out.x, &weights, alpha)?;
    Ok(Reconstruction {
        formulation: spec.formulation,
        alpha,
        residual_norm: prob.residual_norm(&out.x)?,
        objective,
        iterations: out.iterations,
        converged: out.converged,
        optimality_residual: out.kkt,
        support: support_of(&out.x),
        x: out.x,
    })
}

/// Solves one of the ℓ¹ formulations with the fixed `α` carried by `spec`.
///
/// All three use the truncated operator `A_k`. `STD_L1` always has unit weights; the
/// weighted formulations require `w`. A solve that does not reach the optimality tolerance comes back with
/// `converged = false`.
pub fn solve_l1(
    prob: &InverseProblem,
    op: &TruncatedOperator,
    w: Option<&WeightingScheme>,
    spec: &SolveSpec,
) -> Result<Reconstruction> {
    if !spec.formulation.is_l1() {
        return Err(Error::Input(format!(
            "{} is not an l1 formulation",
            spec.formulation
        )));
    }
    match spec.alpha {
        AlphaRule::Fixed(alpha) => solve_l1_at(prob, op, w, spec, alpha, None),
        AlphaRule::Morozov => Err(Error::Input(
            "solve_l1 needs a fixed alpha; use reconstruct for the discrepancy rule".into(),
        )),
    }
}

/// A reconstruction together with the parameter search that produced it, if any.
#[derive(Debug, Clone)]
pub struct Solution {
    pub reconstruction: Reconstruction,
    pub morozov: Option<MorozovReport>,
}

fn solve_at(
    prob: &InverseProblem,
    op: &TruncatedOperator,
    w: Option<&WeightingScheme>,
    spec: &SolveSpec,
    alpha: f64,
    warm: Option<&mut AdmmState>,
) -> Result<Reconstruction> {
    match spec.formulation {
        f if f.is_l1() => solve_l1_at(prob, op, w, spec, alpha, warm),
        Formulation::Tikhonov => solve_tikhonov(prob, op, Fidelity::Full, None, alpha),
        Formulation::WeightedTikhonov => {
            let w = w.ok_or_else(|| Error::Input("W_TIKH requires weights".into()))?;
            solve_tikhonov(prob, op, Fidelity::Truncated, Some(w), alpha)
        }
        _ => unreachable!("basis pursuit has no regularization parameter"),
    }
}

/// Dispatches any formulation, resolving `α` by the discrepancy principle when asked.
pub fn reconstruct(
    prob: &InverseProblem,
    op: &TruncatedOperator,
    w: Option<&WeightingScheme>,
    spec: &SolveSpec,
) -> Result<Solution> {
    spec.validate()?;
    if spec.formulation == Formulation::BasisPursuit {
        let w = w.ok_or_else(|| Error::Input("BASIS_PURSUIT requires weights".into()))?;
        let target = op.apply_pinv(&prob.y_delta)?;
        let mut rec = solve_basis_pursuit_projected(op, w, &target)?;
        rec.residual_norm = prob.residual_norm(&rec.x)?;
        return Ok(Solution {
            reconstruction: rec,
            morozov: None,
        });
    }
    match spec.alpha {
        AlphaRule::Fixed(alpha) => Ok(Solution {
            reconstruction: solve_at(prob, op, w, spec, alpha, None)?,
            morozov: None,
        }),
        AlphaRule::Morozov => {
            let mut warm = AdmmState::cold(prob.a.cols(), spec.rho);
            let mut last: Option<Reconstruction> = None;
            let report = morozov_alpha(
                |alpha| {
                    let rec = solve_at(prob, op, w, spec, alpha, Some(&mut warm))?;
                    let r = rec.residual_norm;
                    last = Some(rec);
                    Ok(r)
                },
                prob.delta,
            )?;
            let rec = match last {
                Some(rec) if rec.alpha == report.alpha => rec,
                _ => solve_at(prob, op, w, spec, report.alpha, Some(&mut warm))?,
            };
            Ok(Solution {
                reconstruction: rec,
                morozov: Some(report),
            })
        }
    }
}

/// Column `j` of a matrix as an owned vector; the image `Kφ_j` in canonical coordinates.
pub fn unit_vector(n: usize, j: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[j] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::linop::compute_singular_system;
    use crate::weighting::{compute_weights, Basis};

    fn op_for(a: &DenseMatrix, k: usize) -> TruncatedOperator {
        TruncatedOperator::new(Arc::new(compute_singular_system(a).unwrap()), k).unwrap()
    }

    #[test]
    fn formulation_tags_roundtrip() {
        for f in Formulation::ALL {
            assert_eq!(f.tag().parse::<Formulation>().unwrap(), f);
        }
        assert!("L2".parse::<Formulation>().is_err());
    }

    #[test]
    fn large_alpha_kills_solution() {
        let a = DenseMatrix::from_row_major(2, 2, &[1.0, 0.2, 0.1, 0.7]).unwrap();
        let op = op_for(&a, 2);
        let prob = InverseProblem::new(a, DVector::from_vec(vec![1.0, 0.5]), 0.0).unwrap();
        let rec = solve_l1(&prob, &op, None, &SolveSpec::fixed(Formulation::StdL1, 10.0)).unwrap();
        assert_eq!(rec.x.amax(), 0.0);
        assert!(rec.converged);
        assert!(rec.support.is_empty());
    }

    #[test]
    fn weighted_formulations_require_weights() {
        let a = DenseMatrix::identity(2);
        let op = op_for(&a, 2);
        let prob = InverseProblem::new(a, DVector::from_vec(vec![1.0, 0.5]), 0.0).unwrap();
        let spec = SolveSpec::fixed(Formulation::WeightedModFid, 0.1);
        assert!(solve_l1(&prob, &op, None, &spec).is_err());
        let w = compute_weights(&op, &Basis::Canonical, 1e-3).unwrap();
        assert!(solve_l1(&prob, &op, Some(&w), &spec).is_ok());
    }

    #[test]
    fn invalid_specs_rejected() {
        let a = DenseMatrix::identity(2);
        let op = op_for(&a, 2);
        let prob = InverseProblem::new(a, DVector::from_vec(vec![1.0, 0.5]), 0.0).unwrap();
        let bad_alpha = SolveSpec::fixed(Formulation::StdL1, -1.0);
        assert!(solve_l1(&prob, &op, None, &bad_alpha).is_err());
        let bad_box = SolveSpec::fixed(Formulation::StdL1, 0.1).with_bounds(1.0, 0.0);
        assert!(solve_l1(&prob, &op, None, &bad_box).is_err());
        let morozov = SolveSpec::new(Formulation::StdL1, AlphaRule::Morozov);
        assert!(solve_l1(&prob, &op, None, &morozov).is_err());
    }

    #[test]
    fn synthetic_problem_tracks_noise() {
        let a = DenseMatrix::identity(2);
        let p = InverseProblem::synthetic(
            a,
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![0.3, -0.4]),
        )
        .unwrap();
        assert!((p.delta - 0.5).abs() < 1e-15);
        assert!((p.y_delta[1] - 1.6).abs() < 1e-15);
    }

    #[test]
    fn support_threshold_is_relative() {
        let x = DVector::from_vec(vec![1.0, 1e-7, -2e-6, 0.0]);
        assert_eq!(support_of(&x), vec![0, 2]);
        assert!(support_of(&DVector::zeros(3)).is_empty());
    }

    #[test]
    fn csv_and_sidecar() {
        let rec = Reconstruction {
            formulation: Formulation::WeightedStdFid,
            alpha: 0.5,
            x: DVector::from_vec(vec![0.0, 1.5]),
            residual_norm: 0.1,
            objective: 0.2,
            iterations: 3,
            converged: true,
            optimality_residual: 0.0,
            support: vec![1],
        };
        assert!(rec.to_csv().starts_with("index,value\n0,"));
        let js = rec.sidecar(Some(2), Some(1e-3));
        assert_eq!(js["formulation"], "W_L1_STDFID");
        assert_eq!(js["k"], 2);
    }
}
