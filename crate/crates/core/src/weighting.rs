//! Fictitious-null-space weights.
//!
//! For a truncation level `k` the weight of basis function `φ_i` is the length of its
//! projection onto `span{v_1, …, v_k}`, floored at a threshold `τ`. Basis functions that
//! the truncated operator barely sees get small weights and are therefore cheap to use
//! in a weighted ℓ¹ or Tikhonov penalty.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linop::{SingularSystem, TruncatedOperator};

pub const DEFAULT_TAU: f64 = 1e-3;

/// Orthonormal basis of the unknown space in which sparsity is measured.
#[derive(Debug, Clone)]
pub enum Basis {
    /// `φ_i = e_i`: the matrix columns are the images `Kφ_i`.
    Canonical,
    /// Explicit basis vectors stored as columns.
    Columns(DMatrix<f64>),
}

impl Basis {
    /// `φ_j` in a space of dimension `n`.
    pub fn vector(&self, n: usize, j: usize) -> DVector<f64> {
        match self {
            Basis::Canonical => {
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                e
            }
            Basis::Columns(phi) => phi.column(j).into_owned(),
        }
    }

    /// All basis vectors as columns.
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        match self {
            Basis::Canonical => DMatrix::identity(n, n),
            Basis::Columns(phi) => phi.clone(),
        }
    }

    /// Coefficients `(x, φ_i)`.
    pub fn coefficients(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Basis::Canonical => x.clone(),
            Basis::Columns(phi) => phi.tr_mul(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightingScheme {
    pub k: usize,
    pub tau: f64,
    /// `‖P_k φ_i‖` per basis index.
    pub proj_norms: Vec<f64>,
    /// `w_{k,i} = max(‖P_k φ_i‖, τ)`.
    pub weights: Vec<f64>,
}

impl WeightingScheme {
    /// Unit weights of length `n` (the unweighted penalty).
    pub fn unit(n: usize) -> Self {
        Self {
            k: 0,
            tau: 1.0,
            proj_norms: vec![1.0; n],
            weights: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_thresholded(&self, i: usize) -> bool {
        self.proj_norms[i] < self.tau
    }

    /// Whether basis function `j` passes the threshold, `‖P_k φ_j‖ ≥ τ`.
    pub fn admissible(&self, j: usize) -> bool {
        j < self.len() && self.proj_norms[j] >= self.tau
    }

    pub fn weight_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.weights)
    }

    /// CSV with columns `index,proj_norm,weight,thresholded`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,proj_norm,weight,thresholded\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{:.17e},{:.17e},{}",
                i,
                self.proj_norms[i],
                self.weights[i],
                self.is_thresholded(i)
            );
        }
        out
    }
}

/// Projection norms `‖P_k φ_i‖` and thresholded weights for every basis function.
pub fn compute_weights(op: &TruncatedOperator, basis: &Basis, tau: f64) -> Result<WeightingScheme> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Input(format!("threshold tau must be positive, got {tau}")));
    }
    let vk = op.right_k();
    // Gram block (v_j, φ_i), j ≤ k; ‖P_kφ_i‖² is the squared column norm.
    let gram = match basis {
        Basis::Canonical => vk.transpose(),
        Basis::Columns(phi) => {
            check_dim(op.cols(), phi.nrows())?;
            let dev = (phi.tr_mul(phi) - DMatrix::identity(phi.ncols(), phi.ncols())).amax();
            if dev > 1e-10 {
                return Err(Error::Input(format!(
                    "basis is not orthonormal (max Gram deviation {dev:.2e})"
                )));
            }
            vk.tr_mul(phi)
        }
    };
    let proj_norms: Vec<f64> = gram.column_iter().map(|c| c.norm()).collect();
    let weights = proj_norms
        .iter()
        .map(|&p| if p >= tau { p } else { tau })
        .collect();
    Ok(WeightingScheme {
        k: op.k(),
        tau,
        proj_norms,
        weights,
    })
}

/// Componentwise `W x` or, with `inverse`, `W⁻¹ x`.
pub fn weight_apply(w: &WeightingScheme, x: &DVector<f64>, inverse: bool) -> Result<DVector<f64>> {
    check_dim(w.len(), x.len())?;
    let wv = w.weight_vector();
    Ok(if inverse {
        x.component_div(&wv)
    } else {
        x.component_mul(&wv)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub k: usize,
    /// `|(y, u_i)|` for every stored singular triplet.
    pub signal_coeffs: Vec<f64>,
    /// `|(η, u_i)|` for every stored singular triplet.
    pub noise_coeffs: Vec<f64>,
    /// `|(y,u_k)| − |(η,u_k)|`.
    pub margin_k: f64,
    /// `|(η,u_{k+1})| − |(y,u_{k+1})|`, absent when `k` is the last triplet.
    pub margin_next: Option<f64>,
    /// Set when no level satisfied the crossing condition and the rank was returned.
    pub fallback: bool,
}

/// Picks the truncation level where the data coefficients sink below the noise.
///
/// Returns the largest `k ≤ rank` with `|(y,u_k)| > |(η,u_k)|` and
/// `|(y,u_{k+1})| ≤ |(η,u_{k+1})|`; falls back to the rank when no such level exists.
pub fn select_truncation(
    svd: &SingularSystem,
    y: &DVector<f64>,
    eta: &DVector<f64>,
) -> Result<TruncationReport> {
    check_dim(svd.rows(), eta.len())?;
    let signal: Vec<f64> = svd.left_coefficients(y)?.iter().map(|c| c.abs()).collect();
    let noise: Vec<f64> = svd.left_coefficients(eta)?.iter().map(|c| c.abs()).collect();
    let p = signal.len();
    let rank = svd.rank();

    let crossing = (1..=rank).rev().find(|&k| {
        let above = signal[k - 1] > noise[k - 1];
        let below_next = k == p || signal[k] <= noise[k];
        above && below_next
    });
    let (k, fallback) = match crossing {
        Some(k) => (k, false),
        None => (rank, true),
    };
    Ok(TruncationReport {
        k,
        margin_k: signal[k - 1] - noise[k - 1],
        margin_next: (k < p).then(|| noise[k] - signal[k]),
        signal_coeffs: signal,
        noise_coeffs: noise,
        fallback,
    })
}
