//! Dense singular-value machinery.
//!
//! A [`SingularSystem`] holds the triplets `(σ_i, u_i, v_i)` of a dense matrix with
//! `σ` sorted non-increasingly. A [`TruncatedOperator`] keeps the first `k` of them and
//! provides the truncated forward map, its pseudoinverse and the orthogonal projection
//! onto `span{v_1, …, v_k}`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Dense real matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    inner: DMatrix<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from entries listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows * cols != entries.len() {
            return Err(Error::Input(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_matrix(inner: DMatrix<f64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::Input("matrix must have at least one row and column".into()));
        }
        if let Some(pos) = inner.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % inner.nrows(), pos / inner.nrows());
            return Err(Error::Input(format!("non-finite entry at ({r}, {c})")));
        }
        Ok(Self { inner })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_matrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.inner[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.inner.column(j).into_owned()
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.inner.transpose().iter().copied().collect()
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.cols(), x.len())?;
        Ok(&self.inner * x)
    }

    pub fn tr_mul_vec(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.rows(), y.len())?;
        Ok(self.inner.tr_mul(y))
    }
}

/// Singular system `(σ_i, u_i, v_i)`, `i = 1..min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SingularSystem {
    sigma: DVector<f64>,
    left: DMatrix<f64>,
    right: DMatrix<f64>,
    rank: usize,
}

impl SingularSystem {
    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    /// Left singular vectors as columns (`rows x p`).
    pub fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    /// Right singular vectors as columns (`cols x p`).
    pub fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    /// Number of singular values above the drop tolerance.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rows(&self) -> usize {
        self.left.nrows()
    }

    pub fn cols(&self) -> usize {
        self.right.nrows()
    }

    /// Number of stored triplets, `min(rows, cols)`.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// `σ_i` with 1-based index `i`, or zero past the stored triplets.
    pub fn sigma_at(&self, i: usize) -> f64 {
        if i >= 1 && i <= self.sigma.len() {
            self.sigma[i - 1]
        } else {
            0.0
        }
    }

    pub fn drop_tolerance(&self) -> f64 {
        drop_tolerance(self.sigma_at(1), self.rows(), self.cols())
    }

    /// `Σ σ_i u_i v_iᵀ` over the first `terms` triplets.
    pub fn reconstruct(&self, terms: usize) -> DMatrix<f64> {
        let t = terms.min(self.len());
        let mut us = self.left.columns(0, t).into_owned();
        for (i, mut col) in us.column_iter_mut().enumerate() {
            col *= self.sigma[i];
        }
        us * self.right.columns(0, t).transpose()
    }

    /// Coefficients `(y, u_i)` for all stored triplets.
    pub fn left_coefficients(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.rows(), y.len())?;
        Ok(self.left.tr_mul(y))
    }

    /// Coefficients `(x, v_i)` for all stored triplets.
    pub fn right_coefficients(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.cols(), x.len())?;
        Ok(self.right.tr_mul(x))
    }
}

pub(crate) fn drop_tolerance(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    f64::EPSILON * sigma_max * rows.max(cols) as f64
}

/// Computes the singular system of `a`.
///
/// Singular values below `ε·σ_1·max(rows, cols)` do not count towards the rank. Each
/// `v_i` is oriented so that its first nonzero entry is positive (with `u_i` flipped
/// along).
pub fn compute_singular_system(a: &DenseMatrix) -> Result<SingularSystem> {
    let scale = a.inner.amax();
    if scale == 0.0 {
        return Err(Error::Input("matrix is identically zero".into()));
    }
    // the scaled copy keeps tiny-magnitude inputs away from underflow
    let (u, s, v) = thin_svd(&(&a.inner / scale));
    let p = s.len();
    let mut sigma = DVector::zeros(p);
    let mut left = DMatrix::zeros(a.rows(), p);
    let mut right = DMatrix::zeros(a.cols(), p);
    for i in 0..p {
        sigma[i] = s[i] * scale;
        let mut vi = v.column(i).into_owned();
        let mut ui = u.column(i).into_owned();
        if let Some(first) = vi.iter().find(|c| c.abs() > 1e-12) {
            if *first < 0.0 {
                vi.neg_mut();
                ui.neg_mut();
            }
        }
        right.set_column(i, &vi);
        left.set_column(i, &ui);
    }

    let tol = drop_tolerance(sigma[0], a.rows(), a.cols());
    let rank = sigma.iter().take_while(|&&s| s >= tol && s > 0.0).count();
    Ok(SingularSystem {
        sigma,
        left,
        right,
        rank,
    })
}

/// The truncated operator `K_k x = Σ_{i≤k} σ_i (x, v_i) u_i`.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    system: Arc<SingularSystem>,
    k: usize,
}

impl TruncatedOperator {
    /// Requires `1 ≤ k ≤ rank`.
    pub fn new(system: Arc<SingularSystem>, k: usize) -> Result<Self> {
        if k == 0 || k > system.rank() {
            return Err(Error::Input(format!(
                "truncation level {k} outside 1..={}",
                system.rank()
            )));
        }
        Ok(Self { system, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn system(&self) -> &SingularSystem {
        &self.system
    }

    pub fn shared_system(&self) -> Arc<SingularSystem> {
        Arc::clone(&self.system)
    }

    pub fn rows(&self) -> usize {
        self.system.rows()
    }

    pub fn cols(&self) -> usize {
        self.system.cols()
    }

    /// `σ_k`, the smallest retained singular value.
    pub fn sigma_k(&self) -> f64 {
        self.system.sigma_at(self.k)
    }

    /// `σ_{k+1}`, zero when no further triplet exists.
    pub fn sigma_next(&self) -> f64 {
        self.system.sigma_at(self.k + 1)
    }

    /// First `k` right singular vectors as columns.
    pub fn right_k(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.system.right.columns(0, self.k)
    }

    /// First `k` left singular vectors as columns.
    pub fn left_k(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.system.left.columns(0, self.k)
    }

    pub fn sigma_head(&self) -> nalgebra::DVectorView<'_, f64> {
        self.system.sigma.rows(0, self.k)
    }

    /// `K_k x`.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.cols(), x.len())?;
        let coeffs = self.right_k().tr_mul(x).component_mul(&self.sigma_head());
        Ok(self.left_k() * coeffs)
    }

    /// `K_kᵀ y`.
    pub fn apply_transpose(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.rows(), y.len())?;
        let coeffs = self.left_k().tr_mul(y).component_mul(&self.sigma_head());
        Ok(self.right_k() * coeffs)
    }

    /// `K_k† y = Σ_{i≤k} σ_i⁻¹ (y, u_i) v_i`.
    pub fn apply_pinv(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.rows(), y.len())?;
        if self.sigma_k() < self.system.drop_tolerance() || self.sigma_k() == 0.0 {
            return Err(Error::Singular(format!(
                "sigma_{} = {:.3e} is below the drop tolerance",
                self.k,
                self.sigma_k()
            )));
        }
        let coeffs = self.left_k().tr_mul(y).component_div(&self.sigma_head());
        Ok(self.right_k() * coeffs)
    }

    /// `P_k x = Σ_{i≤k} (x, v_i) v_i`.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.cols(), x.len())?;
        let vk = self.right_k();
        Ok(vk * vk.tr_mul(x))
    }

    /// The truncated matrix `A_k`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        self.system.reconstruct(self.k)
    }
}

/// Thin SVD `a = U diag(s) Vᵀ` with `p = min(rows, cols)` columns in `U` and `V` and `s`
/// sorted non-increasingly.
///
/// Tall inputs are reduced by a Householder QR; the square factor is diagonalized by
/// cyclic one-sided Jacobi rotations, which keeps small singular values accurate to
/// working precision relative to the column they come from.
pub fn thin_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    if a.nrows() < a.ncols() {
        let (u, s, v) = thin_svd(&a.transpose());
        return (v, s, u);
    }
    let (m, n) = a.shape();
    let qr = a.clone().qr();
    let q = qr.q();
    let mut g = qr.r();
    let mut v = DMatrix::<f64>::identity(n, n);

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for r in p + 1..n {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(r).norm_squared();
                let gamma = g.column(p).dot(&g.column(r));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate(&mut g, p, r, c, sn);
                rotate(&mut v, p, r, c, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| g.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut s = DVector::zeros(n);
    let mut ur = DMatrix::zeros(n, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut missing = Vec::new();
    // columns this small carry no direction information
    let negligible = f64::EPSILON * norms[order[0]] * n as f64;
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = norms[src];
        vs.set_column(dst, &v.column(src));
        if norms[src] > negligible {
            ur.set_column(dst, &(g.column(src) / norms[src]));
        } else {
            missing.push(dst);
        }
    }
    // left vectors of negligible singular values: complete to an orthonormal set
    let mut e = 0;
    for dst in missing {
        loop {
            let mut cand = DVector::zeros(n);
            cand[e % n] = 1.0;
            e += 1;
            for _ in 0..2 {
                for j in 0..n {
                    if ur.column(j).norm_squared() > 0.0 {
                        let proj = ur.column(j).dot(&cand);
                        cand -= ur.column(j) * proj;
                    }
                }
            }
            let nrm = cand.norm();
            if nrm > 0.5 {
                ur.set_column(dst, &(cand / nrm));
                break;
            }
        }
    }
    let u = q * ur;
    debug_assert_eq!(u.shape(), (m, n));
    (u, s, vs)
}

fn rotate(a: &mut DMatrix<f64>, p: usize, r: usize, c: f64, s: f64) {
    for i in 0..a.nrows() {
        let x = a[(i, p)];
        let y = a[(i, r)];
        a[(i, p)] = c * x - s * y;
        a[(i, r)] = s * x + c * y;
    }
}

/// Minimum-norm least-squares solution of `a x = b`, discarding singular values below
/// `rtol·s_1`.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rtol: f64) -> DVector<f64> {
    let (u, s, v) = thin_svd(a);
    let cut = rtol * s.get(0).copied().unwrap_or(0.0);
    let c = u.tr_mul(b);
    let y = DVector::from_fn(s.len(), |i, _| if s[i] > cut && s[i] > 0.0 { c[i] / s[i] } else { 0.0 });
    v * y
}

/// Spectral norm estimate by power iteration on `AᵀA`.
pub fn spectral_norm_estimate(a: &DMatrix<f64>, iterations: usize) -> f64 {
    let n = a.ncols();
    // deterministic, not aligned with any canonical axis
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.754_877).sin());
    let mut est = 0.0;
    for _ in 0..iterations {
        let nx = x.norm();
        if nx == 0.0 {
            return 0.0;
        }
        x /= nx;
        let ax = a * &x;
        est = ax.norm();
        x = a.tr_mul(&ax);
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag321() -> DenseMatrix {
        DenseMatrix::from_row_major(3, 3, &[3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn diagonal_singular_system() {
        let s = compute_singular_system(&diag321()).unwrap();
        assert_eq!(s.rank(), 3);
        for (i, expect) in [3.0, 2.0, 1.0].iter().enumerate() {
            assert!((s.sigma()[i] - expect).abs() < 1e-14);
            assert!((s.right()[(i, i)].abs() - 1.0).abs() < 1e-14);
            assert!((s.left()[(i, i)].abs() - 1.0).abs() < 1e-14);
            // sign convention: first nonzero entry of v_i positive
            assert!(s.right()[(i, i)] > 0.0);
        }
    }

    #[test]
    fn tiny_scale_matrix_is_accepted() {
        let a = DenseMatrix::from_fn(3, 3, |_, _| 1e-300).unwrap();
        let s = compute_singular_system(&a).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.sigma()[0] / 3e-300 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DenseMatrix::from_row_major(1, 2, &[1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_row_major(2, 2, &[1.0]).is_err());
        let zero = DenseMatrix::from_fn(2, 2, |_, _| 0.0).unwrap();
        assert!(compute_singular_system(&zero).is_err());
    }

    #[test]
    fn truncated_apply_and_pinv_on_diagonal() {
        let s = Arc::new(compute_singular_system(&diag321()).unwrap());
        let op = TruncatedOperator::new(s, 2).unwrap();
        let y = op.apply(&DVector::from_vec(vec![1.0, 1.0, 1.0])).unwrap();
        assert!((y - DVector::from_vec(vec![3.0, 2.0, 0.0])).amax() < 1e-14);
        let x = op.apply_pinv(&DVector::from_vec(vec![3.0, 2.0, 1.0])).unwrap();
        assert!((x - DVector::from_vec(vec![1.0, 1.0, 0.0])).amax() < 1e-14);
        let z = op.apply_pinv(&DVector::from_vec(vec![0.0, 0.0, 5.0])).unwrap();
        assert!(z.amax() < 1e-15);
    }

    #[test]
    fn truncation_level_validated() {
        let s = Arc::new(compute_singular_system(&diag321()).unwrap());
        assert!(TruncatedOperator::new(Arc::clone(&s), 0).is_err());
        assert!(TruncatedOperator::new(s, 4).is_err());
    }

    #[test]
    fn dimension_mismatch_reported() {
        let s = Arc::new(compute_singular_system(&diag321()).unwrap());
        let op = TruncatedOperator::new(s, 2).unwrap();
        let bad = DVector::zeros(4);
        assert!(matches!(op.apply(&bad), Err(Error::Dimension { .. })));
        assert!(matches!(op.project(&bad), Err(Error::Dimension { .. })));
        assert!(matches!(op.apply_pinv(&bad), Err(Error::Dimension { .. })));
    }

    #[test]
    fn projection_fixes_subspace_and_kills_complement() {
        let s = Arc::new(compute_singular_system(&diag321()).unwrap());
        let op = TruncatedOperator::new(s, 2).unwrap();
        let v1 = op.right_k().column(0).into_owned();
        assert!((op.project(&v1).unwrap() - &v1).amax() < 1e-15);
        let e3 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(op.project(&e3).unwrap().amax() < 1e-15);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let est = spectral_norm_estimate(diag321().as_matrix(), 200);
        assert!((est - 3.0).abs() < 1e-10);
    }

    #[test]
    fn row_major_roundtrip() {
        let a = DenseMatrix::from_row_major(2, 3, &[1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.to_row_major(), vec![1., 2., 3., 4., 5., 6.]);
    }
}
