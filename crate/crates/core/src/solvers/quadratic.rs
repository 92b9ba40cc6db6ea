use nalgebra::{DMatrix, DVector};

/// Symmetric positive semidefinite `Q = B diag(d) Bᵀ` with orthonormal columns in `B`.
///
/// Every fidelity term used here has this shape once the singular system is known, so
/// `(Q + ρI)⁻¹` is available for any `ρ` without refactoring.
#[derive(Debug, Clone)]
pub(crate) struct SpectralQuadratic {
    basis: DMatrix<f64>,
    diag: DVector<f64>,
}

impl SpectralQuadratic {
    pub fn new(basis: DMatrix<f64>, diag: DVector<f64>) -> Self {
        debug_assert_eq!(basis.ncols(), diag.len());
        Self { basis, diag }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn diag(&self) -> &DVector<f64> {
        &self.diag
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let c = self.basis.tr_mul(x).component_mul(&self.diag);
        &self.basis * c
    }

    /// `(Q + ρI)⁻¹ r`.
    pub fn solve_shifted(&self, r: &DVector<f64>, rho: f64) -> DVector<f64> {
        let inv_rho = 1.0 / rho;
        let coeffs = self.basis.tr_mul(r);
        let adj = DVector::from_fn(self.diag.len(), |i, _| {
            coeffs[i] * (1.0 / (self.diag[i] + rho) - inv_rho)
        });
        r * inv_rho + &self.basis * adj
    }

    /// Principal submatrix `Q[S, S]`.
    #[cfg(test)]
    pub fn submatrix(&self, idx: &[usize]) -> DMatrix<f64> {
        let bs = self.basis.select_rows(idx);
        let mut scaled = bs.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.diag[j];
        }
        scaled * bs.transpose()
    }

    /// Columns `Q[:, S]` restricted to rows `R`.
    #[cfg(test)]
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        let br = self.basis.select_rows(rows);
        let mut bc = self.basis.select_rows(cols);
        for (j, mut col) in bc.column_iter_mut().enumerate() {
            col *= self.diag[j];
        }
        br * bc.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_solve_inverts() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.6, 0.0, 0.8]);
        let q = SpectralQuadratic::new(b, DVector::from_vec(vec![4.0, 0.5]));
        let r = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        for rho in [1e-3, 1.0, 7.5] {
            let x = q.solve_shifted(&r, rho);
            let back = q.apply(&x) + &x * rho;
            assert!((back - &r).amax() < 1e-12);
        }
        let full = q.submatrix(&[0, 1, 2]);
        let x = DVector::from_vec(vec![0.3, 0.1, -0.7]);
        assert!((&full * &x - q.apply(&x)).amax() < 1e-14);
        assert!((q.block(&[1], &[2])[(0, 0)] - full[(1, 2)]).abs() < 1e-15);
    }
}
