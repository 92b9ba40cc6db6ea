//! ADMM for `min ½xᵀQx − cᵀx + α Σ w_i|x_i|` (optionally over a box) and for weighted
//! basis pursuit over the affine set `{x : P_k x = P_k t}`.

use nalgebra::{DMatrix, DVector};

use super::active_set::ActiveSetProblem;
use super::kkt::subgradient_residual;
use super::quadratic::SpectralQuadratic;
use crate::linop::lstsq;

const BALANCE_EVERY: usize = 10;
const BALANCE_RATIO: f64 = 10.0;
const KKT_EVERY: usize = 10;
const REFINE_EVERY: usize = 100;
/// Basis pursuit stops adapting ρ after this many changes.
const MAX_RHO_CHANGES: usize = 100;

/// Iterate carried between solves so that a sequence of related problems (e.g. a
/// parameter search over `α`) can warm start.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub z: DVector<f64>,
    pub u: DVector<f64>,
    pub rho: f64,
}

impl AdmmState {
    pub fn cold(n: usize, rho: f64) -> Self {
        Self {
            z: DVector::zeros(n),
            u: DVector::zeros(n),
            rho,
        }
    }
}

pub(crate) struct L1Setup<'a> {
    pub quad: &'a SpectralQuadratic,
    pub linear: &'a DVector<f64>,
    pub weights: &'a DVector<f64>,
    pub alpha: f64,
    pub bounds: Option<(f64, f64)>,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
    pub kkt_tol: f64,
}

pub(crate) struct AdmmOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub kkt: f64,
    pub converged: bool,
}

pub(crate) fn soft_threshold(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

impl L1Setup<'_> {
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.quad.apply(x) - self.linear
    }

    fn kkt(&self, x: &DVector<f64>) -> f64 {
        subgradient_residual(x, &self.gradient(x), self.weights, self.alpha, self.bounds)
    }

    fn prox(&self, v: &DVector<f64>, rho: f64) -> DVector<f64> {
        DVector::from_fn(v.len(), |i, _| {
            let s = soft_threshold(v[i], self.alpha * self.weights[i] / rho);
            match self.bounds {
                Some((lo, hi)) => s.clamp(lo, hi),
                None => s,
            }
        })
    }

    /// Optimality tolerance at `x`: the requested one, raised to the rounding level of the
    /// gradient evaluation.
    fn kkt_target(&self, x: &DVector<f64>) -> f64 {
        let dmax = self.quad.diag().amax();
        let rounding = 1e3 * f64::EPSILON * (self.linear.amax() + dmax * x.amax());
        self.kkt_tol.max(rounding)
    }

    fn refine(&self, x0: &DVector<f64>) -> (DVector<f64>, usize) {
        let problem = ActiveSetProblem {
            quad: self.quad,
            linear: self.linear,
            weights: self.weights,
            alpha: self.alpha,
            bounds: self.bounds,
        };
        let out = problem.solve(x0, 20 * x0.len() + 100);
        (out.x, out.steps)
    }

    /// ADMM in blocks of `REFINE_EVERY` iterations; after each block the active-set method
    /// is started from the current iterate and accepted once it certifies optimality.
    pub fn run(&self, state: &mut AdmmState) -> AdmmOutcome {
        let n = self.quad.dim();
        let sqrt_n = (n as f64).sqrt();
        let mut iterations = 0;

        for it in 1..=self.max_iter {
            iterations = it;
            let rhs = self.linear + (&state.z - &state.u) * state.rho;
            let x = self.quad.solve_shifted(&rhs, state.rho);
            let z_old = std::mem::replace(&mut state.z, self.prox(&(&x + &state.u), state.rho));
            let diff = &x - &state.z;
            state.u += &diff;

            let r_primal = diff.norm();
            let r_dual = state.rho * (&state.z - &z_old).norm();
            let eps_primal = self.tol_primal * (sqrt_n + x.norm().max(state.z.norm()));
            let eps_dual = self.tol_dual * (sqrt_n + state.rho * state.u.norm());
            if r_primal <= eps_primal && r_dual <= eps_dual {
                break;
            }
            if it % KKT_EVERY == 0 && self.kkt(&state.z) <= self.kkt_target(&state.z) {
                break;
            }
            if it % REFINE_EVERY == 0 {
                let (xr, steps) = self.refine(&state.z);
                if self.kkt(&xr) <= self.kkt_target(&xr) {
                    return AdmmOutcome {
                        kkt: self.kkt(&xr),
                        converged: true,
                        x: xr,
                        iterations: iterations + steps,
                    };
                }
            }
            if it % BALANCE_EVERY == 0 {
                if r_primal > BALANCE_RATIO * r_dual {
                    state.rho *= 2.0;
                    state.u /= 2.0;
                } else if r_dual > BALANCE_RATIO * r_primal {
                    state.rho /= 2.0;
                    state.u *= 2.0;
                }
            }
        }

        let mut x = state.z.clone();
        let mut kkt = self.kkt(&x);
        if kkt > self.kkt_target(&x) {
            let (xr, steps) = self.refine(&x);
            let kr = self.kkt(&xr);
            iterations += steps;
            if kr < kkt {
                x = xr;
                kkt = kr;
            }
        }
        AdmmOutcome {
            converged: kkt <= self.kkt_target(&x),
            x,
            iterations,
            kkt,
        }
    }
}

pub(crate) struct BasisPursuitSetup<'a> {
    /// Orthonormal basis of the constrained subspace (`v_1..v_k` as columns).
    pub vk: &'a DMatrix<f64>,
    /// Right-hand side in projection form: `x` must satisfy `P_k x = target_proj`.
    pub target_proj: &'a DVector<f64>,
    pub weights: &'a DVector<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

pub(crate) struct BasisPursuitOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub certificate_gap: f64,
}

impl BasisPursuitSetup<'_> {
    fn project_affine(&self, v: &DVector<f64>) -> DVector<f64> {
        let pv = self.vk * self.vk.tr_mul(v);
        v - pv + self.target_proj
    }

    pub fn run(&self) -> BasisPursuitOutcome {
        let n = self.vk.nrows();
        let sqrt_n = (n as f64).sqrt();
        let mut rho = 1.0;
        let mut z = DVector::zeros(n);
        let mut u = DVector::zeros(n);
        let mut iterations = 0;
        let mut rho_changes = 0;
        for it in 1..=self.max_iter {
            iterations = it;
            let x = self.project_affine(&(&z - &u));
            let v = &x + &u;
            let z_new = DVector::from_fn(n, |i, _| soft_threshold(v[i], self.weights[i] / rho));
            let diff = &x - &z_new;
            u += &diff;
            let r_primal = diff.norm();
            let r_dual = rho * (&z_new - &z).norm();
            z = z_new;
            if r_primal <= self.tol * (sqrt_n + x.norm().max(z.norm()))
                && r_dual <= self.tol * (sqrt_n + rho * u.norm())
            {
                break;
            }
            // Balancing can cycle; a correct support is often visible long before the
            // iterates settle, so try the vertex it defines.
            if it % REFINE_EVERY == 0 {
                let support: Vec<usize> = (0..n).filter(|&i| z[i] != 0.0).collect();
                if let Some((x, gap)) = self.refit(&support, &z) {
                    if gap <= self.tol {
                        return BasisPursuitOutcome {
                            x,
                            iterations,
                            certificate_gap: gap,
                        };
                    }
                }
            }
            if it % BALANCE_EVERY == 0 && rho_changes < MAX_RHO_CHANGES {
                if r_primal > BALANCE_RATIO * r_dual {
                    rho *= 2.0;
                    u /= 2.0;
                    rho_changes += 1;
                } else if r_dual > BALANCE_RATIO * r_primal {
                    rho /= 2.0;
                    u *= 2.0;
                    rho_changes += 1;
                }
            }
        }

        // ADMM's z is sparse but only approximately feasible; refit on its support.
        let support: Vec<usize> = (0..n).filter(|&i| z[i] != 0.0).collect();
        if let Some((x, gap)) = self.refit(&support, &z) {
            return BasisPursuitOutcome {
                x,
                iterations,
                certificate_gap: gap,
            };
        }
        let x = self.project_affine(&z);
        let gap = self.certificate_gap(&x);
        BasisPursuitOutcome {
            x,
            iterations,
            certificate_gap: gap,
        }
    }

    fn refit(&self, support: &[usize], z: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
        let n = self.vk.nrows();
        if support.is_empty() {
            if self.target_proj.amax() == 0.0 {
                return Some((DVector::zeros(n), 0.0));
            }
            return None;
        }
        // V_kᵀ[:, S] x_S = V_kᵀ t
        let sys = self.vk.select_rows(support).transpose();
        let rhs = self.vk.tr_mul(self.target_proj);
        let xs = lstsq(&sys, &rhs, 1e-13);
        let mut x = DVector::zeros(n);
        for (a, &i) in support.iter().enumerate() {
            if xs[a].signum() != z[i].signum() {
                return None;
            }
            x[i] = xs[a];
        }
        let viol = (self.vk.tr_mul(&x) - rhs).norm();
        if viol > 1e-10 * (1.0 + self.target_proj.norm()) {
            return None;
        }
        let gap = self.certificate_gap(&x);
        Some((x, gap))
    }

    /// Dual certificate check: find `λ` with `(V_k λ)_i = w_i sign(x_i)` on the support and
    /// report how far `|(V_k λ)_i|/w_i` exceeds one off the support.
    pub fn certificate_gap(&self, x: &DVector<f64>) -> f64 {
        let n = x.len();
        let support: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
        if support.is_empty() {
            return 0.0;
        }
        let rows = self.vk.select_rows(&support);
        let rhs = DVector::from_fn(support.len(), |a, _| {
            self.weights[support[a]] * x[support[a]].signum()
        });
        let lambda = lstsq(&rows, &rhs, 1e-13);
        let s = self.vk * lambda;
        let mut gap = 0.0_f64;
        for i in 0..n {
            let ratio = s[i] / self.weights[i];
            if x[i] != 0.0 {
                gap = gap.max((ratio - x[i].signum()).abs());
            } else {
                gap = gap.max(ratio.abs() - 1.0);
            }
        }
        gap.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_shrinks() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn separable_lasso_matches_closed_form() {
        // Q = I: minimizer is soft(c, α w)
        let quad = SpectralQuadratic::new(DMatrix::identity(3, 3), DVector::from_element(3, 1.0));
        let c = DVector::from_vec(vec![2.0, -0.05, -1.0]);
        let w = DVector::from_vec(vec![1.0, 1.0, 0.5]);
        let setup = L1Setup {
            quad: &quad,
            linear: &c,
            weights: &w,
            alpha: 0.1,
            bounds: None,
            tol_primal: 1e-10,
            tol_dual: 1e-10,
            max_iter: 10_000,
            kkt_tol: 1e-12,
        };
        let mut st = AdmmState::cold(3, 1.0);
        let out = setup.run(&mut st);
        let expect = [1.9, 0.0, -0.95];
        for (got, want) in out.x.iter().zip(expect) {
            assert!((got - want).abs() < 1e-9, "{}", out.x);
        }
        assert!(out.kkt < 1e-9);
    }

    #[test]
    fn box_is_honored_exactly() {
        let quad = SpectralQuadratic::new(DMatrix::identity(2, 2), DVector::from_element(2, 1.0));
        let c = DVector::from_vec(vec![5.0, -3.0]);
        let w = DVector::from_element(2, 1.0);
        let setup = L1Setup {
            quad: &quad,
            linear: &c,
            weights: &w,
            alpha: 0.1,
            bounds: Some((0.0, 1.0)),
            tol_primal: 1e-10,
            tol_dual: 1e-10,
            max_iter: 10_000,
            kkt_tol: 1e-12,
        };
        let out = setup.run(&mut AdmmState::cold(2, 1.0));
        assert_eq!(out.x[0], 1.0);
        assert_eq!(out.x[1], 0.0);
        assert_eq!(out.kkt, 0.0);
    }
}
