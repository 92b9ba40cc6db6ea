//! Reference computations written independently of the library code paths.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

/// Singular values (descending) and right singular vectors by plain one-sided Jacobi on
/// the columns of `a`, with no preconditioning.
pub fn jacobi_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let mut u = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = (0..m).map(|i| u[(i, p)] * u[(i, p)]).sum();
                let beta: f64 = (0..m).map(|i| u[(i, q)] * u[(i, q)]).sum();
                let gamma: f64 = (0..m).map(|i| u[(i, p)] * u[(i, q)]).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                // angle that zeroes the off-diagonal entry of the 2×2 Gram block
                let theta = 0.5 * (2.0 * gamma).atan2(alpha - beta);
                let (s, c) = theta.sin_cos();
                for i in 0..m {
                    let (x, y) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = c * x + s * y;
                    u[(i, q)] = -s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x + s * y;
                    v[(i, q)] = -s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(f64, usize)> = (0..n).map(|j| (u.column(j).norm(), j)).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let sigma = order.iter().map(|o| o.0).collect();
    let vs = DMatrix::from_fn(n, n, |i, j| v[(i, order[j].1)]);
    (sigma, vs)
}

/// Orthogonal projector onto the span of the first `k` right singular vectors.
pub fn projector(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (_, v) = jacobi_svd(a);
    let vk = v.columns(0, k).into_owned();
    &vk * vk.transpose()
}

/// `max(‖P e_i‖, τ)` from the oracle projector.
pub fn oracle_weights(a: &DMatrix<f64>, k: usize, tau: f64) -> Vec<f64> {
    let p = projector(a, k);
    (0..a.ncols()).map(|i| p.column(i).norm().max(tau)).collect()
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `min Σ w_i|x_i|` subject to `C x = d` for `C` of full row rank, by enumerating every basic
/// feasible solution of the split problem `x = p − q`, `p, q ≥ 0`.
pub fn lp_weighted_l1(c: &DMatrix<f64>, d: &DVector<f64>, w: &[f64]) -> (f64, DVector<f64>) {
    let (k, n) = c.shape();
    let big = DMatrix::from_fn(k, 2 * n, |i, j| if j < n { c[(i, j)] } else { -c[(i, j - n)] });
    let cost: Vec<f64> = (0..2 * n).map(|j| w[j % n]).collect();
    let mut best = (f64::INFINITY, DVector::zeros(n));
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let b = DMatrix::from_fn(k, k, |i, j| big[(i, idx[j])]);
        if let Some(z) = b.clone().lu().solve(d) {
            let ok = (&b * &z - d).norm() <= 1e-9 * (1.0 + d.norm());
            if ok && z.iter().all(|&v| v >= -1e-12) {
                let obj: f64 = idx.iter().zip(z.iter()).map(|(&j, &v)| cost[j] * v.max(0.0)).sum();
                if obj < best.0 {
                    let mut x = DVector::zeros(n);
                    for (&j, &v) in idx.iter().zip(z.iter()) {
                        if j < n {
                            x[j] += v;
                        } else {
                            x[j - n] -= v;
                        }
                    }
                    best = (obj, x);
                }
            }
        }
        if !next_combination(&mut idx, 2 * n) {
            break;
        }
    }
    best
}

/// Thomas algorithm for a tridiagonal system with constant off-diagonals.
fn tridiag_solve(lower: f64, diag: &[f64], upper: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower * c[i - 1];
        c[i] = upper / m;
        d[i] = (rhs[i] - lower * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// `u(z, t_final)` for `u_t = u_xx` on `(0, π)` with zero ends and `u(·,0) = χ_(a,b)`, by
/// Crank–Nicolson on `nodes` grid points with time step `dt`. Indicator jumps on nodes take ½.
pub fn crank_nicolson_heat(a: f64, b: f64, t_final: f64, nodes: usize, dt: f64, z: &[f64]) -> Vec<f64> {
    let h = PI / (nodes - 1) as f64;
    let inner = nodes - 2;
    let mut u: Vec<f64> = (1..=inner)
        .map(|i| {
            let x = i as f64 * h;
            let tol = 1e-9 * h;
            if (x - a).abs() < tol || (x - b).abs() < tol {
                0.5
            } else if x > a && x < b {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let r = dt / (h * h);
    let steps = (t_final / dt).round() as usize;
    let diag = vec![1.0 + r; inner];
    for _ in 0..steps {
        let rhs: Vec<f64> = (0..inner)
            .map(|i| {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < inner { u[i + 1] } else { 0.0 };
                (1.0 - r) * u[i] + 0.5 * r * (left + right)
            })
            .collect();
        u = tridiag_solve(-0.5 * r, &diag, -0.5 * r, &rhs);
    }
    z.iter()
        .map(|&zp| {
            let s = zp / h;
            let i = s.floor() as usize;
            let f = s - i as f64;
            let at = |k: usize| if k == 0 || k >= nodes - 1 { 0.0 } else { u[k - 1] };
            (1.0 - f) * at(i) + f * at(i + 1)
        })
        .collect()
}

/// Laplace equation on `r_in < r < r_out` with `u(r_in, θ) = g(θ)` and `∂_r u(r_out, θ) = 0`,
/// discretized by central differences on an `nr × nt` polar grid (`nt` periodic angles).
///
/// The discrete angular Laplacian is diagonal on discrete Fourier modes, so the 2-D system
/// separates into one radial tridiagonal solve per mode; those profiles are computed once.
pub struct PolarFd {
    r_in: f64,
    hr: f64,
    nt: usize,
    /// `radial[m][i]` at `r_in + i·hr`.
    radial: Vec<Vec<f64>>,
}

impl PolarFd {
    pub fn new(r_in: f64, r_out: f64, nr: usize, nt: usize) -> Self {
        let hr = (r_out - r_in) / (nr - 1) as f64;
        let ht = 2.0 * PI / nt as f64;
        let radial = (0..=nt / 2)
            .map(|m| {
                let lam = (2.0 - 2.0 * (m as f64 * ht).cos()) / (ht * ht);
                radial_fd(r_in, hr, nr, lam)
            })
            .collect();
        Self { r_in, hr, nt, radial }
    }

    /// Angle of grid column `j`.
    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * 2.0 * PI / self.nt as f64
    }

    fn profile(&self, m: usize, r: f64) -> f64 {
        let s = (r - self.r_in) / self.hr;
        let i = (s.floor() as usize).min(self.radial[m].len() - 2);
        let f = s - i as f64;
        (1.0 - f) * self.radial[m][i] + f * self.radial[m][i + 1]
    }

    /// Discrete solution for boundary samples `g[j] = g(θ_j)`, evaluated at `(r, θ)` points by
    /// linear interpolation in `r` and trigonometric interpolation in `θ`.
    pub fn solve_at(&self, g: &[f64], points: &[(f64, f64)]) -> Vec<f64> {
        let nt = self.nt;
        let ht = 2.0 * PI / nt as f64;
        let coeffs: Vec<(f64, f64)> = (0..=nt / 2)
            .map(|m| {
                let (mut c, mut s) = (0.0, 0.0);
                for (j, &gj) in g.iter().enumerate() {
                    if gj != 0.0 {
                        let t = (m * j) as f64 * ht;
                        c += gj * t.cos();
                        s += gj * t.sin();
                    }
                }
                let norm = if m == 0 || (nt.is_multiple_of(2) && m == nt / 2) { nt as f64 } else { nt as f64 / 2.0 };
                (c / norm, s / norm)
            })
            .collect();
        points
            .iter()
            .map(|&(r, theta)| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, &(c, s))| {
                        let t = m as f64 * theta;
                        self.profile(m, r) * (c * t.cos() + s * t.sin())
                    })
                    .sum()
            })
            .collect()
    }
}

/// Radial profile with value 1 at `r_in` and zero slope at the last node, for angular
/// eigenvalue `lam`: `R'' + R'/r − lam·R/r² = 0`.
fn radial_fd(r_in: f64, hr: f64, nr: usize, lam: f64) -> Vec<f64> {
    let n = nr - 1; // unknowns at nodes 1..=nr-1
    let mut sub = vec![0.0; n];
    let mut dia = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for k in 0..n {
        let i = k + 1;
        let r = r_in + i as f64 * hr;
        let lo = 1.0 / (hr * hr) - 1.0 / (2.0 * hr * r);
        let hi = 1.0 / (hr * hr) + 1.0 / (2.0 * hr * r);
        dia[k] = -2.0 / (hr * hr) - lam / (r * r);
        if i == nr - 1 {
            // ghost node mirrors the interior neighbour
            sub[k] = lo + hi;
        } else {
            sub[k] = lo;
            sup[k] = hi;
        }
        if k == 0 {
            rhs[k] -= lo;
            sub[k] = 0.0;
        }
    }
    // general tridiagonal Thomas sweep
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / dia[0];
    d[0] = rhs[0] / dia[0];
    for k in 1..n {
        let m = dia[k] - sub[k] * c[k - 1];
        c[k] = sup[k] / m;
        d[k] = (rhs[k] - sub[k] * d[k - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = d[k] - c[k] * x[k + 1];
    }
    let mut out = vec![1.0];
    out.extend(x);
    out
}

/// Independent subgradient residual of `½xᵀQx − cᵀx + α Σ w_i|x_i|` with optional box.
pub fn l1_kkt_residual(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    x: &DVector<f64>,
    w: &[f64],
    alpha: f64,
    bounds: Option<(f64, f64)>,
) -> f64 {
    let g = q * x - c;
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let t = -g[i];
        let aw = alpha * w[i];
        let at_lo = bounds.is_some_and(|(lo, _)| x[i] <= lo);
        let at_hi = bounds.is_some_and(|(_, hi)| x[i] >= hi);
        let (lo, hi) = match x[i].partial_cmp(&0.0).unwrap() {
            std::cmp::Ordering::Greater => (aw, aw),
            std::cmp::Ordering::Less => (-aw, -aw),
            std::cmp::Ordering::Equal => (-aw, aw),
        };
        let lo = if at_lo { f64::NEG_INFINITY } else { lo };
        let hi = if at_hi { f64::INFINITY } else { hi };
        let d = if t < lo { lo - t } else if t > hi { t - hi } else { 0.0 };
        worst = worst.max(d);
    }
    worst
}

/// Heat matrix rebuilt column by column from Crank–Nicolson runs (2001 nodes, `dt = 1e-4`).
pub fn heat_oracle_matrix(cfg: &ficnull::models::HeatModelConfig) -> DMatrix<f64> {
    let z = cfg.observation_points();
    let cols: Vec<DVector<f64>> = (0..cfg.n)
        .map(|q| {
            let (a, b) = cfg.interval(q);
            DVector::from_vec(crank_nicolson_heat(a, b, cfg.t_final, 2001, 1e-4, &z))
        })
        .collect();
    DMatrix::from_columns(&cols)
}

/// Annulus matrix rebuilt from the finite-difference solver, one column per arc indicator.
/// The angular grid is a multiple of the arc count so arc endpoints are grid points.
pub fn annulus_oracle_matrix(cfg: &ficnull::models::AnnulusModelConfig, arcs: usize, nr: usize, per_arc: usize) -> DMatrix<f64> {
    let nt = arcs * per_arc;
    let fd = PolarFd::new(cfg.r_inner, cfg.r_outer, nr, nt);
    let pts = cfg.observation_points();
    let cols: Vec<DVector<f64>> = (0..arcs)
        .map(|j| {
            let mut g = vec![0.0; nt];
            for k in 0..=per_arc {
                let idx = (j * per_arc + k) % nt;
                g[idx] += if k == 0 || k == per_arc { 0.5 } else { 1.0 };
            }
            DVector::from_vec(fd.solve_at(&g, &pts))
        })
        .collect();
    DMatrix::from_columns(&cols)
}
