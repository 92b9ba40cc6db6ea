use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::DenseMatrix;

const TAIL_WARN: f64 = 1e-6;

/// Cauchy problem for the Laplacian on the annulus `r_inner < r < r_outer`: Dirichlet data
/// on the inner circle, homogeneous Neumann data on the outer circle, observations of `u`
/// on the sector `[r1, r2] × [θ1, θ2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusModelConfig {
    pub r_inner: f64,
    pub r_outer: f64,
    /// Arc count used to synthesize data.
    pub n_basis_fwd: usize,
    /// Arc count used for inversion.
    pub n_basis_inv: usize,
    /// Highest angular mode kept.
    pub n_fourier: usize,
    pub obs_r: (f64, f64),
    pub obs_theta: (f64, f64),
    /// Radial and angular sample counts; the samples are cell centres of the sector grid.
    pub obs_grid: (usize, usize),
}

impl Default for AnnulusModelConfig {
    fn default() -> Self {
        Self {
            r_inner: 0.5,
            r_outer: 1.0,
            n_basis_fwd: 180,
            n_basis_inv: 120,
            n_fourier: 64,
            obs_r: (0.7, 0.95),
            obs_theta: (PI / 3.0, 2.0 * PI / 3.0),
            obs_grid: (8, 15),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnulusRole {
    Forward,
    Inverse,
}

#[derive(Debug, Clone)]
pub struct AnnulusMatrix {
    pub matrix: DenseMatrix,
    /// Upper bound on the contribution of the modes above `n_fourier` to any sample.
    pub tail_bound: f64,
    pub warning: Option<String>,
}

impl AnnulusModelConfig {
    pub fn n_obs(&self) -> usize {
        self.obs_grid.0 * self.obs_grid.1
    }

    pub fn arcs(&self, role: AnnulusRole) -> usize {
        match role {
            AnnulusRole::Forward => self.n_basis_fwd,
            AnnulusRole::Inverse => self.n_basis_inv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (r1, r2) = self.obs_r;
        if !(0.0 < self.r_inner && self.r_inner < r1 && r1 <= r2 && r2 < self.r_outer && self.r_outer <= 1.0) {
            return Err(Error::Config(
                "annulus radii must satisfy 0 < r_inner < r1 <= r2 < r_outer <= 1".into(),
            ));
        }
        if !(self.obs_theta.0 <= self.obs_theta.1) {
            return Err(Error::Config("observation angles must be ordered".into()));
        }
        if self.n_basis_fwd == 0 || self.n_basis_inv == 0 {
            return Err(Error::Config("arc counts must be positive".into()));
        }
        if self.obs_grid.0 == 0 || self.obs_grid.1 == 0 {
            return Err(Error::Config("observation grid must be nonempty".into()));
        }
        Ok(())
    }

    /// Sample points `(r, θ)`, radius-major.
    pub fn observation_points(&self) -> Vec<(f64, f64)> {
        let (nr, nt) = self.obs_grid;
        let (r1, r2) = self.obs_r;
        let (t1, t2) = self.obs_theta;
        let mut pts = Vec::with_capacity(nr * nt);
        for i in 0..nr {
            let r = r1 + (i as f64 + 0.5) * (r2 - r1) / nr as f64;
            for j in 0..nt {
                pts.push((r, t1 + (j as f64 + 0.5) * (t2 - t1) / nt as f64));
            }
        }
        pts
    }

    /// Arc `j` of `count` arcs partitioning the inner circle, starting at angle 0.
    pub fn arc(count: usize, j: usize) -> (f64, f64) {
        let h = 2.0 * PI / count as f64;
        (j as f64 * h, (j + 1) as f64 * h)
    }

    pub fn arc_centers(count: usize) -> Vec<f64> {
        (0..count)
            .map(|j| {
                let (a, b) = Self::arc(count, j);
                0.5 * (a + b)
            })
            .collect()
    }

    /// Radial profile of mode `n`: harmonic, flat at `r_outer`, equal to 1 at `r_inner`.
    pub fn radial_profile(&self, n: usize, r: f64) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let nf = n as f64;
        let num = 1.0 + (r / self.r_outer).powf(2.0 * nf);
        let den = 1.0 + (self.r_inner / self.r_outer).powf(2.0 * nf);
        (self.r_inner / r).powf(nf) * num / den
    }

    /// Bound on `Σ_{n > n_fourier}` of the mode contributions of an arc indicator at radius
    /// `r1`: each Fourier term has amplitude at most `2/(nπ)` and the profile at most
    /// `2(r_inner/r1)ⁿ`.
    pub fn tail_bound(&self) -> f64 {
        let rho = self.r_inner / self.obs_r.0;
        let n = (self.n_fourier + 1) as f64;
        4.0 / (n * PI) * rho.powf(n) / (1.0 - rho)
    }
}

/// Value at `(r, θ)` of the harmonic function with Dirichlet data `χ_(θa,θb)` on the inner
/// circle and zero normal derivative on the outer circle, truncated at `n_fourier` modes.
pub fn arc_response(cfg: &AnnulusModelConfig, (ta, tb): (f64, f64), r: f64, theta: f64) -> f64 {
    let mut u = (tb - ta) / (2.0 * PI);
    for n in 1..=cfg.n_fourier {
        let nf = n as f64;
        let angular = ((nf * (tb - theta)).sin() - (nf * (ta - theta)).sin()) / (nf * PI);
        u += angular * cfg.radial_profile(n, r);
    }
    u
}

pub fn build_annulus_matrix(cfg: &AnnulusModelConfig, role: AnnulusRole) -> Result<AnnulusMatrix> {
    cfg.validate()?;
    let count = cfg.arcs(role);
    let pts = cfg.observation_points();
    let matrix = DenseMatrix::from_fn(pts.len(), count, |p, j| {
        let (r, theta) = pts[p];
        arc_response(cfg, AnnulusModelConfig::arc(count, j), r, theta)
    })?;
    let tail_bound = cfg.tail_bound();
    let warning = (tail_bound > TAIL_WARN).then(|| {
        format!(
            "angular truncation at {} modes leaves up to {tail_bound:.2e} per sample",
            cfg.n_fourier
        )
    });
    Ok(AnnulusMatrix {
        matrix,
        tail_bound,
        warning,
    })
}
