use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::DenseMatrix;

/// Backward heat conduction on `(0, π)` with Dirichlet ends, observed on `(0, π·obs_fraction)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatModelConfig {
    /// Number of characteristic basis functions on `[π/n, π − π/n]`.
    pub n: usize,
    /// Final time.
    pub t_final: f64,
    /// Sine modes kept in the series.
    pub modes: usize,
    pub obs_fraction: f64,
    /// Observation points; defaults to `n`.
    pub n_obs: Option<usize>,
}

impl Default for HeatModelConfig {
    fn default() -> Self {
        Self {
            n: 20,
            t_final: 0.5,
            modes: 3000,
            obs_fraction: 0.25,
            n_obs: None,
        }
    }
}

impl HeatModelConfig {
    pub fn n_obs(&self) -> usize {
        self.n_obs.unwrap_or(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("heat model needs n >= 2, got {}", self.n)));
        }
        if self.modes < self.n {
            return Err(Error::Config(format!(
                "heat model needs modes >= n ({} < {})",
                self.modes, self.n
            )));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::Config("final time must be positive".into()));
        }
        if !(self.obs_fraction > 0.0 && self.obs_fraction <= 1.0) {
            return Err(Error::Config("obs_fraction must lie in (0, 1]".into()));
        }
        if self.n_obs() == 0 {
            return Err(Error::Config("at least one observation point is required".into()));
        }
        Ok(())
    }

    /// Interval `I_q = (a, b)` of basis function `q` (0-based).
    pub fn interval(&self, q: usize) -> (f64, f64) {
        let h = (PI - 2.0 * PI / self.n as f64) / self.n as f64;
        let a = PI / self.n as f64 + q as f64 * h;
        (a, a + h)
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n)
            .map(|q| {
                let (a, b) = self.interval(q);
                0.5 * (a + b)
            })
            .collect()
    }

    pub fn cell_width(&self) -> f64 {
        let (a, b) = self.interval(0);
        b - a
    }

    /// Midpoint-rule observation points `z_p = (p − ½)·(π·obs_fraction)/n_obs`.
    pub fn observation_points(&self) -> Vec<f64> {
        let m = self.n_obs();
        let len = PI * self.obs_fraction;
        (0..m).map(|p| (p as f64 + 0.5) * len / m as f64).collect()
    }
}

/// Damping `e^{−m²t}` of sine mode `m` after time `t`.
pub fn mode_decay(m: usize, t: f64) -> f64 {
    (-((m * m) as f64) * t).exp()
}

/// Sine coefficient `(2/π)(cos ma − cos mb)/m` of `χ_(a,b)` on `(0, π)`.
pub fn indicator_sine_coefficient(m: usize, a: f64, b: f64) -> f64 {
    let mf = m as f64;
    2.0 / PI * ((mf * a).cos() - (mf * b).cos()) / mf
}

/// Matrix mapping the coefficients of `χ_{I_q}` to `u(z_p, T)`.
pub fn build_heat_matrix(cfg: &HeatModelConfig) -> Result<DenseMatrix> {
    cfg.validate()?;
    let z = cfg.observation_points();
    // modes whose damping underflows contribute exactly zero
    let active: Vec<(usize, f64)> = (1..=cfg.modes)
        .map(|m| (m, mode_decay(m, cfg.t_final)))
        .take_while(|&(_, d)| d > 0.0)
        .collect();
    let intervals: Vec<(f64, f64)> = (0..cfg.n).map(|q| cfg.interval(q)).collect();
    DenseMatrix::from_fn(z.len(), cfg.n, |p, q| {
        let (a, b) = intervals[q];
        active
            .iter()
            .map(|&(m, d)| indicator_sine_coefficient(m, a, b) * d * (m as f64 * z[p]).sin())
            .sum()
    })
}

/// Heat data `u(z_p, T)` generated by an initial condition given as a function, sampled at
/// the midpoints of `fine_cells` subintervals of the basis support.
///
/// Used to produce data that are not generated by the inversion matrix itself.
pub fn heat_data_from_function(
    cfg: &HeatModelConfig,
    fine_cells: usize,
    f: impl Fn(f64) -> f64,
) -> Result<nalgebra::DVector<f64>> {
    let fine = HeatModelConfig {
        n: fine_cells,
        n_obs: Some(cfg.n_obs()),
        modes: cfg.modes.max(fine_cells),
        ..cfg.clone()
    };
    // same support [π/n, π − π/n] as the coarse basis
    let (lo, _) = cfg.interval(0);
    let (_, hi) = cfg.interval(cfg.n - 1);
    let h = (hi - lo) / fine_cells as f64;
    let z = fine.observation_points();
    let active: Vec<(usize, f64)> = (1..=fine.modes)
        .map(|m| (m, mode_decay(m, fine.t_final)))
        .take_while(|&(_, d)| d > 0.0)
        .collect();
    let vals: Vec<(f64, f64, f64)> = (0..fine_cells)
        .map(|c| {
            let a = lo + c as f64 * h;
            (a, a + h, f(a + 0.5 * h))
        })
        .collect();
    Ok(nalgebra::DVector::from_fn(z.len(), |p, _| {
        active
            .iter()
            .map(|&(m, d)| {
                let coeff: f64 = vals
                    .iter()
                    .map(|&(a, b, v)| v * indicator_sine_coefficient(m, a, b))
                    .sum();
                coeff * d * (m as f64 * z[p]).sin()
            })
            .sum()
    }))
}
