//! Experiment pipelines: configuration, the heat and annulus reproductions, external
//! matrices, the verification suite and SVG rendering of the written bundles.

mod config;
mod plot;
mod run;
pub mod verify;

use nalgebra::DVector;

pub use config::{ExperimentConfig, ExternalSpec, KRule, ModelSpec, ANNULUS_SOURCE_CENTER, HEAT_SOURCE_CENTER};
pub use plot::{emit_plots, svg_bars, svg_grid, svg_lines, svg_polar, Series};
pub use run::{prepare_model, run_experiment, CellRecord, PreparedModel, RunSummary};
pub use verify::{run_verify, CheckResult, VerifyOptions, VerifyReport};

/// Entries of the true source above this fraction of its peak form the true support.
///
/// The bump has no compact support, so a small relative cut is needed; reconstructions
/// are thresholded at the solver's own support tolerance.
pub const TRUE_SUPPORT_REL: f64 = 1e-2;

/// Analytic true source on the basis domain.
#[derive(Debug, Clone, PartialEq)]
pub enum TrueSource {
    /// `amplitude·exp(−d(t, center)²/width)`, with `d` periodic when `period` is set.
    Bump {
        center: f64,
        amplitude: f64,
        width: f64,
        period: Option<f64>,
    },
}

impl TrueSource {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TrueSource::Bump {
                center,
                amplitude,
                width,
                period,
            } => {
                let d = coord_distance(t, center, period);
                amplitude * (-(d * d) / width).exp()
            }
        }
    }

    /// Midpoint samples at the given cell centres.
    pub fn coefficients(&self, centers: &[f64]) -> DVector<f64> {
        DVector::from_iterator(centers.len(), centers.iter().map(|&t| self.eval(t)))
    }
}

/// `|a − b|`, or the distance on the circle of circumference `period`.
pub fn coord_distance(a: f64, b: f64, period: Option<f64>) -> f64 {
    match period {
        None => (a - b).abs(),
        Some(p) => {
            let d = (a - b).rem_euclid(p);
            d.min(p - d)
        }
    }
}

/// Hausdorff distance between two index sets mapped to coordinates; `None` if either is empty.
pub fn support_hausdorff(a: &[usize], b: &[usize], coords: &[f64], period: Option<f64>) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let directed = |p: &[usize], q: &[usize]| {
        p.iter()
            .map(|&i| {
                q.iter()
                    .map(|&j| coord_distance(coords[i], coords[j], period))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Some(directed(a, b).max(directed(b, a)))
}

/// Indices with `|x_i| > TRUE_SUPPORT_REL·‖x‖_∞`.
pub fn true_support(x: &DVector<f64>) -> Vec<usize> {
    let cut = TRUE_SUPPORT_REL * x.amax();
    (0..x.len()).filter(|&i| x[i].abs() > cut).collect()
}
