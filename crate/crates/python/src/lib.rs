//! Python bindings: forward operators, weights, reconstructions, noise, verification and
//! experiment runs. Vectors cross the boundary as lists of floats, matrices as lists of rows.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::DVector;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ficnull::experiment::{emit_plots, run_experiment, run_verify, ExperimentConfig, VerifyOptions};
use ficnull::linop::{compute_singular_system, DenseMatrix, SingularSystem, TruncatedOperator};
use ficnull::models::{
    add_noise as core_add_noise, build_annulus_matrix, build_heat_matrix, load_matrix, save_matrix,
    AnnulusModelConfig, AnnulusRole, HeatModelConfig, NoiseSpec,
};
use ficnull::solvers::{reconstruct, AlphaRule, Formulation, InverseProblem, SolveSpec};
use ficnull::weighting::{compute_weights, select_truncation, Basis, WeightingScheme, DEFAULT_TAU};
use ficnull::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Bracket { .. } | Error::Json(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Row lists to a matrix; rejects empty and ragged input.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> ficnull::Result<DenseMatrix> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Input(format!("row {i} has {} entries, expected {n}", r.len())));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    DenseMatrix::from_row_major(m, n, &flat)
}

pub fn matrix_to_rows(a: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| (0..a.cols()).map(|j| a.get(i, j)).collect()).collect()
}

/// Formulation tag (`STD_L1`, `W_L1_MODFID`, ...), case-insensitive.
pub fn parse_formulation(tag: &str) -> ficnull::Result<Formulation> {
    tag.parse()
}

/// Forward matrix with its singular system.
#[pyclass(module = "ficnull_py", frozen)]
pub struct Operator {
    a: DenseMatrix,
    svd: Arc<SingularSystem>,
}

impl Operator {
    fn wrap(a: DenseMatrix) -> PyResult<Self> {
        let svd = Arc::new(compute_singular_system(&a).map_err(py_err)?);
        Ok(Self { a, svd })
    }

    fn truncated(&self, k: usize) -> PyResult<TruncatedOperator> {
        TruncatedOperator::new(self.svd.clone(), k).map_err(py_err)
    }
}

#[pymethods]
impl Operator {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Self::wrap(matrix_from_rows(&rows).map_err(py_err)?)
    }

    /// Inverse heat conduction matrix.
    #[staticmethod]
    #[pyo3(signature = (n=20, t_final=0.5, modes=3000, obs_fraction=0.25, n_obs=None))]
    fn heat(n: usize, t_final: f64, modes: usize, obs_fraction: f64, n_obs: Option<usize>) -> PyResult<Self> {
        let cfg = HeatModelConfig {
            n,
            t_final,
            modes,
            obs_fraction,
            n_obs,
        };
        Self::wrap(build_heat_matrix(&cfg).map_err(py_err)?)
    }

    /// Annulus Cauchy matrix with default geometry; `inverse=False` gives the finer data grid.
    #[staticmethod]
    #[pyo3(signature = (inverse=true))]
    fn annulus(inverse: bool) -> PyResult<Self> {
        let role = if inverse { AnnulusRole::Inverse } else { AnnulusRole::Forward };
        let m = build_annulus_matrix(&AnnulusModelConfig::default(), role).map_err(py_err)?;
        Self::wrap(m.matrix)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Self::wrap(load_matrix(&path).map_err(py_err)?)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_matrix(&self.a, &path).map_err(py_err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.a.rows(), self.a.cols())
    }

    #[getter]
    fn rank(&self) -> usize {
        self.svd.rank()
    }

    fn sigma(&self) -> Vec<f64> {
        self.svd.sigma().iter().copied().collect()
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.a)
    }

    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.a.mul_vec(&DVector::from_vec(x)).map_err(py_err)?.iter().copied().collect())
    }

    /// Truncation level where the data coefficients sink below the noise.
    fn select_truncation(&self, y_clean: Vec<f64>, eta: Vec<f64>) -> PyResult<usize> {
        let rep = select_truncation(&self.svd, &DVector::from_vec(y_clean), &DVector::from_vec(eta)).map_err(py_err)?;
        Ok(rep.k)
    }

    /// Canonical-basis weights `max(‖P_k e_i‖, τ)`.
    #[pyo3(signature = (k, tau=DEFAULT_TAU))]
    fn weights(&self, k: usize, tau: f64) -> PyResult<Weighting> {
        let op = self.truncated(k)?;
        Ok(Weighting {
            inner: compute_weights(&op, &Basis::Canonical, tau).map_err(py_err)?,
        })
    }

    /// Reconstruction from `y`; without `alpha` the discrepancy principle with `delta` is used.
    #[pyo3(signature = (y, formulation, k, alpha=None, delta=None, tau=DEFAULT_TAU, bounds=None))]
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        y: Vec<f64>,
        formulation: &str,
        k: usize,
        alpha: Option<f64>,
        delta: Option<f64>,
        tau: f64,
        bounds: Option<(f64, f64)>,
    ) -> PyResult<Reconstruction> {
        let form = parse_formulation(formulation).map_err(py_err)?;
        let rule = match (alpha, delta, form) {
            (_, _, Formulation::BasisPursuit) => AlphaRule::Fixed(0.0),
            (Some(a), _, _) => AlphaRule::Fixed(a),
            (None, Some(_), _) => AlphaRule::Morozov,
            (None, None, _) => return Err(PyValueError::new_err("give alpha or the noise norm delta")),
        };
        let op = self.truncated(k)?;
        let w = compute_weights(&op, &Basis::Canonical, tau).map_err(py_err)?;
        let prob = InverseProblem::new(self.a.clone(), DVector::from_vec(y), delta.unwrap_or(0.0)).map_err(py_err)?;
        let mut spec = SolveSpec::new(form, rule);
        spec.bounds = bounds;
        let sol = reconstruct(&prob, &op, Some(&w), &spec).map_err(py_err)?;
        let r = sol.reconstruction;
        Ok(Reconstruction {
            formulation: r.formulation.tag().to_string(),
            alpha: r.alpha,
            x: r.x.iter().copied().collect(),
            residual: r.residual_norm,
            objective: r.objective,
            iterations: r.iterations,
            converged: r.converged,
            optimality_residual: r.optimality_residual,
            support: r.support,
        })
    }

    fn __repr__(&self) -> String {
        format!("Operator(shape=({}, {}), rank={})", self.a.rows(), self.a.cols(), self.svd.rank())
    }
}

/// Fictitious-null-space weights for one truncation level.
#[pyclass(module = "ficnull_py", frozen)]
pub struct Weighting {
    inner: WeightingScheme,
}

#[pymethods]
impl Weighting {
    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn proj_norms(&self) -> Vec<f64> {
        self.inner.proj_norms.clone()
    }

    fn admissible(&self, j: usize) -> bool {
        self.inner.admissible(j)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(module = "ficnull_py", frozen, get_all)]
pub struct Reconstruction {
    formulation: String,
    alpha: f64,
    x: Vec<f64>,
    residual: f64,
    objective: f64,
    iterations: usize,
    converged: bool,
    optimality_residual: f64,
    support: Vec<usize>,
}

#[pymethods]
impl Reconstruction {
    fn __repr__(&self) -> String {
        format!(
            "Reconstruction({}, alpha={:.3e}, support={:?}, converged={})",
            self.formulation, self.alpha, self.support, self.converged
        )
    }
}

/// `(y_delta, eta, delta)` with `η = level·(max b − min b)·Ξ` from the seeded generator.
#[pyfunction]
fn add_noise(b: Vec<f64>, level: f64, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let d = core_add_noise(&DVector::from_vec(b), &NoiseSpec::new(level, seed)).map_err(py_err)?;
    Ok((d.y_delta.iter().copied().collect(), d.eta.iter().copied().collect(), d.delta))
}

/// Verification sweep; returns the JSON report as a string.
#[pyfunction]
#[pyo3(signature = (seeds=None))]
fn verify(py: Python<'_>, seeds: Option<Vec<u64>>) -> PyResult<String> {
    let mut opts = VerifyOptions::default();
    if let Some(s) = seeds {
        opts.seeds = s;
    }
    let report = py.detach(|| run_verify(&opts));
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Runs an experiment config and returns the bundle directory.
#[pyfunction]
fn run(py: Python<'_>, config: PathBuf) -> PyResult<PathBuf> {
    let cfg = ExperimentConfig::from_file(&config).map_err(py_err)?;
    let summary = py.detach(|| run_experiment(&cfg)).map_err(py_err)?;
    Ok(summary.output)
}

/// Renders the SVG charts of a bundle; returns the written paths.
#[pyfunction]
fn plot(bundle: PathBuf) -> PyResult<Vec<PathBuf>> {
    emit_plots(&bundle).map_err(py_err)
}

#[pymodule]
fn ficnull_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Operator>()?;
    m.add_class::<Weighting>()?;
    m.add_class::<Reconstruction>()?;
    m.add_function(wrap_pyfunction!(add_noise, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(plot, m)?)?;
    m.add("DEFAULT_TAU", DEFAULT_TAU)?;
    Ok(())
}
