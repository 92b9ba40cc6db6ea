use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, KRule, ModelSpec};
use super::{coord_distance, support_hausdorff, true_support};
use crate::error::{Error, Result};
use crate::linop::{compute_singular_system, DenseMatrix, SingularSystem, TruncatedOperator};
use crate::models::{
    add_noise, build_annulus_matrix, build_heat_matrix, heat_data_from_function, load_matrix,
    AnnulusModelConfig, AnnulusRole, NoiseSpec, NoisyData,
};
use crate::solvers::{reconstruct, InverseProblem, SolveSpec};
use crate::theory::predicted_gamma;
use crate::weighting::{compute_weights, select_truncation, Basis, TruncationReport, WeightingScheme};

/// Number of right singular vectors written for plotting.
const VECTORS_WRITTEN: usize = 9;

/// Inversion matrix, data and geometry of an experiment.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    pub name: &'static str,
    pub a: DenseMatrix,
    pub svd: Arc<SingularSystem>,
    pub y_clean: DVector<f64>,
    pub x_true: Option<DVector<f64>>,
    /// Domain coordinate of every unknown (cell centre, arc centre or index).
    pub coords: Vec<f64>,
    pub cell_width: f64,
    /// Circumference when the coordinates are angles.
    pub period: Option<f64>,
    /// Unknowns next to the observations and their mirror image, for the weight profile.
    pub observed: Vec<usize>,
    pub far: Vec<usize>,
    pub warnings: Vec<String>,
}

fn indices_where(coords: &[f64], f: impl Fn(f64) -> bool) -> Vec<usize> {
    (0..coords.len()).filter(|&i| f(coords[i])).collect()
}

fn load_vector(path: &Path) -> Result<DVector<f64>> {
    let m = load_matrix(path)?;
    let (r, c) = (m.rows(), m.cols());
    if r != 1 && c != 1 {
        return Err(Error::Input(format!(
            "{}: expected a vector (one row or column), got {r}x{c}",
            path.display()
        )));
    }
    Ok(DVector::from_vec(m.to_row_major()))
}

pub fn prepare_model(spec: &ModelSpec) -> Result<PreparedModel> {
    match spec {
        ModelSpec::Heat {
            model,
            source,
            fine_cells,
        } => {
            let a = build_heat_matrix(model)?;
            let y_clean = heat_data_from_function(model, *fine_cells, |x| source.eval(x))?;
            let coords = model.cell_centers();
            let obs_end = PI * model.obs_fraction;
            Ok(PreparedModel {
                name: "heat",
                svd: Arc::new(compute_singular_system(&a)?),
                a,
                y_clean,
                x_true: Some(source.coefficients(&coords)),
                observed: indices_where(&coords, |c| c < obs_end),
                far: indices_where(&coords, |c| c > PI - obs_end),
                cell_width: model.cell_width(),
                coords,
                period: None,
                warnings: Vec::new(),
            })
        }
        ModelSpec::Annulus { model, source } => {
            let fwd = build_annulus_matrix(model, AnnulusRole::Forward)?;
            let inv = build_annulus_matrix(model, AnnulusRole::Inverse)?;
            let fine = source.coefficients(&AnnulusModelConfig::arc_centers(model.n_basis_fwd));
            let y_clean = fwd.matrix.mul_vec(&fine)?;
            let coords = AnnulusModelConfig::arc_centers(model.n_basis_inv);
            let (t1, t2) = model.obs_theta;
            let in_sector = |c: f64, lo: f64, hi: f64| {
                let d = (c - lo).rem_euclid(TAU);
                d <= (hi - lo)
            };
            Ok(PreparedModel {
                name: "annulus",
                svd: Arc::new(compute_singular_system(&inv.matrix)?),
                a: inv.matrix,
                y_clean,
                x_true: Some(source.coefficients(&coords)),
                observed: indices_where(&coords, |c| in_sector(c, t1, t2)),
                far: indices_where(&coords, |c| in_sector(c, t1 + PI, t2 + PI)),
                cell_width: TAU / model.n_basis_inv as f64,
                coords,
                period: Some(TAU),
                warnings: fwd.warning.into_iter().chain(inv.warning).collect(),
            })
        }
        ModelSpec::External(ext) => {
            let a = load_matrix(&ext.matrix)?;
            let y_clean = load_vector(&ext.data)?;
            if y_clean.len() != a.rows() {
                return Err(Error::Dimension {
                    expected: a.rows(),
                    got: y_clean.len(),
                });
            }
            let x_true = match &ext.truth {
                Some(p) => {
                    let x = load_vector(p)?;
                    if x.len() != a.cols() {
                        return Err(Error::Dimension {
                            expected: a.cols(),
                            got: x.len(),
                        });
                    }
                    Some(x)
                }
                None => None,
            };
            let n = a.cols();
            let range = |r: Option<(usize, usize)>| -> Result<Vec<usize>> {
                match r {
                    None => Ok(Vec::new()),
                    Some((lo, hi)) if hi <= n => Ok((lo..hi).collect()),
                    Some((_, hi)) => Err(Error::Config(format!("index range end {hi} exceeds {n} unknowns"))),
                }
            };
            Ok(PreparedModel {
                name: "external",
                svd: Arc::new(compute_singular_system(&a)?),
                a,
                y_clean,
                x_true,
                coords: (0..n).map(|i| i as f64).collect(),
                cell_width: 1.0,
                period: None,
                observed: range(ext.observed)?,
                far: range(ext.far)?,
                warnings: Vec::new(),
            })
        }
    }
}

/// Outcome of one `(level, seed, formulation)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub level: f64,
    pub seed: u64,
    pub formulation: String,
    pub status: String,
    pub error: Option<String>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub morozov_within_tolerance: Option<bool>,
    pub delta: Option<f64>,
    pub residual: Option<f64>,
    pub objective: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub optimality_residual: Option<f64>,
    pub support: Vec<usize>,
    pub l2_error: Option<f64>,
    /// Hausdorff distance between reconstructed and true support, in domain units.
    pub support_distance: Option<f64>,
    pub support_distance_cells: Option<f64>,
    pub argmax: Option<usize>,
    pub argmax_distance_cells: Option<f64>,
    pub gamma_predicted: Option<f64>,
    pub gamma_observed: Option<f64>,
}

impl CellRecord {
    fn empty(level: f64, seed: u64, formulation: &str) -> Self {
        Self {
            level,
            seed,
            formulation: formulation.to_string(),
            status: "ok".into(),
            error: None,
            k: None,
            alpha: None,
            morozov_within_tolerance: None,
            delta: None,
            residual: None,
            objective: None,
            iterations: None,
            converged: None,
            optimality_residual: None,
            support: Vec::new(),
            l2_error: None,
            support_distance: None,
            support_distance_cells: None,
            argmax: None,
            argmax_distance_cells: None,
            gamma_predicted: None,
            gamma_observed: None,
        }
    }

    fn failed(mut self, err: &Error) -> Self {
        self.status = "error".into();
        self.error = Some(err.to_string());
        self
    }
}

/// Weight profile of one `(level, seed)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub level: f64,
    pub seed: u64,
    pub k: usize,
    pub observed_mean: Option<f64>,
    pub far_mean: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub records: Vec<CellRecord>,
    pub profiles: Vec<WeightProfile>,
    pub pair_errors: Vec<(f64, u64, String)>,
}

impl RunSummary {
    pub fn record(&self, level: f64, seed: u64, formulation: &str) -> Option<&CellRecord> {
        self.records
            .iter()
            .find(|r| r.level == level && r.seed == seed && r.formulation == formulation)
    }
}

struct Pair {
    level: f64,
    seed: u64,
    dir: PathBuf,
    noise: NoisyData,
    prob: InverseProblem,
    op: TruncatedOperator,
    weights: WeightingScheme,
    truncation: Option<TruncationReport>,
}

fn pair_dir(out: &Path, level: f64, seed: u64) -> PathBuf {
    out.join("cells").join(format!("level-{level}_seed-{seed}"))
}

fn prepare_pair(model: &PreparedModel, cfg: &ExperimentConfig, level: f64, seed: u64) -> Result<Pair> {
    let noise = add_noise(&model.y_clean, &NoiseSpec::new(level, seed))?;
    let prob = InverseProblem::synthetic(model.a.clone(), model.y_clean.clone(), noise.eta.clone())?;
    let (k, truncation) = match cfg.k_rule {
        KRule::Auto => {
            let rep = select_truncation(&model.svd, &model.y_clean, &noise.eta)?;
            (rep.k, Some(rep))
        }
        KRule::Fixed(k) => (k, None),
    };
    let op = TruncatedOperator::new(Arc::clone(&model.svd), k)?;
    let weights = compute_weights(&op, &Basis::Canonical, cfg.tau)?;
    Ok(Pair {
        level,
        seed,
        dir: pair_dir(&cfg.output, level, seed),
        noise,
        prob,
        op,
        weights,
        truncation,
    })
}

fn write_pair(model: &PreparedModel, pair: &Pair) -> Result<()> {
    fs::create_dir_all(&pair.dir)?;
    fs::write(pair.dir.join("weights.csv"), pair.weights.to_csv())?;
    let mut data = String::from("index,y_clean,y_delta\n");
    for i in 0..model.y_clean.len() {
        let _ = writeln!(data, "{i},{:.17e},{:.17e}", model.y_clean[i], pair.noise.y_delta[i]);
    }
    fs::write(pair.dir.join("data.csv"), data)?;
    let info = serde_json::json!({
        "level": pair.level,
        "seed": pair.seed,
        "k": pair.op.k(),
        "delta": pair.noise.delta,
        "beta": pair.noise.beta,
        "truncation": pair.truncation,
    });
    fs::write(pair.dir.join("truncation.json"), serde_json::to_string_pretty(&info)? + "\n")?;
    Ok(())
}

fn solve_cell(model: &PreparedModel, cfg: &ExperimentConfig, pair: &Pair, idx: usize) -> CellRecord {
    let form = cfg.formulations[idx];
    let mut rec = CellRecord::empty(pair.level, pair.seed, form.tag());
    rec.k = Some(pair.op.k());
    rec.delta = Some(pair.prob.delta);
    let mut spec = SolveSpec::new(form, cfg.alpha_rule);
    spec.tol_primal = cfg.tol;
    spec.tol_dual = cfg.tol;
    spec.max_iter = cfg.max_iter;
    if form.is_l1() {
        spec.bounds = cfg.bounds;
    }
    let sol = match reconstruct(&pair.prob, &pair.op, Some(&pair.weights), &spec) {
        Ok(s) => s,
        Err(e) => return rec.failed(&e),
    };
    let r = sol.reconstruction;
    rec.alpha = Some(r.alpha);
    rec.morozov_within_tolerance = sol.morozov.map(|m| m.within_tolerance);
    rec.residual = Some(r.residual_norm);
    rec.objective = Some(r.objective);
    rec.iterations = Some(r.iterations);
    rec.converged = Some(r.converged);
    rec.optimality_residual = Some(r.optimality_residual);
    rec.support = r.support.clone();
    if r.x.amax() > 0.0 {
        rec.argmax = Some(r.x.iamax());
    }
    if let Some(xt) = &model.x_true {
        rec.l2_error = Some((&r.x - xt).norm());
        let ts = true_support(xt);
        rec.support_distance = support_hausdorff(&r.support, &ts, &model.coords, model.period);
        rec.support_distance_cells = rec.support_distance.map(|d| d / model.cell_width);
        if let (Some(am), false) = (rec.argmax, ts.is_empty()) {
            let true_arg = xt.iamax();
            let d = coord_distance(model.coords[am], model.coords[true_arg], model.period);
            rec.argmax_distance_cells = Some(d / model.cell_width);
        }
        // one-sparse truth: compare the magnitude with the predicted value
        let nz: Vec<usize> = (0..xt.len()).filter(|&i| xt[i] != 0.0).collect();
        if nz.len() == 1 && form == crate::solvers::Formulation::WeightedModFid {
            let j = nz[0];
            if let Ok(g) = predicted_gamma(&pair.weights, j, r.alpha) {
                rec.gamma_predicted = Some(g * xt[j]);
                rec.gamma_observed = Some(r.x[j]);
            }
        }
    }
    let write = || -> Result<()> {
        fs::write(pair.dir.join(format!("{}.csv", form.tag())), r.to_csv())?;
        let mut side = r.sidecar(Some(pair.op.k()), Some(cfg.tau));
        side["metrics"] = serde_json::to_value(&rec)?;
        fs::write(
            pair.dir.join(format!("{}.json", form.tag())),
            serde_json::to_string_pretty(&side)? + "\n",
        )?;
        Ok(())
    };
    match write() {
        Ok(()) => rec,
        Err(e) => rec.failed(&e),
    }
}

fn mean_of(w: &WeightingScheme, idx: &[usize]) -> Option<f64> {
    (!idx.is_empty()).then(|| idx.iter().map(|&i| w.weights[i]).sum::<f64>() / idx.len() as f64)
}

fn write_model(model: &PreparedModel, out: &Path) -> Result<()> {
    let dir = out.join("model");
    fs::create_dir_all(&dir)?;
    let mut s = String::from("index,sigma\n");
    for (i, v) in model.svd.sigma().iter().enumerate() {
        let _ = writeln!(s, "{},{v:.17e}", i + 1);
    }
    fs::write(dir.join("singular_values.csv"), s)?;

    let count = VECTORS_WRITTEN.min(model.svd.len());
    let mut s = String::from("index");
    for c in 1..=count {
        let _ = write!(s, ",v{c}");
    }
    s.push('\n');
    for i in 0..model.svd.cols() {
        let _ = write!(s, "{i}");
        for c in 0..count {
            let _ = write!(s, ",{:.17e}", model.svd.right()[(i, c)]);
        }
        s.push('\n');
    }
    fs::write(dir.join("right_vectors.csv"), s)?;

    let mut s = String::from("index,coord,true_value\n");
    for i in 0..model.coords.len() {
        let t = model.x_true.as_ref().map(|x| format!("{:.17e}", x[i])).unwrap_or_default();
        let _ = writeln!(s, "{i},{:.17e},{t}", model.coords[i]);
    }
    fs::write(dir.join("coords.csv"), s)?;

    let info = serde_json::json!({
        "model": model.name,
        "rows": model.a.rows(),
        "cols": model.a.cols(),
        "rank": model.svd.rank(),
        "cell_width": model.cell_width,
        "period": model.period,
        "observed": model.observed,
        "far": model.far,
        "warnings": model.warnings,
    });
    fs::write(dir.join("info.json"), serde_json::to_string_pretty(&info)? + "\n")?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

fn write_index(out: &Path, summary: &RunSummary) -> Result<()> {
    let mut s = String::from(
        "level,seed,formulation,status,k,alpha,residual,delta,l2_error,support_distance_cells,argmax_distance_cells,support_size,converged,error\n",
    );
    for r in &summary.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.seed,
            r.formulation,
            r.status,
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            opt(r.alpha),
            opt(r.residual),
            opt(r.delta),
            opt(r.l2_error),
            opt(r.support_distance_cells),
            opt(r.argmax_distance_cells),
            r.support.len(),
            r.converged.map(|c| c.to_string()).unwrap_or_default(),
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        );
    }
    fs::write(out.join("index.csv"), s)?;

    let mut s = String::from("level,seed,k,observed_mean,far_mean\n");
    for p in &summary.profiles {
        let _ = writeln!(s, "{},{},{},{},{}", p.level, p.seed, p.k, opt(p.observed_mean), opt(p.far_mean));
    }
    fs::write(out.join("weight_profile.csv"), s)?;

    let json = serde_json::json!({
        "records": summary.records,
        "weight_profiles": summary.profiles,
        "pair_errors": summary.pair_errors,
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&json)? + "\n")?;
    Ok(())
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FICNULL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("FICNULL_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::Config("FICNULL_THREADS must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))
}

/// Runs every `(level, seed, formulation)` cell and writes the artifact bundle.
///
/// Failures of a single cell are recorded in its row of `index.csv`; the run continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let model = prepare_model(&cfg.model)?;
    fs::create_dir_all(&cfg.output)?;
    write_model(&model, &cfg.output)?;

    let grid: Vec<(f64, u64)> = cfg
        .levels
        .iter()
        .flat_map(|&l| cfg.seeds.iter().map(move |&s| (l, s)))
        .collect();
    let pool = thread_pool()?;
    let (pairs, records) = pool.install(|| {
        let pairs: Vec<Result<Pair>> = grid
            .par_iter()
            .map(|&(l, s)| {
                let p = prepare_pair(&model, cfg, l, s)?;
                write_pair(&model, &p)?;
                Ok(p)
            })
            .collect();
        let jobs: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_ok())
            .flat_map(|(i, _)| (0..cfg.formulations.len()).map(move |f| (i, f)))
            .collect();
        let records: Vec<((usize, usize), CellRecord)> = jobs
            .par_iter()
            .map(|&(i, f)| {
                let p = pairs[i].as_ref().expect("filtered");
                ((i, f), solve_cell(&model, cfg, p, f))
            })
            .collect();
        (pairs, records)
    });

    let mut summary = RunSummary {
        output: cfg.output.clone(),
        records: Vec::new(),
        profiles: Vec::new(),
        pair_errors: Vec::new(),
    };
    let mut records = records.into_iter().peekable();
    for (i, pair) in pairs.iter().enumerate() {
        let (level, seed) = grid[i];
        match pair {
            Ok(p) => summary.profiles.push(WeightProfile {
                level,
                seed,
                k: p.op.k(),
                observed_mean: mean_of(&p.weights, &model.observed),
                far_mean: mean_of(&p.weights, &model.far),
            }),
            Err(e) => {
                summary.pair_errors.push((level, seed, e.to_string()));
                for f in &cfg.formulations {
                    summary.records.push(CellRecord::empty(level, seed, f.tag()).failed(e));
                }
            }
        }
        while let Some(((pi, _), _)) = records.peek() {
            if *pi != i {
                break;
            }
            let (_, rec) = records.next().expect("peeked");
            summary.records.push(rec);
        }
    }
    write_index(&cfg.output, &summary)?;
    Ok(summary)
}
