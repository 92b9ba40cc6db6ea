//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! experiment   = heat            # heat | annulus | external
//! levels       = 0.001, 0.01
//! seeds        = 0-9             # ranges and comma lists
//! formulations = STD_L1, W_L1_MODFID, W_L1_STDFID
//! tau          = 1e-3
//! k            = auto            # auto | <integer>
//! alpha        = morozov         # morozov | <positive real>
//! box          = none            # none | lo, hi
//! output       = out/heat
//! ```
//!
//! Model parameters use prefixed keys (`heat.n`, `annulus.n_fourier`, `external.matrix`,
//! `source.center`, ...). Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::{AnnulusModelConfig, HeatModelConfig};
use crate::solvers::{AlphaRule, Formulation, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::weighting::DEFAULT_TAU;

use super::TrueSource;

/// Default bump centre of the heat source, inside the unobserved part of `(0, π)`.
pub const HEAT_SOURCE_CENTER: f64 = 2.3;
/// Default angular centre of the annulus source, opposite the observation sector.
pub const ANNULUS_SOURCE_CENTER: f64 = 1.5 * PI + 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KRule {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSpec {
    /// Inversion matrix.
    pub matrix: PathBuf,
    /// Clean data, one value per line or an `m 1` matrix file.
    pub data: PathBuf,
    /// Optional true coefficients.
    pub truth: Option<PathBuf>,
    /// Index ranges used for the weight profile.
    pub observed: Option<(usize, usize)>,
    pub far: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Heat {
        model: HeatModelConfig,
        source: TrueSource,
        fine_cells: usize,
    },
    Annulus {
        model: AnnulusModelConfig,
        source: TrueSource,
    },
    External(ExternalSpec),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Heat { .. } => "heat",
            ModelSpec::Annulus { .. } => "annulus",
            ModelSpec::External(_) => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub formulations: Vec<Formulation>,
    pub tau: f64,
    pub k_rule: KRule,
    pub alpha_rule: AlphaRule,
    pub bounds: Option<(f64, f64)>,
    pub output: PathBuf,
    pub tol: f64,
    pub max_iter: usize,
}

const KEYS: &[&str] = &[
    "experiment",
    "levels",
    "seeds",
    "formulations",
    "tau",
    "k",
    "alpha",
    "box",
    "output",
    "solver.tol",
    "solver.max_iter",
    "source.center",
    "source.amplitude",
    "source.width",
    "heat.n",
    "heat.t_final",
    "heat.modes",
    "heat.obs_fraction",
    "heat.n_obs",
    "heat.fine_cells",
    "annulus.r_inner",
    "annulus.r_outer",
    "annulus.n_basis_fwd",
    "annulus.n_basis_inv",
    "annulus.n_fourier",
    "annulus.obs_r",
    "annulus.obs_theta",
    "annulus.obs_grid",
    "external.matrix",
    "external.data",
    "external.truth",
    "external.observed",
    "external.far",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    path: PathBuf,
}

impl Entries {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| self.err(line, format!("cannot parse {key} = {v:?}"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| self.err(line, format!("cannot parse {s:?} in {key}")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn pair<T: FromStr + Copy>(&self, key: &str) -> Result<Option<(T, T)>> {
        match self.list::<T>(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some(_) => {
                let line = self.raw(key).map(|r| r.0).unwrap_or(0);
                Err(self.err(line, format!("{key} needs exactly two values")))
            }
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.raw(key).map(|r| r.0).unwrap_or(0)
    }
}

fn parse_seeds(text: &str) -> std::result::Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range {part:?}"))?;
                let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range {part:?}"))?;
                if a > b {
                    return Err(format!("empty seed range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| format!("bad seed {part:?}"))?),
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Parses the text of a configuration file; `path` is used in error messages and
    /// relative paths inside the file are resolved against its directory.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(err(format!("unknown key {key:?}")));
            }
            if let Some((first, _)) = map.get(&key) {
                return Err(err(format!("{key} already set on line {first}")));
            }
            map.insert(key, (line, value.trim().to_string()));
        }
        let e = Entries {
            map,
            path: path.to_path_buf(),
        };
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        let experiment = e
            .raw("experiment")
            .map(|(_, v)| v.to_string())
            .ok_or_else(|| e.err(0, "missing required key `experiment`"))?;
        let check_prefix = |prefix: &str| -> Result<()> {
            for (key, (line, _)) in &e.map {
                for other in ["heat.", "annulus.", "external."] {
                    if other != prefix && key.starts_with(other) {
                        return Err(e.err(*line, format!("{key} does not apply to {experiment}")));
                    }
                }
            }
            Ok(())
        };

        let source = |center: f64, amplitude: f64, width: f64, period: Option<f64>| -> Result<TrueSource> {
            let width = e.parse("source.width")?.unwrap_or(width);
            if !(width > 0.0) {
                return Err(e.err(e.line_of("source.width"), "source.width must be positive"));
            }
            Ok(TrueSource::Bump {
                center: e.parse("source.center")?.unwrap_or(center),
                amplitude: e.parse("source.amplitude")?.unwrap_or(amplitude),
                width,
                period,
            })
        };

        let model = match experiment.as_str() {
            "heat" => {
                check_prefix("heat.")?;
                let d = HeatModelConfig::default();
                let model = HeatModelConfig {
                    n: e.parse("heat.n")?.unwrap_or(d.n),
                    t_final: e.parse("heat.t_final")?.unwrap_or(d.t_final),
                    modes: e.parse("heat.modes")?.unwrap_or(d.modes),
                    obs_fraction: e.parse("heat.obs_fraction")?.unwrap_or(d.obs_fraction),
                    n_obs: e.parse("heat.n_obs")?.or(d.n_obs),
                };
                model.validate()?;
                let fine_cells = e.parse("heat.fine_cells")?.unwrap_or(400);
                if fine_cells == 0 {
                    return Err(e.err(e.line_of("heat.fine_cells"), "heat.fine_cells must be positive"));
                }
                ModelSpec::Heat {
                    model,
                    source: source(HEAT_SOURCE_CENTER, 0.8, 0.02, None)?,
                    fine_cells,
                }
            }
            "annulus" => {
                check_prefix("annulus.")?;
                let d = AnnulusModelConfig::default();
                let model = AnnulusModelConfig {
                    r_inner: e.parse("annulus.r_inner")?.unwrap_or(d.r_inner),
                    r_outer: e.parse("annulus.r_outer")?.unwrap_or(d.r_outer),
                    n_basis_fwd: e.parse("annulus.n_basis_fwd")?.unwrap_or(d.n_basis_fwd),
                    n_basis_inv: e.parse("annulus.n_basis_inv")?.unwrap_or(d.n_basis_inv),
                    n_fourier: e.parse("annulus.n_fourier")?.unwrap_or(d.n_fourier),
                    obs_r: e.pair("annulus.obs_r")?.unwrap_or(d.obs_r),
                    obs_theta: e.pair("annulus.obs_theta")?.unwrap_or(d.obs_theta),
                    obs_grid: e.pair("annulus.obs_grid")?.unwrap_or(d.obs_grid),
                };
                model.validate()?;
                ModelSpec::Annulus {
                    model,
                    source: source(ANNULUS_SOURCE_CENTER, 1.0, 0.02, Some(2.0 * PI))?,
                }
            }
            "external" => {
                check_prefix("external.")?;
                for key in ["source.center", "source.amplitude", "source.width"] {
                    if e.raw(key).is_some() {
                        return Err(e.err(e.line_of(key), format!("{key} does not apply to external")));
                    }
                }
                let need = |key: &str| -> Result<PathBuf> {
                    e.raw(key)
                        .map(|(_, v)| resolve(v))
                        .ok_or_else(|| e.err(0, format!("external experiments need `{key}`")))
                };
                let range = |key: &str| -> Result<Option<(usize, usize)>> {
                    let r = e.pair::<usize>(key)?;
                    if let Some((a, b)) = r {
                        if a >= b {
                            return Err(e.err(e.line_of(key), format!("{key} must be a nonempty range a, b with a < b")));
                        }
                    }
                    Ok(r)
                };
                ModelSpec::External(ExternalSpec {
                    matrix: need("external.matrix")?,
                    data: need("external.data")?,
                    truth: e.raw("external.truth").map(|(_, v)| resolve(v)),
                    observed: range("external.observed")?,
                    far: range("external.far")?,
                })
            }
            other => {
                return Err(e.err(
                    e.line_of("experiment"),
                    format!("experiment must be heat, annulus or external, got {other:?}"),
                ))
            }
        };

        let levels = e.list::<f64>("levels")?.unwrap_or_else(|| match model {
            ModelSpec::Heat { .. } => vec![0.001, 0.01],
            _ => vec![0.01],
        });
        if levels.is_empty() || levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(e.err(e.line_of("levels"), "noise levels must lie in (0, 1)"));
        }
        let seeds = match e.raw("seeds") {
            None => vec![0],
            Some((line, v)) => parse_seeds(v).map_err(|m| e.err(line, m))?,
        };
        let formulations = e.list::<Formulation>("formulations")?.unwrap_or_else(|| {
            vec![
                Formulation::StdL1,
                Formulation::WeightedModFid,
                Formulation::WeightedStdFid,
            ]
        });
        if formulations.is_empty() {
            return Err(e.err(e.line_of("formulations"), "at least one formulation is required"));
        }
        let tau = e.parse("tau")?.unwrap_or(DEFAULT_TAU);
        if !(tau > 0.0) {
            return Err(e.err(e.line_of("tau"), "tau must be positive"));
        }
        let k_rule = match e.raw("k") {
            None | Some((_, "auto")) => KRule::Auto,
            Some((line, v)) => match v.parse::<usize>() {
                Ok(k) if k > 0 => KRule::Fixed(k),
                _ => return Err(e.err(line, format!("k must be `auto` or a positive integer, got {v:?}"))),
            },
        };
        let alpha_rule = match e.raw("alpha") {
            None | Some((_, "morozov")) => AlphaRule::Morozov,
            Some((line, v)) => match v.parse::<f64>() {
                Ok(a) if a > 0.0 => AlphaRule::Fixed(a),
                _ => return Err(e.err(line, format!("alpha must be `morozov` or positive, got {v:?}"))),
            },
        };
        let bounds = match e.raw("box") {
            None | Some((_, "none")) => None,
            Some((line, _)) => {
                let (lo, hi) = e.pair::<f64>("box")?.unwrap_or((0.0, 0.0));
                if !(lo <= 0.0 && 0.0 <= hi && lo < hi) {
                    return Err(e.err(line, "box must satisfy lo <= 0 <= hi and lo < hi"));
                }
                Some((lo, hi))
            }
        };
        let output = e
            .raw("output")
            .map(|(_, v)| resolve(v))
            .unwrap_or_else(|| base.join("out"));
        let tol = e.parse("solver.tol")?.unwrap_or(DEFAULT_TOL);
        let max_iter = e.parse("solver.max_iter")?.unwrap_or(DEFAULT_MAX_ITER);
        if !(tol > 0.0) || max_iter == 0 {
            return Err(e.err(e.line_of("solver.tol"), "solver tolerances must be positive"));
        }
        Ok(Self {
            model,
            levels,
            seeds,
            formulations,
            tau,
            k_rule,
            alpha_rule,
            bounds,
            output,
            tol,
            max_iter,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("/tmp/exp.cfg"))
    }

    #[test]
    fn heat_defaults() {
        let cfg = parse("experiment = heat\n").unwrap();
        assert_eq!(cfg.levels, vec![0.001, 0.01]);
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.formulations.len(), 3);
        assert_eq!(cfg.k_rule, KRule::Auto);
        assert_eq!(cfg.alpha_rule, AlphaRule::Morozov);
        assert_eq!(cfg.output, PathBuf::from("/tmp/out"));
    }

    #[test]
    fn full_annulus_config() {
        let cfg = parse(
            "# annulus run\nexperiment = annulus\nlevels = 0.01, 0.05\nseeds = 0-2, 7\n\
             formulations = STD_L1, W_TIKH\nbox = 0, 1\nk = 12\nalpha = 1e-4\n\
             annulus.obs_grid = 4, 5\nsource.center = 4.0\noutput = res\n",
        )
        .unwrap();
        assert_eq!(cfg.seeds, vec![0, 1, 2, 7]);
        assert_eq!(cfg.bounds, Some((0.0, 1.0)));
        assert_eq!(cfg.k_rule, KRule::Fixed(12));
        assert_eq!(cfg.alpha_rule, AlphaRule::Fixed(1e-4));
        assert_eq!(cfg.output, PathBuf::from("/tmp/res"));
        match cfg.model {
            ModelSpec::Annulus { model, source } => {
                assert_eq!(model.obs_grid, (4, 5));
                assert!(matches!(source, TrueSource::Bump { center, .. } if center == 4.0));
            }
            _ => panic!("wrong model"),
        }
    }

    #[test]
    fn unknown_and_repeated_keys_fail_with_line() {
        let err = parse("experiment = heat\nlevel = 0.01\n").unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("unknown key"), "{err}");
        let err = parse("experiment = heat\ntau = 1\ntau = 2\n").unwrap_err().to_string();
        assert!(err.contains(":3:") && err.contains("line 2"), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse("experiment = heat\nlevels = 1.5\n").is_err());
        assert!(parse("experiment = heat\nformulations = L2\n").is_err());
        assert!(parse("experiment = heat\nbox = 1, 2\n").is_err());
        assert!(parse("experiment = heat\nannulus.n_fourier = 3\n").is_err());
        assert!(parse("experiment = heat\nseeds = 3-1\n").is_err());
        assert!(parse("experiment = external\nexternal.matrix = a.txt\n").is_err());
        assert!(parse("levels = 0.01\n").is_err());
    }
}
