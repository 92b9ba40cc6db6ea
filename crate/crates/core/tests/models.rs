mod common;

use std::path::Path;

use nalgebra::DVector;

use ficnull::experiment::{prepare_model, ExperimentConfig};
use ficnull::linop::compute_singular_system;
use ficnull::models::{
    add_noise, build_annulus_matrix, build_heat_matrix, heat_data_from_function, load_matrix, save_matrix,
    AnnulusModelConfig, AnnulusRole, HeatModelConfig, NoiseSpec,
};
use ficnull::weighting::select_truncation;

#[test]
fn heat_matrix_matches_crank_nicolson() {
    let cfg = HeatModelConfig::default();
    let a = build_heat_matrix(&cfg).unwrap();
    let oracle = common::heat_oracle_matrix(&cfg);
    let err = (a.as_matrix() - &oracle).amax();
    eprintln!("heat oracle deviation {err:e}");
    assert!(err <= 1e-4, "max entry deviation {err:e}");
}

#[test]
fn annulus_matrix_matches_finite_differences() {
    let cfg = AnnulusModelConfig::default();
    let inv = build_annulus_matrix(&cfg, AnnulusRole::Inverse).unwrap();
    let oracle = common::annulus_oracle_matrix(&cfg, cfg.n_basis_inv, 401, 8);
    let err = (inv.matrix.as_matrix() - &oracle).amax();
    eprintln!("annulus oracle deviation {err:e}");
    assert!(err <= 1e-3, "max sample deviation {err:e}");
}

#[test]
fn annulus_smooth_data_match_finite_differences() {
    // arc averages of cos θ and sin θ; the discrete solution of the smooth data is the reference
    let cfg = AnnulusModelConfig::default();
    let inv = build_annulus_matrix(&cfg, AnnulusRole::Inverse).unwrap();
    let fd = common::PolarFd::new(cfg.r_inner, cfg.r_outer, 256, 256);
    let pts = cfg.observation_points();
    let arcs = cfg.n_basis_inv;
    for (g, avg) in [
        (f64::cos as fn(f64) -> f64, (|a: f64, b: f64| (b.sin() - a.sin()) / (b - a)) as fn(f64, f64) -> f64),
        (f64::sin, |a: f64, b: f64| (a.cos() - b.cos()) / (b - a)),
    ] {
        let c = DVector::from_fn(arcs, |j, _| {
            let (a, b) = AnnulusModelConfig::arc(arcs, j);
            avg(a, b)
        });
        let lib = inv.matrix.mul_vec(&c).unwrap();
        let samples: Vec<f64> = (0..256).map(|j| g(fd.theta(j))).collect();
        let reference = fd.solve_at(&samples, &pts);
        for (p, (x, y)) in lib.iter().zip(&reference).enumerate() {
            assert!((x - y).abs() <= 1e-3, "sample {p}: {x} vs {y}");
        }
    }
}

#[test]
fn heat_data_from_basis_function_reproduces_column() {
    let cfg = HeatModelConfig::default();
    let a = build_heat_matrix(&cfg).unwrap();
    let (lo, hi) = cfg.interval(7);
    let y = heat_data_from_function(&cfg, 20 * 9, |x| if x > lo && x < hi { 1.0 } else { 0.0 }).unwrap();
    let col = a.column(7);
    assert!((y - col).amax() < 1e-12);
}

#[test]
fn truncation_levels_for_default_seed() {
    // regression pins for the default heat problem, seed 0
    let cfg = ExperimentConfig::parse("experiment = heat\nlevels = 0.01\nseeds = 0\nformulations = W_L1_MODFID\n", Path::new("t.cfg")).unwrap();
    let model = prepare_model(&cfg.model).unwrap();
    for (level, k) in [(0.001, 3), (0.01, 2)] {
        let noisy = add_noise(&model.y_clean, &NoiseSpec::new(level, 0)).unwrap();
        assert_eq!(select_truncation(&model.svd, &model.y_clean, &noisy.eta).unwrap().k, k, "level {level}");
    }
}

#[test]
fn noise_has_requested_level_and_is_reproducible() {
    let b = DVector::from_fn(40, |i, _| (i as f64 * 0.3).sin());
    let spec = NoiseSpec::new(0.01, 42);
    let d1 = add_noise(&b, &spec).unwrap();
    let d2 = add_noise(&b, &spec).unwrap();
    assert_eq!(d1.y_delta, d2.y_delta);
    assert!(((&d1.y_delta - &b).norm() - d1.delta).abs() < 1e-15);
    let d3 = add_noise(&b, &NoiseSpec::new(0.01, 43)).unwrap();
    assert_ne!(d1.eta, d3.eta);
    let range = b.max() - b.min();
    // sample standard deviation should be near level·range
    let sd = (d1.eta.norm_squared() / 40.0).sqrt();
    assert!(sd > 0.5 * 0.01 * range && sd < 1.5 * 0.01 * range);
}

#[test]
fn matrix_file_round_trip_is_exact() {
    let cfg = AnnulusModelConfig::default();
    let a = build_annulus_matrix(&cfg, AnnulusRole::Inverse).unwrap().matrix;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.txt");
    save_matrix(&a, &path).unwrap();
    let back = load_matrix(&path).unwrap();
    assert_eq!(back.to_row_major(), a.to_row_major());
}

#[test]
fn heat_spectrum_decays_fast() {
    let a = build_heat_matrix(&HeatModelConfig::default()).unwrap();
    let svd = compute_singular_system(&a).unwrap();
    let s = svd.sigma();
    assert!(s[5] / s[0] < 1e-8);
}
