//! First-order optimality residuals for weighted ℓ¹ problems with optional boxes.

use nalgebra::DVector;

/// Largest componentwise distance from `−∇f(x)` to `α·∂(Σ w_i|x_i|) + N_box(x)`.
///
/// At `x_i ≠ 0` the subgradient is the point `α w_i sign(x_i)`; at zero it is the interval
/// `[−α w_i, α w_i]`. An active lower (upper) bound widens the admissible set towards
/// `−∞` (`+∞`). The returned value is zero exactly when `x` is a minimizer.
pub fn subgradient_residual(
    x: &DVector<f64>,
    grad: &DVector<f64>,
    weights: &DVector<f64>,
    alpha: f64,
    bounds: Option<(f64, f64)>,
) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let xi = x[i];
        let aw = alpha * weights[i];
        let (mut lo, mut hi) = if xi > 0.0 {
            (aw, aw)
        } else if xi < 0.0 {
            (-aw, -aw)
        } else {
            (-aw, aw)
        };
        if let Some((bl, bh)) = bounds {
            if xi <= bl {
                lo = f64::NEG_INFINITY;
            }
            if xi >= bh {
                hi = f64::INFINITY;
            }
        }
        let target = -grad[i];
        let dist = if target < lo {
            lo - target
        } else if target > hi {
            target - hi
        } else {
            0.0
        };
        worst = worst.max(dist);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_inside_interval_is_optimal() {
        let x = DVector::from_vec(vec![0.0, 2.0]);
        let g = DVector::from_vec(vec![0.3, -0.5]);
        let w = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(subgradient_residual(&x, &g, &w, 0.5, None), 0.0);
        assert!((subgradient_residual(&x, &g, &w, 0.2, None) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn active_bounds_relax_the_condition() {
        // at the upper bound a strongly negative gradient is fine
        let x = DVector::from_vec(vec![1.0]);
        let g = DVector::from_vec(vec![-5.0]);
        let w = DVector::from_vec(vec![1.0]);
        assert!(subgradient_residual(&x, &g, &w, 0.1, None) > 4.0);
        assert_eq!(subgradient_residual(&x, &g, &w, 0.1, Some((0.0, 1.0))), 0.0);
        // at zero with a lower bound, a positive gradient is fine
        let z = DVector::from_vec(vec![0.0]);
        let gp = DVector::from_vec(vec![3.0]);
        assert_eq!(subgradient_residual(&z, &gp, &w, 0.1, Some((0.0, 1.0))), 0.0);
    }
}
