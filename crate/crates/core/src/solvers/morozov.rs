use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ALPHA_MIN: f64 = 1e-12;
pub const ALPHA_MAX: f64 = 1e4;
const REL_TOL: f64 = 1e-3;
const MAX_BISECTIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorozovReport {
    pub alpha: f64,
    pub residual: f64,
    pub delta: f64,
    pub evaluations: usize,
    /// `|residual − δ| ≤ 1e-3·δ`, or the upper bracket already satisfied the discrepancy.
    pub within_tolerance: bool,
}

/// Finds `α` with `‖A x_α − y^δ‖ ≈ δ` by bisection in `log α` over `[1e-12, 1e4]`.
///
/// `residual(α)` solves the problem at `α` and returns its residual norm; it is assumed
/// nondecreasing in `α`. When the residual at the upper end is already at most `δ` the
/// upper end is returned.
pub fn morozov_alpha<F>(mut residual: F, delta: f64) -> Result<MorozovReport>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(delta > 0.0) {
        return Err(Error::Input(format!("noise level must be positive, got {delta}")));
    }
    let close = |r: f64| (r - delta).abs() <= REL_TOL * delta;

    let r_hi = residual(ALPHA_MAX)?;
    if r_hi <= delta || close(r_hi) {
        return Ok(MorozovReport {
            alpha: ALPHA_MAX,
            residual: r_hi,
            delta,
            evaluations: 1,
            within_tolerance: true,
        });
    }
    let r_lo = residual(ALPHA_MIN)?;
    // below δ the search continues towards the crossing; the lower end is only a fallback
    if close(r_lo) && r_lo > delta {
        return Ok(MorozovReport {
            alpha: ALPHA_MIN,
            residual: r_lo,
            delta,
            evaluations: 2,
            within_tolerance: true,
        });
    }
    if r_lo > delta {
        return Err(Error::Bracket {
            alpha_lo: ALPHA_MIN,
            alpha_hi: ALPHA_MAX,
            residual_lo: r_lo,
            residual_hi: r_hi,
            delta,
        });
    }

    let (mut lo, mut hi) = (ALPHA_MIN.ln(), ALPHA_MAX.ln());
    let mut best = (ALPHA_MIN, r_lo);
    let mut evaluations = 2;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let alpha = mid.exp();
        let r = residual(alpha)?;
        evaluations += 1;
        if (r - delta).abs() < (best.1 - delta).abs() {
            best = (alpha, r);
        }
        if close(r) {
            return Ok(MorozovReport {
                alpha,
                residual: r,
                delta,
                evaluations,
                within_tolerance: true,
            });
        }
        if r > delta {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(MorozovReport {
        alpha: best.0,
        residual: best.1,
        delta,
        evaluations,
        within_tolerance: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_tikhonov_fixed_point() {
        // residual α/(1+α)·|b| = |b|/2 at α = 1
        let b = 3.0;
        let rep = morozov_alpha(|a| Ok(a / (1.0 + a) * b), b / 2.0).unwrap();
        assert!(rep.within_tolerance);
        assert!((rep.residual - b / 2.0).abs() <= 1e-3 * b / 2.0);
        assert!((rep.alpha - 1.0).abs() < 5e-3);
    }

    #[test]
    fn lower_end_just_below_delta_keeps_searching() {
        // an inaccurate solve at the lower end lands within tolerance below δ
        let r = |a: f64| Ok(if a == ALPHA_MIN { 0.9995 } else { 0.98 + a });
        let rep = morozov_alpha(r, 1.0).unwrap();
        assert!(rep.within_tolerance);
        assert!(rep.alpha > 1e-2 && rep.alpha < 3e-2, "{}", rep.alpha);
    }

    #[test]
    fn satisfied_by_zero_returns_upper_end() {
        let rep = morozov_alpha(|a| Ok(a / (1.0 + a) * 2.0), 5.0).unwrap();
        assert_eq!(rep.alpha, ALPHA_MAX);
    }

    #[test]
    fn bracket_error_when_noise_floor_unreachable() {
        let err = morozov_alpha(|a| Ok(1.0 + a), 0.5).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn rejects_nonpositive_delta() {
        assert!(morozov_alpha(Ok, 0.0).is_err());
    }
}
