//! Primal active-set method for `min ½xᵀQx − cᵀx + α Σ w_i|x_i|` over an optional box.
//!
//! Each coordinate is either zero, free with a fixed sign, or pinned at a bound. On the
//! free set the objective is a quadratic; the method steps towards its minimizer and stops
//! at the first coordinate that reaches zero or a bound, so the objective never increases.
//! When the free subproblem is solved, the most violated optimality condition among the
//! other coordinates releases one of them. The iteration ends at an exact stationary point
//! up to rounding.

use nalgebra::DVector;

use super::quadratic::SpectralQuadratic;
use crate::linop::thin_svd;

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Zero,
    Free(f64),
    Lower,
    Upper,
}

pub(crate) struct ActiveSetOutcome {
    pub x: DVector<f64>,
    pub steps: usize,
    /// Objective after every step, starting with the initial point.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

pub(crate) struct ActiveSetProblem<'a> {
    pub quad: &'a SpectralQuadratic,
    pub linear: &'a DVector<f64>,
    pub weights: &'a DVector<f64>,
    pub alpha: f64,
    pub bounds: Option<(f64, f64)>,
}

impl ActiveSetProblem<'_> {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let qx = self.quad.apply(x);
        let l1: f64 = x.iter().zip(self.weights.iter()).map(|(a, w)| a.abs() * w).sum();
        0.5 * x.dot(&qx) - self.linear.dot(x) + self.alpha * l1
    }

    fn bounds(&self) -> (f64, f64) {
        self.bounds.unwrap_or((f64::NEG_INFINITY, f64::INFINITY))
    }

    /// Runs from `x0` (projected onto the box) for at most `max_steps` steps.
    pub fn solve(&self, x0: &DVector<f64>, max_steps: usize) -> ActiveSetOutcome {
        let n = x0.len();
        let (lo, hi) = self.bounds();
        let scale = x0.amax().max(1e-300);
        let mut x = x0.map(|v| v.clamp(lo, hi));
        let mut state: Vec<State> = x
            .iter()
            .map(|&v| {
                if v.abs() <= 1e-12 * scale {
                    State::Zero
                } else if v <= lo {
                    State::Lower
                } else if v >= hi {
                    State::Upper
                } else {
                    State::Free(v.signum())
                }
            })
            .collect();
        for i in 0..n {
            match state[i] {
                State::Zero => x[i] = 0.0,
                State::Lower => x[i] = lo,
                State::Upper => x[i] = hi,
                State::Free(_) => {}
            }
        }

        let mut trace = vec![self.objective(&x)];
        let mut steps = 0;
        let mut subproblem_solved = false;
        while steps < max_steps {
            if subproblem_solved {
                match self.most_violated(&x, &state) {
                    Some((i, sign)) => {
                        state[i] = State::Free(sign);
                        subproblem_solved = false;
                    }
                    None => break,
                }
            }
            let free: Vec<usize> = (0..n).filter(|&i| matches!(state[i], State::Free(_))).collect();
            if free.is_empty() {
                subproblem_solved = true;
                steps += 1;
                continue;
            }
            let Some((dir, bounded)) = self.free_direction(&x, &state, &free) else {
                subproblem_solved = true;
                steps += 1;
                continue;
            };

            // longest step keeping every free coordinate inside its orthant and the box
            let mut t_max = if bounded { 1.0 } else { f64::INFINITY };
            let mut blocking = None;
            for (a, &i) in free.iter().enumerate() {
                let d = dir[a];
                if d == 0.0 {
                    continue;
                }
                let State::Free(s) = state[i] else { unreachable!() };
                let stop = if d * s < 0.0 { 0.0 } else if d > 0.0 { hi } else { lo };
                let t = (stop - x[i]) / d;
                if t.is_finite() && t < t_max {
                    t_max = t.max(0.0);
                    blocking = Some((i, stop));
                }
            }
            if !t_max.is_finite() {
                break;
            }
            for (a, &i) in free.iter().enumerate() {
                x[i] += t_max * dir[a];
            }
            match blocking {
                Some((i, stop)) => {
                    x[i] = stop;
                    state[i] = if stop == 0.0 {
                        State::Zero
                    } else if stop == lo {
                        State::Lower
                    } else {
                        State::Upper
                    };
                }
                None => subproblem_solved = true,
            }
            steps += 1;
            trace.push(self.objective(&x));
        }
        ActiveSetOutcome { x, steps, trace }
    }

    /// Step towards the minimizer of the quadratic on the free set, or a descent ray in
    /// its null space when that quadratic is unbounded below (second value `false`).
    fn free_direction(
        &self,
        x: &DVector<f64>,
        state: &[State],
        free: &[usize],
    ) -> Option<(DVector<f64>, bool)> {
        let qx = self.quad.apply(x);
        let g = DVector::from_fn(free.len(), |a, _| {
            let i = free[a];
            let State::Free(s) = state[i] else { unreachable!() };
            qx[i] - self.linear[i] + self.alpha * self.weights[i] * s
        });
        // Q_FF = M Mᵀ with M = B_F diag(√d)
        let mut m = self.quad.basis().select_rows(free);
        for (j, mut col) in m.column_iter_mut().enumerate() {
            col *= self.quad.diag()[j].max(0.0).sqrt();
        }
        let (u, s, _) = thin_svd(&m);
        let tol = f64::EPSILON * s.get(0).copied().unwrap_or(0.0) * free.len().max(m.ncols()) as f64;
        let rank = s.iter().take_while(|&&v| v > tol && v > 0.0).count();
        let ur = u.columns(0, rank);
        let coeff = ur.tr_mul(&g);
        let g_null = &g - ur * &coeff;
        let g_scale = g.amax();
        if g_scale == 0.0 {
            return None;
        }
        if g_null.amax() > 1e-12 * g_scale.max(self.linear.amax()) {
            return Some((-g_null, false));
        }
        let newton = DVector::from_fn(rank, |i, _| coeff[i] / (s[i] * s[i]));
        let step = -(ur * newton);
        if step.amax() == 0.0 {
            return None;
        }
        Some((step, true))
    }

    /// Coordinate outside the free set whose release decreases the objective fastest.
    fn most_violated(&self, x: &DVector<f64>, state: &[State]) -> Option<(usize, f64)> {
        let (lo, hi) = self.bounds();
        let g = self.quad.apply(x) - self.linear;
        let floor = 1e-10 * self.alpha * self.weights.max().max(1e-300);
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..x.len() {
            let aw = self.alpha * self.weights[i];
            // (violation, sign of the released coordinate)
            let cand = match state[i] {
                State::Free(_) => None,
                State::Zero => {
                    if hi > 0.0 && g[i] + aw < 0.0 {
                        Some((-(g[i] + aw), 1.0))
                    } else if lo < 0.0 && g[i] - aw > 0.0 {
                        Some((g[i] - aw, -1.0))
                    } else {
                        None
                    }
                }
                // moving up from a negative lower bound
                State::Lower => (g[i] - aw < 0.0).then(|| (aw - g[i], -1.0)),
                // moving down from a positive upper bound
                State::Upper => (g[i] + aw > 0.0).then(|| (g[i] + aw, 1.0)),
            };
            if let Some((v, s)) = cand {
                if v > floor && best.is_none_or(|b| v > b.1) {
                    best = Some((i, v, s));
                }
            }
        }
        best.map(|(i, _, s)| (i, s))
    }
}
