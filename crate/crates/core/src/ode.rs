//! Adaptive Dormand-Prince 5(4) integration of complex linear systems.
//!
//! Error control is per unit of the independent variable: a step of size `h`
//! is accepted when its embedded error estimate is at most `tol·h`, so the
//! accumulated estimate over an interval of length `L` stays below `tol·L`.
//! The 5th-order solution is propagated.

use crate::matrix::{C64, ZERO};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

// 5th-order weights minus embedded 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct Options {
    /// Local error allowed per unit of the independent variable.
    pub tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            initial_step: 1e-2,
            min_step: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    /// Sum of accepted local error estimates.
    pub error_estimate: f64,
}

impl std::ops::AddAssign for Stats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.error_estimate += o.error_estimate;
    }
}

/// The step size collapsed below `min_step` (or the step budget ran out)
/// at `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepFailure {
    pub t: f64,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0` in place.
///
/// `step_cap(t)` bounds the step size near `t`; `f` writes the derivative
/// into its last argument.
pub fn integrate<F, G>(
    y: &mut [C64],
    t0: f64,
    t1: f64,
    opts: &Options,
    step_cap: G,
    mut f: F,
) -> Result<Stats, StepFailure>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    G: Fn(f64) -> f64,
{
    let n = y.len();
    let mut k: Vec<Vec<C64>> = vec![vec![ZERO; n]; 7];
    let mut stage = vec![ZERO; n];
    let mut y_new = vec![ZERO; n];
    let mut stats = Stats::default();

    let mut t = t0;
    let mut h = opts.initial_step.min(t1 - t0);
    f(t, y, &mut k[0]);
    let mut steps = 0usize;

    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(StepFailure { t });
        }
        h = h.min(step_cap(t)).min(t1 - t);
        if h < opts.min_step && t1 - t > opts.min_step {
            return Err(StepFailure { t });
        }

        for s in 1..7 {
            for i in 0..n {
                let mut acc = ZERO;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += kj[i] * a;
                    }
                }
                stage[i] = y[i] + acc * h;
            }
            let (_, tail) = k.split_at_mut(s);
            f(t + C[s] * h, &stage, &mut tail[0]);
        }
        // stage 7 was evaluated at y_new (row 7 of A holds the 5th-order weights)
        y_new.copy_from_slice(&stage);

        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = ZERO;
            for (s, ks) in k.iter().enumerate() {
                if E[s] != 0.0 {
                    e += ks[i] * E[s];
                }
            }
            let scale = 1.0 + y[i].norm().max(y_new[i].norm());
            err = err.max((e * h).norm() / scale);
        }

        let target = opts.tol * h;
        if err <= target || h <= opts.min_step {
            t += h;
            y.copy_from_slice(&y_new);
            k.swap(0, 6);
            stats.accepted += 1;
            stats.error_estimate += err;
        } else {
            stats.rejected += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (target / err).powf(0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(stats)
}
