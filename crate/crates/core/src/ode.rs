//! Embedded Dormand-Prince 5(4) integrator with PI step-size control and
//! dense output by cubic Hermite interpolation on accepted steps.
//!
//! Explicit and deterministic: fixed coefficients, no heuristics beyond the
//! controller, so identical inputs reproduce identical sampled output. Stiff
//! problems beyond the step-size floor fail loudly instead of degrading.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}); problem too stiff for the explicit method")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("maximum step count {0} exceeded")]
    MaxStepsExceeded(usize),
    #[error("tolerances must be positive (rtol = {rtol:.3e}, atol = {atol:.3e})")]
    BadTolerances { rtol: f64, atol: f64 },
    #[error("time span must be positive, got {0:.3e}")]
    BadSpan(f64),
}

/// Butcher tableau of the Dormand-Prince 5(4) pair.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (row 7 of A; FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded fourth-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FACTOR_MIN: f64 = 0.2;
const FACTOR_MAX: f64 = 10.0;
const PI_ALPHA: f64 = 0.17;
const PI_BETA: f64 = 0.04;
const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Integration result sampled at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub stats: SolverStats,
}

#[inline]
fn axpy<const N: usize>(y: &mut [f64; N], a: f64, x: &[f64; N]) {
    for k in 0..N {
        y[k] += a * x[k];
    }
}

/// Integrate `y' = f(t, y)` from `t = 0` to `t_end`, sampling the dense
/// output at `sample_times` (must be ascending within `[0, t_end]`).
pub fn integrate<const N: usize, F>(
    f: F,
    y0: [f64; N],
    t_end: f64,
    rtol: f64,
    atol: f64,
    sample_times: &[f64],
) -> Result<Solution<N>, (OdeError, Solution<N>)>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut stats = SolverStats::default();
    let fail = |e: OdeError, partial: (Vec<f64>, Vec<[f64; N]>), stats: SolverStats| {
        Err((
            e,
            Solution {
                times: partial.0,
                states: partial.1,
                stats,
            },
        ))
    };

    if !(rtol > 0.0 && atol > 0.0) {
        return fail(
            OdeError::BadTolerances { rtol, atol },
            (Vec::new(), Vec::new()),
            stats,
        );
    }
    if !(t_end > 0.0) {
        return fail(OdeError::BadSpan(t_end), (Vec::new(), Vec::new()), stats);
    }

    let mut times_out: Vec<f64> = Vec::with_capacity(sample_times.len());
    let mut states_out: Vec<[f64; N]> = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0usize;

    let mut t = 0.0f64;
    let mut y = y0;
    let mut dy = f(t, &y);
    stats.rhs_evals += 1;

    // Emit any samples at t = 0.
    while next_sample < sample_times.len() && sample_times[next_sample] <= 0.0 {
        times_out.push(sample_times[next_sample]);
        states_out.push(y);
        next_sample += 1;
    }

    let mut h = initial_step(&f, t, &y, &dy, rtol, atol, t_end, &mut stats);
    let mut err_prev: f64 = 1.0;

    while t < t_end {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return fail(
                OdeError::MaxStepsExceeded(MAX_STEPS),
                (times_out, states_out),
                stats,
            );
        }
        let h_floor = 1e-14 * t.abs().max(1.0);
        if h < h_floor {
            return fail(
                OdeError::StepSizeUnderflow { t, h },
                (times_out, states_out),
                stats,
            );
        }
        if t + h > t_end {
            h = t_end - t;
        }

        // The seven stages (FSAL: k[0] is the stored derivative).
        let mut k = [[0.0; N]; 7];
        k[0] = dy;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                axpy(&mut ys, h * A[s][j], kj);
            }
            k[s] = f(t + C[s] * h, &ys);
            stats.rhs_evals += 1;
        }

        let mut y5 = y;
        let mut y4 = y;
        for s in 0..7 {
            if B5[s] != 0.0 {
                axpy(&mut y5, h * B5[s], &k[s]);
            }
            if B4[s] != 0.0 {
                axpy(&mut y4, h * B4[s], &k[s]);
            }
        }

        // Scaled RMS error estimate.
        let mut err_sq = 0.0;
        for i in 0..N {
            let scale = atol + rtol * y[i].abs().max(y5[i].abs());
            let e = (y5[i] - y4[i]) / scale;
            err_sq += e * e;
        }
        let err = (err_sq / N as f64).sqrt().max(1e-16);

        if err <= 1.0 {
            // Accept. Dense output: cubic Hermite on [t, t+h] using the
            // endpoint derivatives (k[6] is f at the new point by FSAL).
            let t_new = t + h;
            while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                let ts = sample_times[next_sample];
                let theta = ((ts - t) / h).clamp(0.0, 1.0);
                times_out.push(ts);
                states_out.push(hermite(theta, h, &y, &k[0], &y5, &k[6]));
                next_sample += 1;
            }
            t = t_new;
            y = y5;
            dy = k[6];
            stats.accepted += 1;

            let factor = (SAFETY * err.powf(-PI_ALPHA) * err_prev.powf(PI_BETA))
                .clamp(FACTOR_MIN, FACTOR_MAX);
            h *= factor;
            err_prev = err;
        } else {
            stats.rejected += 1;
            h *= (SAFETY * err.powf(-PI_ALPHA)).clamp(FACTOR_MIN, 1.0);
        }
    }

    // Trailing samples exactly at t_end (guard against rounding).
    while next_sample < sample_times.len() {
        times_out.push(sample_times[next_sample]);
        states_out.push(y);
        next_sample += 1;
    }

    Ok(Solution {
        times: times_out,
        states: states_out,
        stats,
    })
}

/// Classic curvature-based guess for the first step.
fn initial_step<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: &[f64; N],
    dy0: &[f64; N],
    rtol: f64,
    atol: f64,
    t_end: f64,
    stats: &mut SolverStats,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let norm = |v: &[f64; N], y: &[f64; N]| -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let sc = atol + rtol * y[i].abs();
            let e = v[i] / sc;
            s += e * e;
        }
        (s / N as f64).sqrt()
    };
    let d0 = norm(y0, y0);
    let d1 = norm(dy0, y0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let mut y1 = *y0;
    axpy(&mut y1, h0, dy0);
    let dy1 = f(t0 + h0, &y1);
    stats.rhs_evals += 1;
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = dy1[i] - dy0[i];
    }
    let d2 = norm(&diff, y0) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(t_end)
}

/// Cubic Hermite interpolant on one accepted step.
fn hermite<const N: usize>(
    theta: f64,
    h: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    y1: &[f64; N],
    f1: &[f64; N],
) -> [f64; N] {
    let h00 = (1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta);
    let h10 = theta * (1.0 - theta) * (1.0 - theta);
    let h01 = theta * theta * (3.0 - 2.0 * theta);
    let h11 = theta * theta * (theta - 1.0);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let samples: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let sol = integrate(|_, y: &[f64; 1]| [-y[0]], [1.0], 1.0, 1e-10, 1e-12, &samples)
            .unwrap();
        assert_eq!(sol.times.len(), 11);
        for (t, y) in sol.times.iter().zip(sol.states.iter()) {
            assert!((y[0] - (-t).exp()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn circular_orbit_conserves_radius() {
        let samples: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let sol = integrate(
            |_, y: &[f64; 2]| [-y[1], y[0]],
            [1.0, 0.0],
            10.0,
            1e-9,
            1e-12,
            &samples,
        )
        .unwrap();
        for y in &sol.states {
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            assert!((r - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_field_stays_constant() {
        let sol = integrate(
            |_, _: &[f64; 3]| [0.0; 3],
            [0.3, -0.4, 0.5],
            1.0,
            1e-8,
            1e-10,
            &[0.0, 0.5, 1.0],
        )
        .unwrap();
        for y in &sol.states {
            assert_eq!(*y, [0.3, -0.4, 0.5]);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let r = integrate(|_, y: &[f64; 1]| [-y[0]], [1.0], 1.0, 0.0, 1e-9, &[]);
        assert!(matches!(r, Err((OdeError::BadTolerances { .. }, _))));
        let r = integrate(|_, y: &[f64; 1]| [-y[0]], [1.0], -1.0, 1e-6, 1e-9, &[]);
        assert!(matches!(r, Err((OdeError::BadSpan(_), _))));
    }

    #[test]
    fn determinism() {
        let samples: Vec<f64> = (0..=50).map(|k| k as f64 * 0.02).collect();
        let run = || {
            integrate(
                |t, y: &[f64; 2]| [y[1], -y[0] + 0.1 * (3.0 * t).sin()],
                [0.2, 0.0],
                1.0,
                1e-8,
                1e-10,
                &samples,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.states, b.states);
        assert_eq!(a.stats, b.stats);
    }
}
