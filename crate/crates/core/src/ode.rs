//! Dormand–Prince 5(4) integrator with step-size control.
//!
//! The integrator lands exactly on every requested output time, so callers
//! never need interpolation between accepted steps.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// error coefficients: fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            max_steps: 200_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn error_norm<const N: usize>(
    err: &[f64; N],
    y0: &[f64; N],
    y1: &[f64; N],
    opts: &OdeOptions,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = opts.abs_tol + opts.rel_tol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

/// Integrates `y' = rhs(t, y)` from `t0` through every time in `outputs`
/// (monotone, all on the same side of `t0`), calling `observe` at each.
pub fn integrate<const N: usize, F, O>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    opts: OdeOptions,
    mut observe: O,
) -> Result<OdeStats>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N], &[f64; N]),
{
    let mut stats = OdeStats::default();
    let Some(&last) = outputs.last() else {
        return Ok(stats);
    };
    let dir = if last >= t0 { 1.0 } else { -1.0 };
    let span = (last - t0).abs();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    stats.evaluations += 1;
    let mut h = opts
        .initial_step
        .unwrap_or_else(|| initial_step(&rhs, t, &y, &k1, dir, &opts, &mut stats))
        .abs()
        .min(span.max(f64::MIN_POSITIVE));

    for &target in outputs {
        if (target - t) * dir < 0.0 {
            return Err(Error::Domain(format!(
                "output time {target} lies behind current time {t}"
            )));
        }
        while (target - t) * dir > 0.0 {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Integrator {
                    reason: format!("step budget {} exhausted at t = {t}", opts.max_steps),
                    worst_residual: f64::NAN,
                });
            }
            let remaining = (target - t).abs();
            let mut step = h.min(remaining);
            let landing = step >= remaining * (1.0 - 1e-12);
            if landing {
                step = remaining;
            }
            let hs = dir * step;

            let k2 = rhs(t + C2 * hs, &axpy(&y, &[(A21, &k1)], hs));
            let k3 = rhs(t + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs));
            let k4 = rhs(
                t + C4 * hs,
                &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs),
            );
            let k5 = rhs(
                t + C5 * hs,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs),
            );
            let k6 = rhs(
                t + hs,
                &axpy(
                    &y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    hs,
                ),
            );
            let y_new = axpy(
                &y,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
                hs,
            );
            let k7 = rhs(t + hs, &y_new);
            stats.evaluations += 6;

            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
            }
            let en = error_norm(&err, &y, &y_new, &opts);
            if !en.is_finite() {
                stats.rejected += 1;
                h = step * 0.1;
                continue;
            }
            let factor = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            if en <= 1.0 {
                stats.accepted += 1;
                t = if landing { target } else { t + hs };
                y = y_new;
                k1 = k7;
                // a short landing step says nothing about the natural step size
                if !landing || step >= h {
                    h = step * factor;
                }
            } else {
                stats.rejected += 1;
                h = step * factor.min(1.0);
            }
            if h < 1e-14 * span.max(1.0) {
                return Err(Error::Integrator {
                    reason: format!("step size underflow at t = {t}"),
                    worst_residual: en,
                });
            }
        }
        observe(t, &y, &k1);
    }
    Ok(stats)
}

fn initial_step<const N: usize, F>(
    rhs: &F,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let scale: Vec<f64> = y
        .iter()
        .map(|v| opts.abs_tol + opts.rel_tol * v.abs())
        .collect();
    let norm = |v: &[f64; N]| {
        (v.iter()
            .zip(&scale)
            .map(|(x, s)| (x / s).powi(2))
            .sum::<f64>()
            / N as f64)
            .sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = axpy(y, &[(1.0, f0)], dir * h0);
    let f1 = rhs(t + dir * h0, &y1);
    stats.evaluations += 1;
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
