//! Dormand–Prince 5(4) integrator with adaptive step control.
//!
//! The state is a flat `f64` slice. Output is produced at caller-supplied
//! sample times by shortening the step to land on each of them exactly, so no
//! interpolation error enters the sampled states.

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

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-8, atol: 1e-10, initial_step: None, max_steps: 50_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

struct Stages {
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_stage: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

/// One Dormand–Prince step from `(t, y)` with `k[0] = f(t, y)` already filled.
/// Leaves the fifth-order solution in `st.y_new`, its derivative in `k[6]`, and
/// the local error estimate in `st.err`.
fn dp_step<F>(f: &mut F, t: f64, y: &[f64], h: f64, st: &mut Stages)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let Stages { k, y_stage, y_new, err } = st;
    let [k1, k2, k3, k4, k5, k6, k7] = k;

    for i in 0..n {
        y_stage[i] = y[i] + h * A21 * k1[i];
    }
    f(t + C2 * h, y_stage, k2);
    for i in 0..n {
        y_stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    f(t + C3 * h, y_stage, k3);
    for i in 0..n {
        y_stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    f(t + C4 * h, y_stage, k4);
    for i in 0..n {
        y_stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    f(t + C5 * h, y_stage, k5);
    for i in 0..n {
        y_stage[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    f(t + h, y_stage, k6);
    for i in 0..n {
        y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    f(t + h, y_new, k7);
    for i in 0..n {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], opts: &OdeOptions) -> f64 {
    let n = y.len().max(1);
    let sum: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n as f64).sqrt()
}

fn rms_scaled(v: &[f64], y: &[f64], opts: &OdeOptions) -> f64 {
    let n = v.len().max(1);
    let sum: f64 = v
        .iter()
        .zip(y)
        .map(|(a, b)| (a / (opts.atol + opts.rtol * b.abs())).powi(2))
        .sum();
    (sum / n as f64).sqrt()
}

/// Starting step size from the usual derivative-based heuristic.
fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], f0: &[f64], span: f64, opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let d0 = rms_scaled(y0, y0, opts);
    let d1 = rms_scaled(f0, y0, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h0 * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_scaled(&diff, y0, opts) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrate `y' = f(t, y)` from `t0` and return the state at each of
/// `sample_times` (sorted, all `>= t0`).
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    sample_times: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<Vec<f64>>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::IntegrationFailed { t: t0, reason: "tolerances must be positive".into() });
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.first().is_some_and(|&s| s < t0) {
        return Err(Error::IntegrationFailed { t: t0, reason: "sample times must be sorted and >= t0".into() });
    }

    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(sample_times.len());
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut st = Stages::new(n);
    f(t, &y, &mut st.k[0]);
    stats.evaluations += 1;

    let t_end = sample_times.last().copied().unwrap_or(t0);
    let mut h = match opts.initial_step {
        Some(h) => h,
        None if t_end > t0 => {
            stats.evaluations += 1;
            initial_step(&mut f, t0, &y, &st.k[0].clone(), t_end - t0, opts)
        }
        None => 0.0,
    };

    for &ts in sample_times {
        while t < ts {
            let remaining = ts - t;
            let clamped = h >= remaining;
            let step = if clamped { remaining } else { h };
            if step <= 1e-14 * t.abs().max(1.0) && !clamped {
                return Err(Error::StepUnderflow { t, h: step });
            }
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::IntegrationFailed { t, reason: format!("exceeded {} steps", opts.max_steps) });
            }
            dp_step(&mut f, t, &y, step, &mut st);
            stats.evaluations += 6;
            let err = error_norm(&y, &st.y_new, &st.err, opts);
            if !err.is_finite() {
                return Err(Error::IntegrationFailed { t, reason: "non-finite state".into() });
            }
            if err <= 1.0 {
                stats.accepted += 1;
                t = if clamped { ts } else { t + step };
                std::mem::swap(&mut y, &mut st.y_new);
                // FSAL: the last stage is the derivative at the new point
                let [k1, .., k7] = &mut st.k;
                std::mem::swap(k1, k7);
                let factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
                let proposed = step * factor;
                // a step shortened to hit a sample point should not shrink the next one
                h = if clamped { proposed.max(h) } else { proposed };
            } else {
                stats.rejected += 1;
                h = step * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
                if h <= 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, h });
                }
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

/// Fixed-step fifth-order propagation, `steps` equal steps to `t_end`.
pub fn integrate_fixed<F>(mut f: F, t0: f64, y0: &[f64], t_end: f64, steps: usize) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut st = Stages::new(n);
    let mut y = y0.to_vec();
    let h = (t_end - t0) / steps as f64;
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        f(t, &y, &mut st.k[0]);
        dp_step(&mut f, t, &y, h, &mut st);
        std::mem::swap(&mut y, &mut st.y_new);
    }
    y
}
