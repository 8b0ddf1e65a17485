//! Dormand–Prince 5(4) integrator for complex linear systems, with PI step
//! control and 4th-order continuous output.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|.
    pub h_max: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(tol: f64, h_max: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_max,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn error_norm(err: &[Complex64], y0: &[Complex64], y1: &[Complex64], ctl: &StepControl) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = ctl.atol + ctl.rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to `t1` (either direction).
///
/// `samples` must be ordered along the direction of integration and lie in
/// `[t0, t1]`; `on_sample` receives the dense-output state at each of them.
/// Returns the state at `t1`.
pub fn integrate<F, S>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y0: &[Complex64],
    ctl: &StepControl,
    samples: &[f64],
    mut on_sample: S,
) -> Result<(Vec<Complex64>, Stats)>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    S: FnMut(f64, &[Complex64]),
{
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let zero = Complex64::new(0.0, 0.0);
    let mut stats = Stats::default();
    let mut y = y0.to_vec();
    let mut next_sample = 0;

    // Samples sitting exactly on t0.
    while next_sample < samples.len() && samples[next_sample] == t0 {
        on_sample(t0, &y);
        next_sample += 1;
    }
    if t0 == t1 {
        for &ts in &samples[next_sample..] {
            on_sample(ts, &y);
        }
        return Ok((y, stats));
    }

    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut ytmp = vec![zero; n];
    let mut ynew = vec![zero; n];
    let mut errv = vec![zero; n];
    let mut cont = vec![[zero; 5]; n];
    let mut dense = vec![zero; n];

    rhs(t0, &y, &mut k1);
    stats.evaluations += 1;

    let span = (t1 - t0).abs();
    let h_max = ctl.h_max.min(span);
    let mut h = initial_step(&mut rhs, t0, &y, &k1, h_max, ctl, &mut ytmp, &mut k2) * dir;
    stats.evaluations += 1;

    let mut t = t0;
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return Err(Error::StepUnderflow { t, h });
        }
        if h.abs() <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }
        let last = (t + h - t1) * dir >= 0.0;
        if last {
            h = t1 - t;
        }

        for i in 0..n {
            ytmp[i] = y[i] + k1[i] * (h * A21);
        }
        rhs(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        rhs(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        rhs(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        rhs(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        let t_new = if last { t1 } else { t + h };
        rhs(t_new, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i]
                + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        rhs(t_new, &ynew, &mut k7);
        stats.evaluations += 6;

        for i in 0..n {
            errv[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * h;
        }
        let err = error_norm(&errv, &y, &ynew, ctl);
        let fac11 = err.powf(0.2 - BETA * 0.75);

        if err <= 1.0 {
            stats.accepted += 1;
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = k1[i] * h - dy;
                cont[i] = [
                    y[i],
                    dy,
                    bspl,
                    dy - k7[i] * h - bspl,
                    (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7)
                        * h,
                ];
            }
            while next_sample < samples.len() && (samples[next_sample] - t_new) * dir <= 0.0 {
                let ts = samples[next_sample];
                let theta = ((ts - t) / h).clamp(0.0, 1.0);
                let theta1 = 1.0 - theta;
                for i in 0..n {
                    let c = &cont[i];
                    dense[i] = c[0] + (c[1] + (c[2] + (c[3] + c[4] * theta1) * theta) * theta1) * theta;
                }
                if ts == t_new {
                    on_sample(ts, &ynew);
                } else {
                    on_sample(ts, &dense);
                }
                next_sample += 1;
            }

            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            if last {
                break;
            }

            let mut fac = fac11 / err_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.abs().min(h.abs()) * dir;
            }
            h = h_new.abs().min(h_max) * dir;
            err_old = err.max(1e-4);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }

    for &ts in &samples[next_sample..] {
        on_sample(ts, &y);
    }
    Ok((y, stats))
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    rhs: &mut F,
    t0: f64,
    y0: &[Complex64],
    f0: &[Complex64],
    h_max: f64,
    ctl: &StepControl,
    ytmp: &mut [Complex64],
    f1: &mut [Complex64],
) -> f64
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y0.len().max(1) as f64;
    let sc = |v: &Complex64| ctl.atol + ctl.rtol * v.norm();
    let d0 = (y0.iter().map(|v| (v.norm() / sc(v)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0
        .iter()
        .zip(y0)
        .map(|(f, v)| (f.norm() / sc(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(h_max);
    for i in 0..y0.len() {
        ytmp[i] = y0[i] + f0[i] * h0;
    }
    rhs(t0 + h0, ytmp, f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(y0)
        .map(|((a, b), v)| ((a - b).norm() / sc(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(h_max)
}
