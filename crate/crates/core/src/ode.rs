//! Adaptive Dormand-Prince 5(4) integration of small ODE systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, max_steps: 1_000_000 }
    }
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` and returns the state at each
/// of the increasing output times, which the stepper hits exactly.
pub fn dopri5<const N: usize, F>(f: F, t0: f64, y0: [f64; N], outputs: &[f64], opts: OdeOptions) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(outputs.len());
    let mut t = t0;
    let mut y = y0;
    let mut h = outputs.first().map(|&t1| (t1 - t0).abs() * 1e-3).unwrap_or(0.0).max(1e-12);
    let mut steps = 0usize;
    for &target in outputs {
        if target < t {
            return Err(Error::Ode(format!("output time {target} precedes current time {t}")));
        }
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Ode(format!("step limit reached at t = {t}")));
            }
            steps += 1;
            let last = t + h >= target;
            let hs = if last { target - t } else { h };
            let mut k = [[0.0; N]; 7];
            k[0] = f(t, &y);
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    for i in 0..N {
                        ys[i] += hs * A[s][j] * kj[i];
                    }
                }
                k[s] = f(t + C[s] * hs, &ys);
            }
            let mut y5 = y;
            let mut err: f64 = 0.0;
            for i in 0..N {
                let mut d5 = 0.0;
                let mut d4 = 0.0;
                for s in 0..7 {
                    d5 += B5[s] * k[s][i];
                    d4 += B4[s] * k[s][i];
                }
                y5[i] += hs * d5;
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((hs * (d5 - d4)).abs() / sc);
            }
            if !err.is_finite() {
                return Err(Error::Ode(format!("non-finite state at t = {t}")));
            }
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y = y5;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let hn = hs * fac;
            if err <= 1.0 && last {
                h = h.max(hn);
            } else {
                h = hn;
            }
            if h < 1e-15 * t.abs().max(1.0) {
                return Err(Error::Ode(format!("step size underflow at t = {t}")));
            }
        }
        out.push(y);
    }
    Ok(out)
}
