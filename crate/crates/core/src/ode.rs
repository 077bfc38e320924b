//! Adaptive Dormand–Prince 5(4) integrator for complex vector fields.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
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
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
            max_steps: 100_000,
        }
    }
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`, returning `y(t1)`.
pub fn integrate<F>(mut f: F, t0: f64, t1: f64, y0: &[Complex64], tol: Tolerance) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n]; 7];
    let mut stage = vec![Complex64::default(); n];
    let mut y5 = vec![Complex64::default(); n];
    let span = t1 - t0;
    let mut t = t0;
    let mut h = span / 100.0;
    f(t, &y, &mut k[0]);

    for _ in 0..tol.max_steps {
        if (t1 - t) * span.signum() <= 0.0 {
            return Ok(y);
        }
        if (t + h - t1) * span.signum() > 0.0 {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += kj[i] * (h * A[s][j]);
                }
                stage[i] = acc;
            }
            f(t + C[s] * h, &stage, &mut k[s]);
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut hi = y[i];
            let mut lo = y[i];
            for s in 0..7 {
                hi += k[s][i] * (h * B5[s]);
                lo += k[s][i] * (h * B4[s]);
            }
            y5[i] = hi;
            let scale = tol.atol + tol.rtol * y[i].norm().max(hi.norm());
            err = err.max((hi - lo).norm() / scale);
        }
        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
            // First-same-as-last: the seventh stage is f(t+h, y5).
            k.swap(0, 6);
        }
        let factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
        h *= factor.clamp(0.2, 5.0);
    }
    Err(Error::NoConvergence {
        iterations: tol.max_steps,
        residual: (t1 - t).abs(),
    })
}
