//! Adaptive Dormand–Prince 5(4) integration for small fixed-size systems.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // f64 math in no_std builds; shadowed by std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B5: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Magnitude of the first trial step.
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-11, atol: 1e-11, initial_step: 1e-3, max_steps: 200_000 }
    }
}

/// Accepted nodes of an integration, in the order they were produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub xs: Vec<f64>,
    pub ys: Vec<[f64; N]>,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(&[f64; N], f64)]) -> [f64; N] {
    let mut out = *y;
    for (k, w) in terms {
        for i in 0..N {
            out[i] += h * w * k[i];
        }
    }
    out
}

/// One Dormand–Prince step from `(x, y)` of size `h`.
///
/// Returns the fifth-order solution and the embedded error vector.
pub fn dp5_step<const N: usize, F>(f: &F, x: f64, y: &[f64; N], h: f64) -> Result<([f64; N], [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k1 = f(x, y)?;
    let k2 = f(x + C[0] * h, &axpy(y, h, &[(&k1, A2[0])]))?;
    let k3 = f(x + C[1] * h, &axpy(y, h, &[(&k1, A3[0]), (&k2, A3[1])]))?;
    let k4 = f(x + C[2] * h, &axpy(y, h, &[(&k1, A4[0]), (&k2, A4[1]), (&k3, A4[2])]))?;
    let k5 = f(x + C[3] * h, &axpy(y, h, &[(&k1, A5[0]), (&k2, A5[1]), (&k3, A5[2]), (&k4, A5[3])]))?;
    let k6 = f(x + C[4] * h, &axpy(y, h, &[(&k1, A6[0]), (&k2, A6[1]), (&k3, A6[2]), (&k4, A6[3]), (&k5, A6[4])]))?;
    let y5 = axpy(y, h, &[(&k1, B5[0]), (&k3, B5[2]), (&k4, B5[3]), (&k5, B5[4]), (&k6, B5[5])]);
    let k7 = f(x + C[5] * h, &y5)?;
    let y4 = axpy(y, h, &[(&k1, B4[0]), (&k3, B4[2]), (&k4, B4[3]), (&k5, B4[4]), (&k6, B4[5]), (&k7, B4[6])]);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = y5[i] - y4[i];
    }
    Ok((y5, err))
}

/// Integrates `y′ = f(x, y)` from `x0` to `x1` (either direction), recording
/// every accepted node including both ends.
pub fn solve<const N: usize, F>(f: &F, x0: f64, y0: [f64; N], x1: f64, opts: &OdeOptions) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    let mut h = opts.initial_step.min(span).max(f64::MIN_POSITIVE) * dir;
    let mut x = x0;
    let mut y = y0;
    let mut traj = Trajectory { xs: alloc::vec![x0], ys: alloc::vec![y0] };
    let mut steps = 0usize;
    while (x1 - x) * dir > 0.0 {
        if steps >= opts.max_steps {
            return Err(Error::FundamentalSolution(format!(
                "ODE integration exceeded {} steps at x = {x}",
                opts.max_steps
            )));
        }
        steps += 1;
        let last = (x + h - x1) * dir >= 0.0;
        if last {
            h = x1 - x;
        }
        let (y_new, err) = dp5_step(f, x, &y, h)?;
        let mut norm = 0.0;
        let mut finite = true;
        for i in 0..N {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let e = err[i] / sc;
            finite &= y_new[i].is_finite();
            norm += e * e;
        }
        let norm = (norm / N as f64).sqrt();
        if !finite || !norm.is_finite() {
            h *= 0.2;
            if h.abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::FundamentalSolution(format!("ODE solution became non-finite near x = {x}")));
            }
            continue;
        }
        if norm <= 1.0 {
            x = if last { x1 } else { x + h };
            y = y_new;
            traj.xs.push(x);
            traj.ys.push(y);
        }
        let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::FundamentalSolution(format!("ODE step size underflow at x = {x}")));
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let f = |_x: f64, y: &[f64; 1]| Ok([y[0]]);
        let t = solve(&f, 0.0, [1.0], 3.0, &OdeOptions::default()).unwrap();
        let last = t.ys.last().unwrap()[0];
        assert!((last / 3.0f64.exp() - 1.0).abs() < 1e-9);
        assert_eq!(*t.xs.last().unwrap(), 3.0);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let f = |_x: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let t = solve(&f, 2.0, [2.0f64.sin(), 2.0f64.cos()], -1.0, &OdeOptions::default()).unwrap();
        let y = t.ys.last().unwrap();
        assert!((y[0] - (-1.0f64).sin()).abs() < 1e-9);
        assert!((y[1] - (-1.0f64).cos()).abs() < 1e-9);
    }

    #[test]
    fn single_step_is_fifth_order() {
        // Halving h should shrink the error of y′ = y by about 2⁶ per step.
        let f = |_x: f64, y: &[f64; 1]| Ok([y[0]]);
        let e1 = (dp5_step(&f, 0.0, &[1.0], 0.2).unwrap().0[0] - 0.2f64.exp()).abs();
        let e2 = (dp5_step(&f, 0.0, &[1.0], 0.1).unwrap().0[0] - 0.1f64.exp()).abs();
        let order = (e1 / e2).log2();
        assert!(order > 5.5 && order < 6.5, "{order}");
    }
}
