//! Bracketed scalar root finding and unimodal minimization.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // f64 math in no_std builds; shadowed by std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// A root together with the width of the final bracket and the cost of finding it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub bracket_width: f64,
    pub evaluations: usize,
}

/// Brent's method on `[a, b]`; `f(a)` and `f(b)` must differ in sign.
///
/// Terminates once the bracket is narrower than `xtol` (plus a few ulps of `x`).
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(Root { x: a, fx: fa, bracket_width: 0.0, evaluations: 2 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: fb, bracket_width: 0.0, evaluations: 2 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Solver(format!("root not bracketed: f({a}) = {fa:e}, f({b}) = {fb:e}")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for evaluations in (2..).take(MAX_ITER) {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(Root { x: b, fx: fb, bracket_width: (c - b).abs(), evaluations });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Err(Error::Solver(format!("Brent iteration did not converge within {MAX_ITER} steps (last x = {b})")))
}

/// Expands `start + step·2^k` (k = 0, 1, …) until `f` takes the sign `target`.
///
/// Returns `(inner, outer)`, the last point with the opposite sign and the first
/// point with the target sign. `next` maps the current point to the next one.
pub fn expand_until_sign<F, N>(
    mut f: F,
    start: f64,
    mut next: N,
    target_negative: bool,
    max_steps: usize,
    what: &'static str,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
    N: FnMut(f64) -> f64,
{
    let mut samples = Vec::new();
    let mut inner = start;
    let f0 = f(start)?;
    samples.push((start, f0));
    if (f0 < 0.0) == target_negative && f0 != 0.0 {
        return Err(Error::Bracketing { what, samples });
    }
    let mut x = start;
    for _ in 0..max_steps {
        x = next(x);
        if !x.is_finite() {
            break;
        }
        let v = f(x)?;
        samples.push((x, v));
        if (v < 0.0) == target_negative && v != 0.0 {
            return Ok((inner, x));
        }
        inner = x;
    }
    Err(Error::Bracketing { what, samples })
}

/// Golden-section search for the minimizer of a unimodal `f` on `[a, b]`.
pub fn golden_section<F>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5.0.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..(4 * MAX_ITER) {
        if (b - a).abs() <= xtol.max(4.0 * f64::EPSILON * (a.abs() + b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0 * x - 5.0), 2.0, 3.0, 1e-14).unwrap();
        assert!((r.x - 2.094_551_481_542_326_5).abs() < 1e-12);
    }

    #[test]
    fn brent_rejects_unbracketed() {
        assert!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn golden_section_quadratic() {
        let x = golden_section(|x| Ok((x - 0.3).powi(2)), -2.0, 5.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn golden_section_kink() {
        let x = golden_section(|x: f64| Ok(x.abs() - 0.1 * x), -10.0, 10.0, 1e-12).unwrap();
        assert!(x.abs() < 1e-10);
    }

    #[test]
    fn expansion_reports_samples() {
        let r = expand_until_sign(|x| Ok(1.0 + x * 0.0), 1.0, |x| 2.0 * x, true, 5, "test");
        match r {
            Err(Error::Bracketing { samples, .. }) => assert_eq!(samples.len(), 6),
            other => panic!("{other:?}"),
        }
    }
}
