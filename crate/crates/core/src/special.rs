//! Confluent hypergeometric functions `M`, `U` and the parabolic cylinder
//! function `D_ν`, evaluated in log space so that the large exponents met at
//! high signal intensities neither overflow nor underflow.

use alloc::format;
use core::f64::consts::{LN_2, PI};

#[allow(unused_imports)] // f64 math in no_std builds; shadowed by std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_estimate, integrate_upper_tail, Integrand, Tolerances};

const MAX_TERMS: usize = 1_000_000;
const RESCALE: f64 = 1e280;

const U_TOL: Tolerances = Tolerances { quad_tol: 1e-13, root_tol: 1e-10, tail_tol: 1e-17 };

fn fail(name: &'static str, detail: alloc::string::String) -> Error {
    Error::SpecialFunction { name, detail }
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Power series of `M(a, b, z)` as `(sign, ln|M|)`.
fn m_series(a: f64, b: f64, z: f64) -> Result<(f64, f64)> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ln_scale = 0.0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let ratio = (a + kf) / (b + kf) * z / (kf + 1.0);
        term *= ratio;
        sum += term;
        if sum.abs() > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            ln_scale += RESCALE.ln();
        }
        let r = ratio.abs();
        if term == 0.0 || (r < 1.0 && term.abs() * r / (1.0 - r) <= 1e-17 * sum.abs()) {
            return Ok((sum.signum(), sum.abs().ln() + ln_scale));
        }
    }
    Err(fail("kummer_m", format!("series did not converge for a={a}, b={b}, z={z}")))
}

/// Large-`z` expansion `M ≈ Γ(b)/Γ(a) e^z z^{a−b} Σ (b−a)_k (1−a)_k / (k! z^k)`
/// for `a > 0`; `None` if the terms grow before reaching full precision.
fn m_asymptotic(a: f64, b: f64, z: f64) -> Option<f64> {
    if !(a > 0.0 && b > 0.0 && z > 50.0) {
        return None;
    }
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    for k in 0..200 {
        let kf = k as f64;
        let next = term * (b - a + kf) * (1.0 - a + kf) / ((kf + 1.0) * z);
        if next.abs() > term.abs() {
            return None;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            return (sum > 0.0).then(|| ln_gamma(b) - ln_gamma(a) + z + (a - b) * z.ln() + sum.ln());
        }
    }
    None
}

fn check_args(name: &'static str, a: f64, b: f64, z: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(fail(name, format!("non-finite argument a={a}, b={b}, z={z}")));
    }
    if b <= 0.0 && b == b.floor() {
        return Err(fail(name, format!("b={b} is a non-positive integer")));
    }
    Ok(())
}

fn m_signed(a: f64, b: f64, z: f64) -> Result<(f64, f64)> {
    check_args("kummer_m", a, b, z)?;
    if z == 0.0 || a == 0.0 {
        return Ok((1.0, 0.0));
    }
    if z < 0.0 && b - a >= 0.0 {
        // Kummer's transformation turns the alternating series into a positive one.
        let (s, l) = m_series(b - a, b, -z)?;
        return Ok((s, l + z));
    }
    if let Some(l) = m_asymptotic(a, b, z) {
        return Ok((1.0, l));
    }
    m_series(a, b, z)
}

/// Kummer's function `M(a, b, z) = Σ (a)_k z^k / ((b)_k k!)`.
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<f64> {
    let (s, l) = m_signed(a, b, z)?;
    Ok(s * l.exp())
}

/// `ln M(a, b, z)`; fails where `M` is not positive.
pub fn ln_kummer_m(a: f64, b: f64, z: f64) -> Result<f64> {
    let (s, l) = m_signed(a, b, z)?;
    if s > 0.0 {
        Ok(l)
    } else {
        Err(fail("kummer_m", format!("M({a}, {b}, {z}) is not positive")))
    }
}

/// `M′(a, b, z) / M(a, b, z)` via `M′ = (a/b) M(a+1, b+1, z)`.
pub fn kummer_m_log_derivative(a: f64, b: f64, z: f64) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    let (s1, l1) = m_signed(a + 1.0, b + 1.0, z)?;
    let (s0, l0) = m_signed(a, b, z)?;
    Ok(a / b * s1 * s0 * (l1 - l0).exp())
}

/// `ln U(a, b, z)` for `a > 0`, `z > 0` from
/// `U = z^{-a} Γ(a)^{-1} ∫₀^∞ e^{-s} s^{a-1} (1 + s/z)^{b-a-1} ds`.
fn ln_u_integral(a: f64, b: f64, z: f64) -> Result<f64> {
    let e = b - a - 1.0;
    let g = |s: f64| -s + (a - 1.0) * s.ln() + e * (s / z).ln_1p();

    // Interior maximum of g solves s² + (z + 2 − b)s − (a − 1)z = 0.
    let bq = z + 2.0 - b;
    let cq = -(a - 1.0) * z;
    let disc = bq * bq - 4.0 * cq;
    let peak = if disc >= 0.0 {
        let s = if bq > 0.0 { -2.0 * cq / (bq + disc.sqrt()) } else { (-bq + disc.sqrt()) / 2.0 };
        (s > 0.0 && s.is_finite()).then_some(s)
    } else {
        None
    };

    let head_end = if a < 1.0 { 1.0f64.min(peak.unwrap_or(1.0)) } else { 0.0 };
    let mut shift = g(1.0);
    if let Some(p) = peak {
        shift = shift.max(g(p));
    }
    if a < 1.0 {
        shift = shift.max(0.0);
    }
    let body = |s: f64| (g(s) - shift).exp();

    let mut total = 0.0;
    if a < 1.0 {
        // s = t^{1/a} absorbs the s^{a-1} singularity at the origin.
        let inv_a = 1.0 / a;
        let head = integrate_estimate(
            Integrand::new(|t: f64| {
                let s = t.powf(inv_a);
                (-s + e * (s / z).ln_1p() - shift).exp() * inv_a
            }),
            0.0,
            head_end.powf(a),
            U_TOL.quad_tol,
        )?;
        total += head.value;
    }
    let tail_start = match peak {
        Some(p) if p > head_end => {
            total += integrate_estimate(Integrand::new(body), head_end, p, U_TOL.quad_tol)?.value;
            p
        }
        _ => head_end,
    };
    total += integrate_upper_tail(Integrand::new(body), tail_start, &U_TOL, Some(1.0))?.value;

    if !(total > 0.0 && total.is_finite()) {
        return Err(fail("kummer_u", format!("integral representation degenerated for a={a}, b={b}, z={z}")));
    }
    Ok(-a * z.ln() - ln_gamma(a) + shift + total.ln())
}

/// `ln U(a, b, z)` for `z > 0`. Covers `a ≥ 0` directly and `a < 0` through
/// `U(a, b, z) = z^{1-b} U(a−b+1, 2−b, z)` when `a − b + 1 ≥ 0`.
pub fn ln_kummer_u(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && z.is_finite()) || z <= 0.0 {
        return Err(fail("kummer_u", format!("requires finite a, b and z > 0, got a={a}, b={b}, z={z}")));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    if a > 0.0 {
        return ln_u_integral(a, b, z);
    }
    let a2 = a - b + 1.0;
    if a2 >= 0.0 {
        let rest = if a2 == 0.0 { 0.0 } else { ln_u_integral(a2, 2.0 - b, z)? };
        return Ok((1.0 - b) * z.ln() + rest);
    }
    Err(fail("kummer_u", format!("a={a}, b={b}: U may change sign; only a ≥ 0 or a − b + 1 ≥ 0 is supported")))
}

/// Tricomi's function `U(a, b, z)`.
pub fn kummer_u(a: f64, b: f64, z: f64) -> Result<f64> {
    ln_kummer_u(a, b, z).map(f64::exp)
}

/// `U′(a, b, z) / U(a, b, z)` via `U′ = −a U(a+1, b+1, z)`.
pub fn kummer_u_log_derivative(a: f64, b: f64, z: f64) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    if a < 0.0 {
        let a2 = a - b + 1.0;
        let inner = if a2 == 0.0 { 0.0 } else { kummer_u_log_derivative(a2, 2.0 - b, z)? };
        return Ok((1.0 - b) / z + inner);
    }
    let l1 = ln_kummer_u(a + 1.0, b + 1.0, z)?;
    let l0 = ln_kummer_u(a, b, z)?;
    Ok(-a * (l1 - l0).exp())
}

fn log_add(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((x - m).exp() + (y - m).exp()).ln()
}

/// `ln D_ν(w)` for `ν ≤ 0`, where `D_ν` is positive on the whole line.
///
/// For `w > 0`: `D_ν(w) = 2^{ν/2} e^{−w²/4} U(−ν/2, 1/2, w²/2)`. For `w ≤ 0`
/// the `M`-connection formula is used; both of its terms are positive there.
/// Just right of the origin the same formula is used as a difference.
pub fn ln_parabolic_cylinder_d(nu: f64, w: f64) -> Result<f64> {
    if !(nu.is_finite() && w.is_finite()) || nu > 0.0 {
        return Err(fail("parabolic_cylinder_d", format!("requires finite w and ν ≤ 0, got ν={nu}, w={w}")));
    }
    let z = 0.5 * w * w;
    let base = 0.5 * nu * LN_2 - 0.25 * w * w;
    if w > 0.0 && z >= 1.0 {
        return Ok(base + ln_kummer_u(-0.5 * nu, 0.5, z)?);
    }
    let even = ln_kummer_m(-0.5 * nu, 0.5, z)? - ln_gamma(0.5 * (1.0 - nu));
    let odd = if nu == 0.0 || w == 0.0 {
        f64::NEG_INFINITY
    } else {
        0.5 * LN_2 + w.abs().ln() + ln_kummer_m(0.5 * (1.0 - nu), 1.5, z)? - ln_gamma(-0.5 * nu)
    };
    if w <= 0.0 {
        return Ok(base + 0.5 * PI.ln() + log_add(even, odd));
    }
    // Near the origin the odd term is a small correction and the difference
    // is well conditioned; farther out it cancels and U is used instead.
    if odd - even < -LN_2 {
        return Ok(base + 0.5 * PI.ln() + even + (-(odd - even).exp()).ln_1p());
    }
    Ok(base + ln_kummer_u(-0.5 * nu, 0.5, z)?)
}

pub fn parabolic_cylinder_d(nu: f64, w: f64) -> Result<f64> {
    ln_parabolic_cylinder_d(nu, w).map(f64::exp)
}

/// `D_ν′(w) / D_ν(w) = −w/2 + ν D_{ν−1}(w) / D_ν(w)`.
pub fn parabolic_cylinder_d_log_derivative(nu: f64, w: f64) -> Result<f64> {
    if nu == 0.0 {
        return Ok(-0.5 * w);
    }
    let ratio = (ln_parabolic_cylinder_d(nu - 1.0, w)? - ln_parabolic_cylinder_d(nu, w)?).exp();
    Ok(-0.5 * w + nu * ratio)
}
