//! Adaptive Gauss–Kronrod quadrature on finite intervals, geometric panelling
//! toward integrable endpoint singularities, and progressive truncation for
//! intervals with an infinite endpoint.
//!
//! Convergence is measured against the L1 mass of the integrand: a panel set
//! is accepted once the summed Kronrod error is at most `tol * ∫|f|`. For a
//! single-signed integrand this is an ordinary relative tolerance; for an
//! integrand that cancels (e.g. near a root of `L`) it stays meaningful where
//! a pure relative test would never terminate.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)] // f64 math in no_std builds; shadowed by std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Largest bisection depth of any panel.
pub const MAX_DEPTH: u32 = 60;
const MAX_PANELS: usize = 4000;
const MAX_DOUBLINGS: u32 = 64;
const MAX_GEOMETRIC_PANELS: u32 = 1100;

/// Numeric tolerances shared by every analytic module.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    /// Target error of finite-interval quadrature, relative to `∫|f|`.
    pub quad_tol: f64,
    /// Width of the final root bracket in `x`.
    pub root_tol: f64,
    /// Truncation threshold for the last doubling panel of a tail integral.
    pub tail_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { quad_tol: 1e-12, root_tol: 1e-10, tail_tol: 1e-14 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("quad_tol", self.quad_tol), ("root_tol", self.root_tol), ("tail_tol", self.tail_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    detail: alloc::format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// An integrand together with flags marking endpoints where it may blow up.
pub struct Integrand<F> {
    f: F,
    singular_lower: bool,
    singular_upper: bool,
}

impl<F: FnMut(f64) -> f64> Integrand<F> {
    pub fn new(f: F) -> Self {
        Integrand { f, singular_lower: false, singular_upper: false }
    }

    pub fn singular_at_lower(mut self) -> Self {
        self.singular_lower = true;
        self
    }

    pub fn singular_at_upper(mut self) -> Self {
        self.singular_upper = true;
        self
    }

    fn eval(&mut self, z: f64) -> Result<f64> {
        let v = (self.f)(z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::ModelEvaluation { what: "integrand", x: z })
        }
    }
}

/// Value of an integral together with its error estimate and `∫|f|`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub l1: f64,
}

impl Estimate {
    fn add(&mut self, other: Estimate) {
        self.value += other.value;
        self.error += other.error;
        self.l1 += other.l1;
    }
}

/// Result of a tail integral: value plus the size of the last doubling panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub value: f64,
    pub tail_bound: f64,
    pub l1: f64,
}

// 21-point Kronrod rule with its embedded 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut Integrand<F>, a: f64, b: f64) -> Result<Estimate> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f.eval(center)?;
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = fc.abs() * WGK[10];
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f.eval(center - dx)?;
        let f2 = f.eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let h = half.abs();
    let result = resk * half;
    resabs *= h;
    resasc *= h;
    if !(result.is_finite() && resabs.is_finite()) {
        return Err(Error::Quadrature { a, b, estimate: result, error: f64::INFINITY });
    }
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Estimate { value: result, error: err, l1: resabs })
}

/// Bisects the worst panel until the summed error is below
/// `max(tol·∫|f|, abs_target)` or every panel sits at the roundoff floor.
fn adaptive<F: FnMut(f64) -> f64>(f: &mut Integrand<F>, a: f64, b: f64, tol: f64, abs_target: f64) -> Result<Estimate> {
    let tol = tol.max(100.0 * f64::EPSILON);
    let first = kronrod21(f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, est: first, depth: 0 });
    let mut settled = Estimate::default();
    let mut total = first;
    let mut panels = 1usize;
    loop {
        if total.error <= (tol * total.l1).max(abs_target) || total.error == 0.0 {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        let at_floor = worst.est.error <= 100.0 * f64::EPSILON * worst.est.l1;
        if worst.depth >= MAX_DEPTH || at_floor || mid <= worst.a || mid >= worst.b {
            settled.add(worst.est);
            continue;
        }
        if panels >= MAX_PANELS {
            heap.push(worst);
            break;
        }
        let left = kronrod21(f, worst.a, mid)?;
        let right = kronrod21(f, mid, worst.b)?;
        panels += 1;
        total.value += left.value + right.value - worst.est.value;
        total.error += left.error + right.error - worst.est.error;
        total.l1 += left.l1 + right.l1 - worst.est.l1;
        for (lo, hi, est) in [(worst.a, mid, left), (mid, worst.b, right)] {
            heap.push(Panel { a: lo, b: hi, est, depth: worst.depth + 1 });
        }
    }
    // Re-sum from the panels to shed the drift of the running updates.
    let mut out = settled;
    for p in heap.iter() {
        out.add(p.est);
    }
    let all_at_floor = heap.is_empty();
    if out.error <= (tol * out.l1).max(abs_target) || out.error == 0.0 || all_at_floor {
        Ok(out)
    } else {
        Err(Error::Quadrature { a, b, estimate: out.value, error: out.error })
    }
}

/// Geometric panels `[a + w 2^-k, a + w 2^-(k-1)]` marching toward `a`.
fn geometric_toward_lower<F: FnMut(f64) -> f64>(f: &mut Integrand<F>, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    let w = b - a;
    let mut acc = Estimate::default();
    let mut prev: Option<f64> = None;
    let mut hi = b;
    let mut remainder = f64::INFINITY;
    for k in 1..=MAX_GEOMETRIC_PANELS {
        let lo = a + w * 0.5.powi(k as i32);
        if lo <= a || lo >= hi {
            // Out of floating-point resolution next to `a` (only possible when
            // `a ≠ 0`): accept a geometrically converging sum with its
            // extrapolated remainder as the error.
            if remainder.is_finite() && acc.l1.is_finite() && remainder <= 1e-6 * acc.l1 {
                acc.error += remainder;
                return Ok(acc);
            }
            break;
        }
        let p = adaptive(f, lo, hi, tol, tol * acc.l1)?;
        acc.add(p);
        hi = lo;
        if let Some(q) = prev {
            if p.l1 == 0.0 && q == 0.0 {
                return Ok(acc);
            }
            let r = p.l1 / q;
            remainder = if r < 1.0 { p.l1 * r / (1.0 - r) } else { f64::INFINITY };
            if remainder <= tol * acc.l1 {
                acc.error += remainder;
                return Ok(acc);
            }
        }
        prev = Some(p.l1);
    }
    Err(Error::Quadrature { a, b, estimate: acc.value, error: f64::INFINITY })
}

fn finite<F: FnMut(f64) -> f64>(f: &mut Integrand<F>, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "interval",
            detail: alloc::format!("endpoints must be finite, got [{a}, {b}]"),
        });
    }
    if a == b {
        return Ok(Estimate::default());
    }
    if a > b {
        let e = finite(f, b, a, tol)?;
        return Ok(Estimate { value: -e.value, ..e });
    }
    match (f.singular_lower, f.singular_upper) {
        (false, false) => adaptive(f, a, b, tol, 0.0),
        (true, false) => geometric_toward_lower(f, a, b, tol),
        (false, true) => {
            let mut flipped = Integrand::new(|z: f64| (f.f)(-z));
            geometric_toward_lower(&mut flipped, -b, -a, tol)
        }
        (true, true) => {
            let mid = 0.5 * (a + b);
            let mut est = {
                let mut left = Integrand { f: &mut f.f, singular_lower: true, singular_upper: false };
                geometric_toward_lower(&mut left, a, mid, tol)?
            };
            let mut right = Integrand::new(|z: f64| (f.f)(-z));
            est.add(geometric_toward_lower(&mut right, -b, -mid, tol)?);
            Ok(est)
        }
    }
}

/// `∫_a^b f` to within `tol · ∫_a^b |f|`, never evaluating `f` at `a` or `b`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: Integrand<F>, a: f64, b: f64, tol: f64) -> Result<f64> {
    finite(&mut f, a, b, tol).map(|e| e.value)
}

/// `∫_a^b f` (no endpoint singularities) to within `max(tol·∫|f|, abs_target)`,
/// for a piece of a larger integral whose mass sets the absolute scale.
pub fn integrate_piece<F: FnMut(f64) -> f64>(
    mut f: Integrand<F>,
    a: f64,
    b: f64,
    tol: f64,
    abs_target: f64,
) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "interval",
            detail: alloc::format!("endpoints must be finite, got [{a}, {b}]"),
        });
    }
    match a.partial_cmp(&b) {
        Some(Ordering::Less) => adaptive(&mut f, a, b, tol, abs_target),
        Some(Ordering::Greater) => adaptive(&mut f, b, a, tol, abs_target).map(|e| Estimate { value: -e.value, ..e }),
        _ => Ok(Estimate::default()),
    }
}

/// Like [`integrate`] but returns the full [`Estimate`].
pub fn integrate_estimate<F: FnMut(f64) -> f64>(mut f: Integrand<F>, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    finite(&mut f, a, b, tol)
}

fn upper_tail<F: FnMut(f64) -> f64>(
    f: &mut Integrand<F>,
    a: f64,
    tol: &Tolerances,
    decay_hint: Option<f64>,
) -> Result<TailEstimate> {
    let mut width = match decay_hint {
        Some(rate) if rate.is_finite() && rate > 0.0 => (1.0 / rate).clamp(1e-6, 1e6),
        _ => 1.0,
    };
    let mut lo = a;
    let mut acc = Estimate::default();
    let mut prev_l1 = f64::INFINITY;
    for k in 0..MAX_DOUBLINGS {
        let hi = lo + width;
        let singular = k == 0 && f.singular_lower;
        let p = if singular {
            geometric_toward_lower(f, lo, hi, tol.quad_tol)?
        } else {
            adaptive(f, lo, hi, tol.quad_tol, tol.quad_tol * acc.l1)?
        };
        acc.add(p);
        let decaying = p.l1 <= prev_l1;
        if k > 0 && decaying && p.l1 <= tol.tail_tol * acc.l1 {
            return Ok(TailEstimate { value: acc.value, tail_bound: p.l1, l1: acc.l1 });
        }
        prev_l1 = p.l1;
        lo = hi;
        width *= 2.0;
    }
    Err(Error::TailDivergence { a, estimate: acc.value })
}

/// `∫_a^∞ f` by doubling panels `[a, a+Δ], [a+Δ, a+3Δ], …` until the newest
/// panel carries at most `tail_tol` of the accumulated L1 mass.
///
/// `decay_hint` is an exponential decay rate of `f`; it sets `Δ = 1/rate`.
pub fn integrate_upper_tail<F: FnMut(f64) -> f64>(
    mut f: Integrand<F>,
    a: f64,
    tol: &Tolerances,
    decay_hint: Option<f64>,
) -> Result<TailEstimate> {
    upper_tail(&mut f, a, tol, decay_hint)
}

/// `∫_{-∞}^b f`, the mirror image of [`integrate_upper_tail`].
pub fn integrate_lower_tail<F: FnMut(f64) -> f64>(
    f: Integrand<F>,
    b: f64,
    tol: &Tolerances,
    decay_hint: Option<f64>,
) -> Result<TailEstimate> {
    let Integrand { f: mut inner, singular_upper, .. } = f;
    let mut mirrored = Integrand { f: move |z: f64| inner(-z), singular_lower: singular_upper, singular_upper: false };
    upper_tail(&mut mirrored, -b, tol, decay_hint)
}

/// Samples `n` evenly spaced points of `[a, b]` (both ends included).
pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => (0..n).map(|i| a + (b - a) * (i as f64) / ((n - 1) as f64)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn constant_integrand() {
        let v = integrate(Integrand::new(|_| 2.0), 0.0, 3.0, 1e-10).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_square_root_singularity() {
        let v = integrate(Integrand::new(|z: f64| 1.0 / z.sqrt()).singular_at_lower(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        let w =
            integrate(Integrand::new(|z: f64| 1.0 / (1.0 - z).sqrt()).singular_at_upper(), 0.0, 1.0, 1e-12).unwrap();
        // Next to a nonzero endpoint the grid runs out at one ulp, leaving
        // roughly 2·sqrt(ulp) of the mass unresolved.
        assert!((w - 2.0).abs() < 1e-7, "{w}");
    }

    #[test]
    fn both_endpoints_singular() {
        // ∫_0^1 (z(1-z))^{-1/2} dz = π
        let v = integrate(
            Integrand::new(|z: f64| 1.0 / (z * (1.0 - z)).sqrt()).singular_at_lower().singular_at_upper(),
            0.0,
            1.0,
            1e-12,
        )
        .unwrap();
        assert!((v - core::f64::consts::PI).abs() < 1e-7, "{v}");
    }

    #[test]
    fn reversed_interval_negates() {
        let f = |z: f64| z * z;
        let a = integrate(Integrand::new(f), 0.0, 2.0, 1e-12).unwrap();
        let b = integrate(Integrand::new(f), 2.0, 0.0, 1e-12).unwrap();
        assert!((a + b).abs() < 1e-14);
    }

    #[test]
    fn exponential_tail() {
        let t = integrate_upper_tail(Integrand::new(|z: f64| (-z).exp()), 0.0, &tol(), None).unwrap();
        assert!((t.value - 1.0).abs() < 1e-12, "{}", t.value);
        assert!(t.tail_bound < 1e-12);
    }

    #[test]
    fn gaussian_lower_tail() {
        let t = integrate_lower_tail(Integrand::new(|z: f64| (-z * z).exp()), 0.0, &tol(), None).unwrap();
        let expect = 0.5 * core::f64::consts::PI.sqrt();
        assert!((t.value - expect).abs() < 1e-12);
    }

    #[test]
    fn non_decaying_tail_is_reported() {
        let r = integrate_upper_tail(Integrand::new(|_| 1.0), 0.0, &tol(), None);
        assert!(matches!(r, Err(Error::TailDivergence { .. })));
    }

    #[test]
    fn divergent_singularity_is_reported() {
        let r = integrate(Integrand::new(|z: f64| 1.0 / z).singular_at_lower(), 0.0, 1.0, 1e-10);
        assert!(r.is_err(), "{r:?}");
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = integrate(Integrand::new(|z: f64| if z > 0.5 { f64::NAN } else { 1.0 }), 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::ModelEvaluation { .. })));
    }

    #[test]
    fn polynomial_exact_on_one_panel() {
        let e = integrate_estimate(Integrand::new(|z: f64| z.powi(20)), -1.0, 1.0, 1e-14).unwrap();
        assert!((e.value - 2.0 / 21.0).abs() < 1e-15);
    }
}
