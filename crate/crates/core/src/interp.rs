//! Interpolants: shape-preserving piecewise cubics for tabulated costs and
//! Chebyshev expansions for caching smooth functions on an interval.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // f64 math in no_std builds; shadowed by std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Monotone piecewise cubic Hermite interpolant (Fritsch–Carlson slopes).
///
/// Monotone data stay monotone between knots; outside the table the end
/// cubics are continued linearly with the end slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidParameter {
                name: "table",
                detail: format!("need at least two (x, y) pairs of equal length, got {} and {}", n, ys.len()),
            });
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter { name: "table", detail: "entries must be finite".into() });
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "table",
                detail: "abscissae must be strictly increasing".into(),
            });
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = alloc::vec![0.0; n];
        if n == 2 {
            ds[0] = delta[0];
            ds[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            ds[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Pchip { xs, ys, ds })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.ds[0] * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.ds[n - 1] * (x - self.xs[n - 1]);
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ds[0];
        }
        if x >= self.xs[n - 1] {
            return self.ds[n - 1];
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.ys[i] + d10 * self.ds[i] + d01 * self.ys[i + 1] + d11 * self.ds[i + 1]
    }
}

// Three-point end slope, limited to preserve shape.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Chebyshev expansion of a function on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolates `f` at `n` Chebyshev points of the first kind.
    pub fn fit<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || n == 0 {
            return Err(Error::InvalidParameter {
                name: "chebyshev",
                detail: format!("need a < b and n > 0, got [{a}, {b}], n = {n}"),
            });
        }
        let nf = n as f64;
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            let t = (core::f64::consts::PI * (k as f64 + 0.5) / nf).cos();
            values.push(f(0.5 * (a + b) + 0.5 * (b - a) * t)?);
        }
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 =
                    (0..n).map(|k| values[k] * (core::f64::consts::PI * j as f64 * (k as f64 + 0.5) / nf).cos()).sum();
                if j == 0 {
                    s / nf
                } else {
                    2.0 * s / nf
                }
            })
            .collect();
        Ok(Chebyshev { a, b, coeffs })
    }

    /// Fits with doubling degree until the trailing coefficients fall below
    /// `tol` times the largest one; `None` if `max_n` points do not suffice.
    pub fn fit_adaptive<F: FnMut(f64) -> Result<f64>>(
        mut f: F,
        a: f64,
        b: f64,
        tol: f64,
        max_n: usize,
    ) -> Result<Option<Self>> {
        let mut n = 16;
        while n <= max_n {
            let c = Chebyshev::fit(&mut f, a, b, n)?;
            let scale = c.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let tail = c.coeffs[n - 3..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if tail <= tol * scale {
                return Ok(Some(c));
            }
            n *= 2;
        }
        Ok(None)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Clenshaw evaluation; valid on `[a, b]`.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }
}

/// Chebyshev pieces on a partition of `[a, b]`, refined by bisection until
/// each piece converges at a fixed degree; tolerates isolated kinks.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseChebyshev {
    breaks: Vec<f64>,
    pieces: Vec<Chebyshev>,
}

impl PiecewiseChebyshev {
    /// `tol` is relative to the largest coefficient sum seen. Pieces that
    /// shrink to `min_width` are accepted as they are, so a jump or kink
    /// costs about `log₂((b − a)/min_width)` extra pieces.
    pub fn fit_adaptive<F: FnMut(f64) -> Result<f64>>(
        mut f: F,
        a: f64,
        b: f64,
        tol: f64,
        degree: usize,
        min_width: f64,
    ) -> Result<Self> {
        let n = degree.max(3) + 1;
        let mut stack = alloc::vec![(a, b)];
        let mut done: Vec<(f64, Chebyshev)> = Vec::new();
        let mut scale = 0.0f64;
        while let Some((lo, hi)) = stack.pop() {
            let c = Chebyshev::fit(&mut f, lo, hi, n)?;
            scale = scale.max(c.coeffs.iter().map(|v| v.abs()).sum::<f64>());
            let tail = c.coeffs[n - 3..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if tail <= tol * scale || hi - lo <= min_width {
                done.push((lo, c));
            } else {
                let mid = 0.5 * (lo + hi);
                stack.push((lo, mid));
                stack.push((mid, hi));
            }
        }
        done.sort_by(|p, q| p.0.total_cmp(&q.0));
        let breaks = done.iter().map(|p| p.0).chain(core::iter::once(b)).collect();
        Ok(PiecewiseChebyshev { breaks, pieces: done.into_iter().map(|p| p.1).collect() })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    pub fn pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.breaks.partition_point(|&k| k <= x).clamp(1, self.pieces.len()) - 1;
        self.pieces[i].eval(x)
    }

    /// The antiderivative vanishing at the left end of the domain.
    pub fn antiderivative(&self) -> Self {
        let mut offset = 0.0;
        let pieces = self
            .pieces
            .iter()
            .map(|c| {
                let mut p = c.antiderivative();
                p.coeffs[0] += offset;
                offset = p.eval(p.b);
                p
            })
            .collect();
        PiecewiseChebyshev { breaks: self.breaks.clone(), pieces }
    }
}

impl Chebyshev {
    /// The antiderivative vanishing at `a`.
    pub fn antiderivative(&self) -> Self {
        let n = self.coeffs.len();
        let half = 0.5 * (self.b - self.a);
        // Halved-c₀ convention: a₀ = 2c₀.
        let a = |k: usize| match k {
            0 => 2.0 * self.coeffs[0],
            k if k < n => self.coeffs[k],
            _ => 0.0,
        };
        let mut coeffs = alloc::vec![0.0; n + 1];
        for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
            *c = half * (a(k - 1) - a(k + 1)) / (2.0 * k as f64);
        }
        let at_left: f64 = coeffs.iter().enumerate().skip(1).map(|(k, c)| if k % 2 == 0 { *c } else { -c }).sum();
        coeffs[0] = -at_left;
        Chebyshev { a: self.a, b: self.b, coeffs }
    }
}
