//! Numerical integration.
//!
//! [`integrate`] is globally adaptive 7/15-point Gauss–Kronrod: the panel
//! with the largest error estimate is bisected until the summed estimate
//! meets the tolerance. [`tanh_sinh`] is an independent double-exponential
//! rule used to cross-check it. Half-lines are mapped onto `[0, 1)` with
//! `x = a + s/(1 - s)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-13, rel: 1e-11, max_panels: 4000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
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
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Panel { a, b, value: k * h, error: ((k - g) * h).abs() }
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]`.
pub fn integrate_with<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("finite limits required, got [{a}, {b}]")));
    }
    let first = kronrod15(&f, a, b);
    let (mut value, mut error) = (first.value, first.error);
    let mut heap = BinaryHeap::from([first]);
    while error > tol.abs.max(tol.rel * value.abs()) {
        if !value.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        if heap.len() >= tol.max_panels {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] after {} panels (error {error:e})",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Estimate { value, error })
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate_with(f, a, b, Tolerance::default()).map(|e| e.value)
}

/// `∫_a^∞ f`, through `x = a + s/(1-s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64) -> Result<f64> {
    integrate(
        |s| {
            let one_minus = 1.0 - s;
            let v = f(a + s / one_minus) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
    )
}

/// Tanh-sinh quadrature over `[a, b]`, halving the step until two successive
/// levels agree to `tol` (relative).
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    use std::f64::consts::FRAC_PI_2;
    let d = 0.5 * (b - a);
    let t_max = 4.5;
    // Node at parameter t: offset from the nearest endpoint is computed
    // directly so that points close to the ends do not lose precision.
    let term = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = d * FRAC_PI_2 * t.cosh() / (ch * ch);
        let gap = d * 2.0 / (1.0 + (2.0 * u.abs()).exp()); // d * (1 - tanh|u|)
        let x = if u >= 0.0 { b - gap } else { a + gap };
        if gap <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum = term(0.0);
    let mut t = h;
    while t <= t_max {
        sum += term(t) + term(-t);
        t += h;
    }
    let mut prev = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        let mut t = h;
        while t <= t_max {
            sum += term(t) + term(-t);
            t += 2.0 * h;
        }
        let cur = sum * h;
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!("tanh-sinh did not settle on [{a}, {b}]")))
}

/// Cumulative integrals of `f` from `a` to each of the (ascending) points.
pub fn cumulative<F: Fn(f64) -> f64>(f: F, a: f64, points: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    let mut left = a;
    for &x in points {
        if x < left {
            return Err(Error::Quadrature("cumulative needs ascending points".into()));
        }
        acc += integrate_with(&f, left, x, Tolerance { abs: 1e-15, ..Tolerance::default() })?.value;
        out.push(acc);
        left = x;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_gaussians() {
        assert!((integrate(|x| x * x, 0.0, 3.0).unwrap() - 9.0).abs() < 1e-12);
        let g = integrate_to_infinity(|x| (-x * x / 2.0).exp(), 0.0).unwrap();
        assert!((g - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} = 2
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
        let t = tanh_sinh(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((t - 2.0).abs() < 1e-10, "{t}");
    }

    #[test]
    fn tanh_sinh_smooth() {
        let v = tanh_sinh(|x| x.exp(), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn cumulative_matches_closed_form() {
        let pts = [0.1, 0.5, 0.5, 2.0];
        let c = cumulative(|x| x.cos(), 0.0, &pts).unwrap();
        for (x, v) in pts.iter().zip(c) {
            assert!((v - x.sin()).abs() < 1e-13);
        }
    }
}
