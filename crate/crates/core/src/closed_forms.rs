//! Closed-form densities, kernels and moments, plus quadrature-backed CDFs.
//!
//! Conventions: `erf` is the standard error function, `erf(∞) = 1`.
//! Densities defined on an open interval return 0 outside it and at its
//! endpoints.

use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{cumulative, integrate, integrate_to_infinity, tanh_sinh};
use crate::scalar::Scalar;
use crate::special::{erf, mills_ratio, norm_cdf, norm_pdf};

fn check_negative(lambda: f64) -> Result<()> {
    if lambda < 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("lambda must be negative, got {lambda}")))
    }
}

/// Density of the first return time `Z` of the Vervaat bridge ending at
/// `lambda < 0`: `|λ| / sqrt(2π t (1-t)³) · exp(-λ² t / (2(1-t)))`.
pub fn f_z<T: Scalar>(lambda: T, t: T) -> T {
    if !(t > T::zero() && t < T::one()) {
        return T::zero();
    }
    let one_minus = T::one() - t;
    let two = T::of(2.0);
    lambda.abs() / (two * T::PI() * t * one_minus.powi(3)).sqrt()
        * (-(lambda * lambda) * t / (two * one_minus)).exp()
}

/// CDF of `Z`, from `Z = G²/(λ² + G²)`: `erf(|λ| sqrt(t/(1-t)) / √2)`.
pub fn cdf_z(lambda: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        erf(lambda.abs() * (t / (1.0 - t)).sqrt() / SQRT_2)
    }
}

/// Quadrature scheme selector for the integral-defined densities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    GaussKronrod,
    TanhSinh,
}

/// Density of `A = U·Z` (uniform on `[0, Z]`): `∫_a^1 f_Z(t)/t dt`.
pub fn f_a(lambda: f64, a: f64) -> Result<f64> {
    f_a_with(lambda, a, Scheme::GaussKronrod)
}

pub fn f_a_with(lambda: f64, a: f64, scheme: Scheme) -> Result<f64> {
    check_negative(lambda)?;
    if !(a > 0.0 && a < 1.0) {
        return Ok(0.0);
    }
    let integrand = |t: f64| f_z(lambda, t) / t;
    match scheme {
        Scheme::GaussKronrod => integrate(integrand, a, 1.0),
        Scheme::TanhSinh => tanh_sinh(integrand, a, 1.0, 1e-12),
    }
}

/// Density of `Ẑ` for `lambda > 0`: `f_Z(-λ, 1-t)`.
pub fn f_zhat<T: Scalar>(lambda: T, t: T) -> T {
    f_z(-lambda, T::one() - t)
}

pub fn cdf_zhat(lambda: f64, t: f64) -> f64 {
    1.0 - cdf_z(-lambda, 1.0 - t)
}

/// Probability that the Vervaat bridge ending at `lambda < 0` stays above the
/// line `λt` on `(0, 1)`: `1 - |λ| e^{λ²/2} ∫_{|λ|}^∞ e^{-s²/2} ds`. It equals `E Z`.
pub fn prob_above_drift(lambda: f64) -> Result<f64> {
    check_negative(lambda)?;
    Ok(1.0 - lambda.abs() * mills_ratio(lambda.abs()))
}

/// Density of the first return time given that the bridge stays above `λt`:
/// `t f_Z(t) / E Z`.
pub fn f_z_conditioned(lambda: f64, t: f64) -> Result<f64> {
    Ok(t * f_z(lambda, t) / prob_above_drift(lambda)?)
}

/// `P(s_l <= a)` for the last-segment slope of the convex minorant of the
/// Vervaat bridge: `1 + a e^{λ²/2} ∫_{|λ|}^∞ e^{-s²/2} ds` on `[λ, 0]`. The law
/// has an atom of mass `prob_above_drift(λ)` at `a = λ`.
pub fn slope_last_segment_cdf(lambda: f64, a: f64) -> Result<f64> {
    check_negative(lambda)?;
    if !(lambda..=0.0).contains(&a) {
        return Err(invalid(format!("slope {a} outside [{lambda}, 0]")));
    }
    Ok(1.0 + a * mills_ratio(lambda.abs()))
}

/// `E V(B)_t = sqrt(8/π)(√t + √(1-t) - 1)`.
pub fn mean_vb<T: Scalar>(t: T) -> T {
    (T::of(8.0) / T::PI()).sqrt() * (t.sqrt() + (T::one() - t).sqrt() - T::one())
}

/// `E V(B)_t² = 3t + ((4 - 8t)/π) arcsin √t - (4/π) sqrt(t(1-t))`.
pub fn second_moment_vb<T: Scalar>(t: T) -> T {
    let four = T::of(4.0);
    T::of(3.0) * t + (four - T::of(8.0) * t) / T::PI() * t.sqrt().asin()
        - four / T::PI() * (t * (T::one() - t)).sqrt()
}

/// `E B^me_t = sqrt(2/π)(sqrt(t(1-t)) + arcsin √t)`.
pub fn meander_mean<T: Scalar>(t: T) -> T {
    (T::of(2.0) / T::PI()).sqrt() * ((t * (T::one() - t)).sqrt() + t.sqrt().asin())
}

/// `E (B^me_t)² = 3t - t²`.
pub fn meander_m2<T: Scalar>(t: T) -> T {
    T::of(3.0) * t - t * t
}

/// `E B^me_t B^me_1 = 2√t`.
pub fn meander_cross<T: Scalar>(t: T) -> T {
    T::of(2.0) * t.sqrt()
}

/// Gaussian transition density `p_t(x, y)`.
pub fn p_kernel(t: f64, x: f64, y: f64) -> f64 {
    (-(x - y) * (x - y) / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// `q̃_t(x, y)`; `q̃_t(x, y) y² dy` is the Bessel(3) transition kernel. The
/// limits at `x = 0` or `y = 0` are taken analytically.
pub fn q_tilde(t: f64, x: f64, y: f64) -> f64 {
    let xy = x * y;
    let gauss = (-(x - y) * (x - y) / (2.0 * t)).exp() / (2.0 * PI * t).sqrt();
    if xy == 0.0 {
        return gauss * 2.0 / t;
    }
    gauss * -(-2.0 * xy / t).exp_m1() / xy
}

/// First hitting density of level `y > 0` by Brownian motion: `y/sqrt(2π t³) e^{-y²/(2t)}`.
pub fn g_kernel(t: f64, y: f64) -> f64 {
    y / (2.0 * PI * t.powi(3)).sqrt() * (-y * y / (2.0 * t)).exp()
}

pub fn arcsine_density(a: f64) -> f64 {
    if a > 0.0 && a < 1.0 {
        1.0 / (PI * (a * (1.0 - a)).sqrt())
    } else {
        0.0
    }
}

pub fn arcsine_cdf(a: f64) -> f64 {
    (2.0 / PI) * a.clamp(0.0, 1.0).sqrt().asin()
}

pub fn rayleigh_density(x: f64) -> f64 {
    if x > 0.0 {
        x * (-x * x / 2.0).exp()
    } else {
        0.0
    }
}

pub fn rayleigh_cdf(x: f64) -> f64 {
    if x > 0.0 {
        -(-x * x / 2.0).exp_m1()
    } else {
        0.0
    }
}

/// Marginal density of the meander at time `t`:
/// `t^{-3/2} x e^{-x²/(2t)} erf(x / sqrt(2(1-t)))`.
pub fn meander_marginal(t: f64, x: f64) -> f64 {
    if x <= 0.0 || t <= 0.0 {
        return 0.0;
    }
    let e = if t >= 1.0 { 1.0 } else { erf(x / (2.0 * (1.0 - t)).sqrt()) };
    t.powf(-1.5) * x * (-x * x / (2.0 * t)).exp() * e
}

/// Joint density of `(B^me_t, B^me_1)`:
/// `t^{-3/2} x e^{-x²/(2t)} (p_{1-t}(x, y) - p_{1-t}(x, -y))`.
pub fn meander_joint(t: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 || y <= 0.0 || t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    t.powf(-1.5) * x * (-x * x / (2.0 * t)).exp() * (p_kernel(1.0 - t, x, y) - p_kernel(1.0 - t, x, -y))
}

/// Marginal density at time `s` of the Bessel(3) bridge from `x` to `y` over
/// `[0, len]`: `q̃_s(x, r) r² q̃_{len-s}(r, y) / q̃_len(x, y)`.
pub fn bes3_bridge_marginal(x: f64, y: f64, len: f64, s: f64, r: f64) -> f64 {
    if r <= 0.0 || s <= 0.0 || s >= len {
        return 0.0;
    }
    q_tilde(s, x, r) * r * r * q_tilde(len - s, r, y) / q_tilde(len, x, y)
}

/// The 0 -> 0 Bessel(3) bridge over `[0, 1]` at time `t` is Maxwell with
/// scale `sqrt(t(1-t))`.
pub fn excursion_marginal_cdf(t: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let a = (t * (1.0 - t)).sqrt();
    let z = r / a;
    erf(z / SQRT_2) - FRAC_2_SQRT_PI / SQRT_2 * z * (-z * z / 2.0).exp()
}

/// CDF of the Bessel(3) bridge marginal when one endpoint is 0. The bridge is
/// then the norm of a 3-d Brownian bridge between `(x, 0, 0)` and `(y, 0, 0)`,
/// a Gaussian with mean `μ = x + (y - x)s/len` along one axis and variance
/// `σ² = s(len - s)/len` per coordinate, so
/// `P(R <= r) = Φ((r-μ)/σ) + Φ((r+μ)/σ) - 1 - (σ/μ)(φ((r-μ)/σ) - φ((r+μ)/σ))`.
pub fn bes3_bridge_cdf(x: f64, y: f64, len: f64, s: f64, r: f64) -> Result<f64> {
    if x * y != 0.0 {
        return Err(invalid("the closed-form Bessel(3) bridge CDF needs a zero endpoint"));
    }
    if r <= 0.0 {
        return Ok(0.0);
    }
    if s <= 0.0 || s >= len {
        let end = if s <= 0.0 { x } else { y };
        return Ok(if r >= end { 1.0 } else { 0.0 });
    }
    let mu = x + (y - x) * s / len;
    let sigma = (s * (len - s) / len).sqrt();
    if mu < 1e-6 * sigma {
        // Maxwell limit
        let z = r / sigma;
        return Ok(erf(z / SQRT_2) - FRAC_2_SQRT_PI / SQRT_2 * z * (-z * z / 2.0).exp());
    }
    let (a, b) = ((r - mu) / sigma, (r + mu) / sigma);
    Ok((norm_cdf(a) + norm_cdf(b) - 1.0 - sigma / mu * (norm_pdf(a) - norm_pdf(b))).clamp(0.0, 1.0))
}

pub fn bridge_marginal_cdf(lambda: f64, t: f64, x: f64) -> f64 {
    norm_cdf((x - lambda * t) / (t * (1.0 - t)).sqrt())
}

/// Conditional laws of the first return after `t0` for the Vervaat bridge,
/// given `V_{t0} = x0` and either an earlier return to 0 (`f1`) or positivity
/// on `(0, t0)` (`f2`). Both are normalised numerically on `(t0, 1)`.
#[derive(Clone, Debug)]
pub struct NonMarkov {
    pub lambda: f64,
    pub t0: f64,
    pub x0: f64,
    /// `∫ shape` and `∫ t·shape` over `(t0, 1)`.
    pub z1: f64,
    pub z2: f64,
}

impl NonMarkov {
    fn shape(&self, t: f64) -> f64 {
        if !(t > self.t0 && t < 1.0) {
            return 0.0;
        }
        let (s, u) = (t - self.t0, 1.0 - t);
        (s * u).powf(-1.5) * (-self.x0 * self.x0 / (2.0 * s) - self.lambda * self.lambda / (2.0 * u)).exp()
    }

    pub fn f1(&self, t: f64) -> f64 {
        self.shape(t) / self.z1
    }

    pub fn f2(&self, t: f64) -> f64 {
        t * self.shape(t) / self.z2
    }

    /// `c` in `f2(t) = c·t·f1(t)`.
    pub fn ratio_constant(&self) -> f64 {
        self.z1 / self.z2
    }

    /// The same law as `f1`, written as `g_{t-t0}(x0) g_{1-t}(|λ|) / g_{1-t0}(x0 + |λ|)`.
    pub fn f1_hitting_form(&self, t: f64) -> f64 {
        if !(t > self.t0 && t < 1.0) {
            return 0.0;
        }
        let l = self.lambda.abs();
        g_kernel(t - self.t0, self.x0) * g_kernel(1.0 - t, l) / g_kernel(1.0 - self.t0, self.x0 + l)
    }

    pub fn total_variation(&self) -> Result<f64> {
        Ok(0.5 * integrate(|t| (self.f1(t) - self.f2(t)).abs(), self.t0, 1.0)?)
    }
}

pub fn nonmarkov_densities(lambda: f64, t0: f64, x0: f64) -> Result<NonMarkov> {
    check_negative(lambda)?;
    if !(t0 > 0.0 && t0 < 1.0) || !(x0 > 0.0) {
        return Err(invalid(format!("need 0 < t0 < 1 and x0 > 0, got t0 = {t0}, x0 = {x0}")));
    }
    let mut nm = NonMarkov { lambda, t0, x0, z1: 1.0, z2: 1.0 };
    nm.z1 = integrate(|t| nm.shape(t), t0, 1.0)?;
    nm.z2 = integrate(|t| t * nm.shape(t), t0, 1.0)?;
    Ok(nm)
}

/// A named density with its support and a CDF (closed form when one is
/// available, quadrature otherwise).
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Z { lambda: f64 },
    A { lambda: f64 },
    Zhat { lambda: f64 },
    ZConditioned { lambda: f64 },
    Arcsine,
    Rayleigh,
    Meander { t: f64 },
    Excursion { t: f64 },
    Bes3Bridge { x: f64, y: f64, len: f64, s: f64 },
    NonMarkov1 { lambda: f64, t0: f64, x0: f64 },
    NonMarkov2 { lambda: f64, t0: f64, x0: f64 },
}

#[derive(Clone, Debug)]
pub struct DensitySpec {
    family: Family,
    lo: f64,
    hi: f64,
    nonmarkov: Option<NonMarkov>,
    total: f64,
}

impl DensitySpec {
    /// Builds the density and checks that it integrates to 1 within 1e-8.
    pub fn new(family: Family) -> Result<Self> {
        let (lo, hi) = match &family {
            Family::Z { lambda } | Family::A { lambda } | Family::ZConditioned { lambda } => {
                check_negative(*lambda)?;
                (0.0, 1.0)
            }
            Family::Zhat { lambda } => {
                if !(*lambda > 0.0) {
                    return Err(invalid(format!("Zhat needs lambda > 0, got {lambda}")));
                }
                (0.0, 1.0)
            }
            Family::Arcsine => (0.0, 1.0),
            Family::Rayleigh | Family::Meander { .. } | Family::Excursion { .. } => (0.0, f64::INFINITY),
            Family::Bes3Bridge { .. } => (0.0, f64::INFINITY),
            Family::NonMarkov1 { t0, .. } | Family::NonMarkov2 { t0, .. } => (*t0, 1.0),
        };
        let nonmarkov = match &family {
            Family::NonMarkov1 { lambda, t0, x0 } | Family::NonMarkov2 { lambda, t0, x0 } => {
                Some(nonmarkov_densities(*lambda, *t0, *x0)?)
            }
            _ => None,
        };
        let mut spec = Self { family, lo, hi, nonmarkov, total: 1.0 };
        let total = if let Family::Zhat { lambda } = spec.family {
            // mirrored so the endpoint singularity sits at 0
            integrate(|s| f_z(-lambda, s), 0.0, 1.0)?
        } else if hi.is_finite() {
            integrate(|x| spec.density(x), lo, hi)?
        } else {
            integrate_to_infinity(|x| spec.density(x), lo)?
        };
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::Quadrature(format!("{:?} integrates to {total}", spec.family)));
        }
        spec.total = total;
        Ok(spec)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn density(&self, x: f64) -> f64 {
        match &self.family {
            Family::Z { lambda } => f_z(*lambda, x),
            Family::A { lambda } => f_a(*lambda, x).unwrap_or(f64::NAN),
            Family::Zhat { lambda } => f_zhat(*lambda, x),
            Family::ZConditioned { lambda } => f_z_conditioned(*lambda, x).unwrap_or(f64::NAN),
            Family::Arcsine => arcsine_density(x),
            Family::Rayleigh => rayleigh_density(x),
            Family::Meander { t } => meander_marginal(*t, x),
            Family::Excursion { t } => bes3_bridge_marginal(0.0, 0.0, 1.0, *t, x),
            Family::Bes3Bridge { x: a, y, len, s } => bes3_bridge_marginal(*a, *y, *len, *s, x),
            Family::NonMarkov1 { .. } => self.nonmarkov.as_ref().map_or(f64::NAN, |n| n.f1(x)),
            Family::NonMarkov2 { .. } => self.nonmarkov.as_ref().map_or(f64::NAN, |n| n.f2(x)),
        }
    }

    fn closed_cdf(&self, x: f64) -> Option<f64> {
        match &self.family {
            Family::Z { lambda } => Some(cdf_z(*lambda, x)),
            Family::Zhat { lambda } => Some(cdf_zhat(*lambda, x)),
            Family::Arcsine => Some(arcsine_cdf(x)),
            Family::Rayleigh => Some(rayleigh_cdf(x)),
            Family::Excursion { t } => Some(excursion_marginal_cdf(*t, x)),
            Family::Bes3Bridge { x: a, y, len, s } => bes3_bridge_cdf(*a, *y, *len, *s, x).ok(),
            _ => None,
        }
    }

    /// CDF at each of the ascending `points`.
    pub fn cdf_sorted(&self, points: &[f64]) -> Result<Vec<f64>> {
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("cdf_sorted needs ascending points"));
        }
        if self.closed_cdf(self.lo).is_some() {
            return Ok(points.iter().map(|&x| self.closed_cdf(x).unwrap_or(f64::NAN)).collect());
        }
        let inside: Vec<f64> = points.iter().map(|&x| x.clamp(self.lo, self.hi)).collect();
        let cum = cumulative(|x| self.density(x), self.lo, &inside)?;
        Ok(cum.into_iter().map(|c| (c / self.total).clamp(0.0, 1.0)).collect())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(self.cdf_sorted(&[x])?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn f_z_value_and_normalisation() {
        assert!(close(f_z(-1.0, 0.5), 0.967_882_898_076_573_4, 1e-14));
        assert_eq!(f_z(-1.0, 0.0), 0.0);
        assert_eq!(f_z(-1.0, 1.0), 0.0);
        let total = integrate(|t| f_z(-1.0, t), 0.0, 1.0).unwrap();
        assert!(close(total, 1.0, 1e-10));
        assert!(close(cdf_z(-1.0, 0.3), integrate(|t| f_z(-1.0, t), 0.0, 0.3).unwrap(), 1e-10));
    }

    #[test]
    fn bes3_bridge_cdf_matches_quadrature() {
        for &(x, y, len, s) in &[(1.0, 0.0, 1.0, 0.5), (2.0, 0.0, 0.7, 0.2), (0.0, 0.0, 1.0, 0.3), (0.0, 1.2, 2.0, 1.9)] {
            for &r in &[0.1, 0.5, 1.0, 2.5] {
                let q = integrate(|u| bes3_bridge_marginal(x, y, len, s, u), 0.0, r).unwrap();
                assert!(close(bes3_bridge_cdf(x, y, len, s, r).unwrap(), q, 1e-9), "{x} {y} {len} {s} {r}");
            }
        }
        assert!(bes3_bridge_cdf(1.0, 1.0, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn f_z_single_precision() {
        assert!((f_z(-1.0f32, 0.5) - 0.967_882_9).abs() < 1e-6);
    }

    #[test]
    fn f_a_two_schemes_agree() {
        let gk = f_a(-1.0, 0.25).unwrap();
        let ts = f_a_with(-1.0, 0.25, Scheme::TanhSinh).unwrap();
        assert!(close(gk, ts, 1e-8), "{gk} vs {ts}");
        assert_eq!(f_a(-1.0, 1.0).unwrap(), 0.0);
        assert!(f_a(-1.0, 0.3).unwrap() > f_a(-1.0, 0.6).unwrap());
    }

    #[test]
    fn drift_probability_is_mean_of_z() {
        let p = prob_above_drift(-1.0).unwrap();
        assert!(close(p, 0.344_320_457_581_201_5, 1e-13));
        let ez = integrate(|t| t * f_z(-1.0, t), 0.0, 1.0).unwrap();
        assert!(close(p, ez, 1e-8));
        assert!(prob_above_drift(-1e-6).unwrap() > 0.999);
    }

    #[test]
    fn slope_cdf_values() {
        assert_eq!(slope_last_segment_cdf(-1.0, 0.0).unwrap(), 1.0);
        assert!(close(slope_last_segment_cdf(-1.0, -0.5).unwrap(), 0.672_160_228_790_600_8, 1e-12));
        let at_lambda = slope_last_segment_cdf(-1.0, -1.0).unwrap();
        assert!(close(at_lambda, prob_above_drift(-1.0).unwrap(), 1e-15));
        assert!(slope_last_segment_cdf(-1.0, -1.5).is_err());
    }

    #[test]
    fn moment_formulas() {
        assert_eq!(mean_vb(0.0), 0.0);
        assert!(close(mean_vb(1.0), 0.0, 1e-15));
        assert!(close(second_moment_vb(1.0), 1.0, 1e-15));
        assert!(close(mean_vb(0.5), 0.660_989_212_585_294_4, 1e-13));
        assert!(close(second_moment_vb(0.5), 0.863_380_227_632_418_2, 1e-13));
        assert!(close(mean_vb(0.2), mean_vb(0.8), 1e-15));
        assert!(close(meander_mean(0.5), 1.025_599_349_059_182_8, 1e-13));
        assert_eq!(meander_m2(1.0), 2.0);
        assert_eq!(meander_cross(1.0), 2.0);
        assert!(close(meander_cross(0.5), std::f64::consts::SQRT_2, 1e-15));
    }

    #[test]
    fn kernel_identities() {
        assert!(close(p_kernel(0.7, 0.3, 0.3), 1.0 / (2.0 * PI * 0.7).sqrt(), 1e-15));
        assert!(close(q_tilde(0.5, 0.0, 0.0), 2.0 / (2.0 * PI * 0.125f64).sqrt(), 1e-14));
        for &t in &[0.1, 0.5, 2.0] {
            for &y in &[0.01, 0.5, 1.0, 3.0] {
                let lhs = q_tilde(t, 0.0, y);
                let rhs = 2.0 / y * g_kernel(t, y);
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
                // the x -> 0 limit is continuous
                let near = q_tilde(t, 1e-9, y);
                assert!((near - lhs).abs() <= 1e-7 * lhs);
            }
        }
        let alive = integrate_to_infinity(|y| q_tilde(0.6, 0.0, y) * y * y, 0.0).unwrap();
        assert!(close(alive, 1.0, 1e-8));
    }

    #[test]
    fn meander_appendix_identities() {
        for &t in &[0.25, 0.5, 0.75] {
            let mass = integrate_to_infinity(|x| meander_marginal(t, x), 0.0).unwrap();
            assert!(close(mass, 1.0, 1e-8), "t={t} mass={mass}");
            let m1 = integrate_to_infinity(|x| x * meander_marginal(t, x), 0.0).unwrap();
            assert!(close(m1, meander_mean(t), 1e-6));
            let m2 = integrate_to_infinity(|x| x * x * meander_marginal(t, x), 0.0).unwrap();
            assert!(close(m2, meander_m2(t), 1e-6));
            let x = 0.8;
            let joint = integrate_to_infinity(|y| meander_joint(t, x, y), 0.0).unwrap();
            assert!(close(joint, meander_marginal(t, x), 1e-6));
        }
        assert!(close(meander_marginal(1.0, 1.3), rayleigh_density(1.3), 1e-15));
    }

    #[test]
    fn nonmarkov_shapes() {
        let nm = nonmarkov_densities(-1.0, 0.5, 1.0).unwrap();
        let c = nm.ratio_constant();
        for &t in &[0.55, 0.7, 0.9] {
            assert!(close(nm.f2(t) / nm.f1(t), c * t, 1e-8 * c));
            assert!(close(nm.f1(t), nm.f1_hitting_form(t), 1e-8 * nm.f1(t)));
        }
        assert!(nm.total_variation().unwrap() > 0.01);
    }

    #[test]
    fn density_specs_normalise() {
        for fam in [
            Family::Z { lambda: -1.0 },
            Family::A { lambda: -1.0 },
            Family::Zhat { lambda: 1.0 },
            Family::ZConditioned { lambda: -1.0 },
            Family::Arcsine,
            Family::Rayleigh,
            Family::Meander { t: 0.5 },
            Family::Excursion { t: 0.3 },
            Family::Bes3Bridge { x: 1.0, y: 0.0, len: 1.0, s: 0.5 },
            Family::NonMarkov1 { lambda: -1.0, t0: 0.5, x0: 1.0 },
            Family::NonMarkov2 { lambda: -1.0, t0: 0.5, x0: 1.0 },
        ] {
            DensitySpec::new(fam.clone()).unwrap_or_else(|e| panic!("{fam:?}: {e}"));
        }
    }

    #[test]
    fn closed_and_numeric_cdfs_agree() {
        let spec = DensitySpec::new(Family::Excursion { t: 0.4 }).unwrap();
        let pts = [0.1, 0.3, 0.5, 0.9];
        let closed = spec.cdf_sorted(&pts).unwrap();
        let numeric = cumulative(|r| bes3_bridge_marginal(0.0, 0.0, 1.0, 0.4, r), 0.0, &pts).unwrap();
        for (a, b) in closed.iter().zip(numeric) {
            assert!(close(*a, b, 1e-10));
        }
        assert!(close(arcsine_cdf(0.5), 0.5, 1e-15));
        assert!(close(arcsine_density(0.2), arcsine_density(0.8), 1e-15));
        let mean = integrate_to_infinity(|x| x * rayleigh_density(x), 0.0).unwrap();
        assert!(close(mean, (PI / 2.0).sqrt(), 1e-10));
    }
}
