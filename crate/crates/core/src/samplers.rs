//! Grid samplers for the processes around the Vervaat transform.
//!
//! Every sampler is exact at the grid points: Brownian pieces are built from
//! independent Gaussian increments, Bessel(3) bridges as norms of
//! three-dimensional Brownian bridges, meanders as Bessel(3) bridges to a
//! Rayleigh endpoint. The direct Vervaat routes draw the minimum of every
//! cell and the time of the global minimum from their exact laws (see
//! [`vervaat_exact_min`]), so they too are exact on their shifted grid.
//!
//! Samplers compute in `f64` and convert to the requested [`Scalar`] at the end.

use std::f64::consts::FRAC_PI_2;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::path::{vervaat_grid, SampledPath, SplitIndex};
use crate::rng::RngStream;
use crate::scalar::Scalar;

fn to_path<T: Scalar>(values: Vec<f64>, duration: f64) -> SampledPath<T> {
    SampledPath::new_unchecked(values.into_iter().map(T::of).collect(), T::of(duration))
}

fn check_grid(n: usize) {
    assert!(n >= 2, "grid size must be at least 2, got {n}");
}

fn grid_times(n: usize, duration: f64) -> Vec<f64> {
    (0..=n).map(|i| duration * i as f64 / n as f64).collect()
}

/// Standard Brownian bridge `0 -> 0` over `[0, len]` at the ascending `times`.
fn bridge_at(times: &[f64], len: f64, rng: &mut RngStream) -> Vec<f64> {
    let mut w = Vec::with_capacity(times.len());
    let (mut t_prev, mut acc) = (0.0, 0.0);
    for &t in times {
        acc += (t - t_prev).max(0.0).sqrt() * rng.normal();
        w.push(acc);
        t_prev = t;
    }
    let end = acc + (len - t_prev).max(0.0).sqrt() * rng.normal();
    times.iter().zip(w).map(|(&t, v)| v - t / len * end).collect()
}

/// Bessel(3) bridge from `x` to `y` over `[0, len]` at the ascending `times`:
/// the norm of a 3-d Brownian bridge from `(x, 0, 0)` to `y·u`. Conditioning
/// on the endpoint norm leaves the direction `u` von Mises–Fisher with
/// concentration `xy/len` about the first axis; it is drawn first.
pub fn bes3_bridge_at(x: f64, y: f64, len: f64, times: &[f64], rng: &mut RngStream) -> Vec<f64> {
    let (e1, e2) = if x * y > 0.0 {
        let w = vmf_cosine(x * y / len, rng);
        (y * w, y * (1.0 - w * w).max(0.0).sqrt())
    } else {
        (y, 0.0)
    };
    let b1 = bridge_at(times, len, rng);
    let b2 = bridge_at(times, len, rng);
    let b3 = bridge_at(times, len, rng);
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            if t <= 0.0 {
                x
            } else if t >= len {
                y
            } else {
                let c1 = x + (e1 - x) * t / len + b1[k];
                let c2 = e2 * t / len + b2[k];
                (c1 * c1 + c2 * c2 + b3[k] * b3[k]).sqrt()
            }
        })
        .collect()
}

/// Cosine of the angle to the mean direction for the von Mises–Fisher law on
/// the 2-sphere, by inversion: `1 + ln(u + (1-u) e^{-2κ}) / κ`.
fn vmf_cosine(kappa: f64, rng: &mut RngStream) -> f64 {
    let u = rng.uniform();
    let w = 1.0 + (u + (1.0 - u) * (-2.0 * kappa).exp()).ln() / kappa;
    w.clamp(-1.0, 1.0)
}

/// Meander at the ascending `times` in `[0, 1]`: a Bessel(3) bridge from 0 to
/// a Rayleigh endpoint `sqrt(2 E)`. The endpoint is returned as well.
fn meander_at(times: &[f64], rng: &mut RngStream) -> (Vec<f64>, f64) {
    let rho = (2.0 * rng.exponential()).sqrt();
    (bes3_bridge_at(0.0, rho, 1.0, times, rng), rho)
}

pub fn sample_bm<T: Scalar>(n: usize, rng: &mut RngStream) -> SampledPath<T> {
    check_grid(n);
    to_path(bm_values(n, 1.0, rng), 1.0)
}

fn bm_values(n: usize, duration: f64, rng: &mut RngStream) -> Vec<f64> {
    let sd = (duration / n as f64).sqrt();
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for _ in 0..n {
        acc += sd * rng.normal();
        out.push(acc);
    }
    out
}

fn bridge_values(lambda: f64, duration: f64, n: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut b = bm_values(n, duration, rng);
    let end = b[n];
    for (i, v) in b.iter_mut().enumerate() {
        *v += i as f64 / n as f64 * (lambda - end);
    }
    b[n] = lambda;
    b
}

/// Brownian bridge from 0 to `lambda` over `[0, duration]`.
pub fn sample_bridge<T: Scalar>(lambda: f64, duration: f64, n: usize, rng: &mut RngStream) -> SampledPath<T> {
    check_grid(n);
    to_path(bridge_values(lambda, duration, n, rng), duration)
}

pub fn sample_bessel3_bridge<T: Scalar>(x: f64, y: f64, duration: f64, n: usize, rng: &mut RngStream) -> SampledPath<T> {
    check_grid(n);
    to_path(bes3_bridge_at(x, y, duration, &grid_times(n, duration), rng), duration)
}

/// Excursion of length `duration`, as the Bessel(3) bridge `0 -> 0`.
pub fn sample_excursion<T: Scalar>(duration: f64, n: usize, rng: &mut RngStream) -> SampledPath<T> {
    sample_bessel3_bridge(0.0, 0.0, duration, n, rng)
}

/// Excursion of length `duration`, as the Vervaat transform of a bridge `0 -> 0`.
pub fn sample_excursion_vervaat<T: Scalar>(duration: f64, n: usize, rng: &mut RngStream) -> SampledPath<T> {
    check_grid(n);
    vervaat_exact_min(bridge_values(0.0, duration, n, rng), duration, rng).pin_last(0.0).convert().path
}

/// First passage bridge from 0 to `lambda < 0` over `[0, duration]`:
/// `λ + ` (Bessel(3) bridge `|λ| -> 0`).
pub fn sample_fpb<T: Scalar>(lambda: f64, duration: f64, n: usize, rng: &mut RngStream) -> SampledPath<T> {
    check_grid(n);
    assert!(lambda < 0.0, "first passage bridges need lambda < 0");
    let v = bes3_bridge_at(lambda.abs(), 0.0, duration, &grid_times(n, duration), rng);
    let mut out: Vec<f64> = v.into_iter().map(|r| lambda + r).collect();
    out[0] = 0.0;
    out[n] = lambda;
    to_path(out, duration)
}

pub fn sample_meander<T: Scalar>(n: usize, rng: &mut RngStream) -> SampledPath<T> {
    check_grid(n);
    to_path(meander_at(&grid_times(n, 1.0), rng).0, 1.0)
}

/// Vervaat transform of a Brownian bridge ending at `lambda`, with the
/// minimum located on a sub-grid.
pub fn sample_vervaat_bridge_direct<T: Scalar>(lambda: f64, n: usize, rng: &mut RngStream) -> SampledPath<T> {
    sample_vervaat_bridge_with_min(lambda, n, rng).path
}

/// As [`sample_vervaat_bridge_direct`], keeping the minimising time and the
/// wrap point.
pub fn sample_vervaat_bridge_with_min<T: Scalar>(lambda: f64, n: usize, rng: &mut RngStream) -> VervaatSample<T> {
    check_grid(n);
    vervaat_exact_min(bridge_values(lambda, 1.0, n, rng), 1.0, rng).pin_last(lambda).convert()
}

/// `vervaat_grid(sample_bridge(..))`: the minimum snapped to the grid. Kept
/// for comparison; its marginals carry an `O(N^{-1/2})` bias.
pub fn sample_vervaat_bridge_snapped<T: Scalar>(lambda: f64, n: usize, rng: &mut RngStream) -> SampledPath<T> {
    vervaat_grid(&sample_bridge(lambda, 1.0, n, rng))
}

/// Vervaat transform of Brownian motion on `[0, 1]`, minimum on a sub-grid.
pub fn sample_vervaat_bm_direct<T: Scalar>(n: usize, rng: &mut RngStream) -> SampledPath<T> {
    check_grid(n);
    let x = bm_values(n, 1.0, rng);
    let end = x[n];
    vervaat_exact_min(x, 1.0, rng).pin_last(end).convert().path
}

/// A piece of a decomposed path, sampled at `times` (relative to the start of
/// the piece, both ends included).
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Piece {
    pub fn duration(&self) -> f64 {
        *self.times.last().expect("pieces are nonempty")
    }

    /// Value at time `t`: exact when `t` is a sample time, linear
    /// interpolation otherwise.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(k) => self.values[k],
            Err(0) => self.values[0],
            Err(k) if k >= self.times.len() => self.values[self.values.len() - 1],
            Err(k) => {
                let (t0, t1) = (self.times[k - 1], self.times[k]);
                let (v0, v1) = (self.values[k - 1], self.values[k]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The split of a Vervaat bridge at its first return `Z` to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionRecord {
    pub z: f64,
    /// First grid index at or after `Z`.
    pub split: SplitIndex,
    /// Excursion of length `Z`, sampled at the grid times before `Z` and at
    /// its quarter points `Z/4, Z/2, 3Z/4`.
    pub excursion: Piece,
    /// First passage bridge from 0 to `λ` of length `1 - Z`, at the grid
    /// times after `Z`.
    pub passage: Piece,
}

/// Fractions of the excursion length at which the decomposed sampler also
/// records the excursion piece.
pub const EXCURSION_PROBES: [f64; 3] = [0.25, 0.5, 0.75];

/// Vervaat bridge built from its decomposition at `Z`: `Z = G²/(λ² + G²)`,
/// then an excursion on `[0, Z]` and a first passage bridge to `λ` on `[Z, 1]`.
/// Both pieces are sampled exactly at the grid times they cover.
pub fn sample_vervaat_bridge_decomposed<T: Scalar>(
    lambda: f64,
    n: usize,
    rng: &mut RngStream,
) -> (SampledPath<T>, DecompositionRecord) {
    check_grid(n);
    assert!(lambda < 0.0, "the decomposition needs lambda < 0");
    let g = rng.normal();
    let z = g * g / (lambda * lambda + g * g);
    let grid = grid_times(n, 1.0);
    let split = grid.partition_point(|&t| t < z);

    let mut ex_times: Vec<f64> = grid[..split].to_vec();
    ex_times.extend(EXCURSION_PROBES.iter().map(|p| p * z));
    ex_times.push(z);
    ex_times.sort_by(f64::total_cmp);
    let ex_values = bes3_bridge_at(0.0, 0.0, z, &ex_times, rng);

    let mut fp_times = vec![0.0];
    fp_times.extend(grid[split..].iter().map(|t| t - z).filter(|&s| s > 0.0));
    let fp_values: Vec<f64> = bes3_bridge_at(lambda.abs(), 0.0, 1.0 - z, &fp_times, rng)
        .into_iter()
        .map(|r| lambda + r)
        .collect();

    let mut values = Vec::with_capacity(n + 1);
    for (t, v) in ex_times.iter().zip(&ex_values) {
        if *t < z && grid[..split].binary_search_by(|s| s.total_cmp(t)).is_ok() {
            values.push(*v);
        }
    }
    if grid.get(split) == Some(&z) {
        values.push(0.0);
    }
    values.extend(fp_values.iter().skip(1));
    debug_assert_eq!(values.len(), n + 1);
    values[0] = 0.0;
    values[n] = lambda;
    let mut fp_values = fp_values;
    fp_values[0] = 0.0;
    let record = DecompositionRecord {
        z,
        split,
        excursion: Piece { times: ex_times, values: ex_values },
        passage: Piece { times: fp_times, values: fp_values },
    };
    (to_path(values, 1.0), record)
}

/// Excursion plus the drift `λt`.
pub fn sample_drifting_excursion<T: Scalar>(lambda: f64, n: usize, rng: &mut RngStream) -> SampledPath<T> {
    check_grid(n);
    let mut v = bes3_bridge_at(0.0, 0.0, 1.0, &grid_times(n, 1.0), rng);
    for (i, x) in v.iter_mut().enumerate() {
        *x += lambda * i as f64 / n as f64;
    }
    v[n] = lambda;
    to_path(v, 1.0)
}

/// `V(B)` from Denisov's decomposition: `A = sin²(πU/2)` is arcsine, then two
/// independent meanders glued back to back,
/// `V_t = √A m1(t/A)` for `t <= A` and
/// `V_t = √A m1(1) + √(1-A) (m2((1-t)/(1-A)) - m2(1))` for `t >= A`.
/// The split index is the last grid index at or before `A`.
pub fn sample_meander_pair_denisov<T: Scalar>(n: usize, rng: &mut RngStream) -> (SampledPath<T>, SplitIndex) {
    check_grid(n);
    let a = (FRAC_PI_2 * rng.uniform()).sin().powi(2);
    let grid = grid_times(n, 1.0);
    let k = grid.partition_point(|&t| t <= a); // grid[..k] lie in [0, A]

    let mut t1: Vec<f64> = grid[..k].iter().map(|t| (t / a).min(1.0)).collect();
    t1.push(1.0);
    let (m1, rho1) = meander_at(&t1, rng);

    // second meander runs backwards from time 1
    let mut t2: Vec<f64> = grid[k..].iter().rev().map(|t| ((1.0 - t) / (1.0 - a)).min(1.0)).collect();
    t2.push(1.0);
    let (m2, rho2) = meander_at(&t2, rng);

    let (sa, sb) = (a.sqrt(), (1.0 - a).sqrt());
    let mut values = Vec::with_capacity(n + 1);
    values.extend(m1[..k].iter().map(|m| sa * m));
    let base = sa * rho1 - sb * rho2;
    let tail = m2[..n + 1 - k].iter().rev().map(|m| base + sb * m);
    values.extend(tail);
    values[0] = 0.0;
    (to_path(values, 1.0), k.saturating_sub(1))
}

/// A Vervaat transform computed by [`vervaat_exact_min`].
///
/// Besides the grid values it keeps the minimising time `tau` of the original
/// path and the value of the transform at time `duration - tau`, where the
/// original starting point lands. That point is exact and usually off the
/// grid; the hitting-time functionals below use it.
#[derive(Clone, Debug, PartialEq)]
pub struct VervaatSample<T> {
    pub path: SampledPath<T>,
    pub tau: f64,
    pub wrap_value: f64,
}

impl<T: Scalar> VervaatSample<T> {
    fn new(values: Vec<f64>, duration: f64, tau: f64, wrap_value: f64) -> Self {
        Self { path: to_path(values, duration), tau, wrap_value }
    }

    fn pin_last(self, v: f64) -> Self {
        let duration = self.path.duration();
        let mut values = self.path.into_values();
        *values.last_mut().expect("nonempty") = T::of(v);
        Self { path: SampledPath::new_unchecked(values, duration), ..self }
    }

    fn convert<U: Scalar>(self) -> VervaatSample<U> {
        let duration = self.path.duration().as_f64();
        let values = self.path.into_values().into_iter().map(|v| v.as_f64()).collect();
        VervaatSample::new(values, duration, self.tau, self.wrap_value)
    }

    pub fn wrap_time(&self) -> f64 {
        self.path.duration().as_f64() - self.tau
    }

    /// Grid points plus the wrap point, in time order.
    pub fn knots(&self) -> Vec<(f64, f64)> {
        let w = self.wrap_time();
        let n = self.path.n_steps();
        let mut out = Vec::with_capacity(n + 2);
        let mut placed = false;
        for (i, v) in self.path.values().iter().enumerate() {
            let t = self.path.time(i).as_f64();
            if !placed && t >= w {
                if t > w {
                    out.push((w, self.wrap_value));
                }
                placed = true;
            }
            out.push((t, v.as_f64()));
        }
        out
    }

    /// First time at or after the wrap point at which the piecewise linear
    /// path through the knots meets `level`. The transform cannot return to
    /// its starting level before the wrap, so for `level = 0` this is the
    /// first return time.
    pub fn first_return(&self, level: f64) -> Option<f64> {
        let w = self.wrap_time();
        let knots = self.knots();
        let start = knots.iter().position(|&(t, _)| t >= w)?;
        crossing(knots[start..].iter().copied(), level)
    }

    /// As [`first_return`](Self::first_return), with crossings between knots
    /// resolved by [`first_hit_bridged`].
    pub fn first_return_bridged(&self, level: f64, rng: &mut RngStream) -> Option<f64> {
        let w = self.wrap_time();
        let knots = self.knots();
        let start = knots.iter().position(|&(t, _)| t >= w)?;
        first_hit_bridged(knots[start..].iter().copied(), level, 1.0, rng)
    }

    /// As [`last_hit`](Self::last_hit), with crossings between knots resolved
    /// by [`first_hit_bridged`] run backwards in time.
    pub fn last_hit_bridged(&self, level: f64, rng: &mut RngStream) -> Option<f64> {
        let w = self.wrap_time();
        let knots = self.knots();
        let end = knots.iter().rposition(|&(t, _)| t <= w)?;
        first_hit_bridged(knots[..=end].iter().rev().copied(), level, 1.0, rng)
    }

    /// Last time at or before the wrap point at which the path meets `level`.
    /// For bridges ending above 0 the transform stays above its endpoint
    /// after the wrap, so `last_hit(λ)` is the last hitting time of `λ`.
    pub fn last_hit(&self, level: f64) -> Option<f64> {
        let w = self.wrap_time();
        let knots = self.knots();
        let end = knots.iter().rposition(|&(t, _)| t <= w)?;
        crossing(knots[..=end].iter().rev().copied(), level)
    }
}

/// Depth of the bisection used by [`first_hit_bridged`].
pub const HIT_DEPTH: u32 = 10;

/// First time along the knots (time order or reversed) at which a Brownian
/// path through them meets `level`.
///
/// Between knots the path is treated as a Brownian bridge with the variance
/// rate `sigma2`. A cell whose ends lie on the same side of `level` is crossed
/// with probability `exp(-2 d0 d1 / (sigma2 Δ))`; crossings are located by
/// bisecting with bridge midpoints down to `Δ / 2^HIT_DEPTH`. This removes the
/// `O(sqrt(Δ))` delay of reading hits off the grid.
pub fn first_hit_bridged(
    knots: impl IntoIterator<Item = (f64, f64)>,
    level: f64,
    sigma2: f64,
    rng: &mut RngStream,
) -> Option<f64> {
    let mut knots = knots.into_iter();
    let (mut t0, mut v0) = knots.next()?;
    if v0 == level {
        return Some(t0);
    }
    for (t1, v1) in knots {
        if let Some(t) = hit_in_cell((t0, v0), (t1, v1), level, sigma2, HIT_DEPTH, rng) {
            return Some(t);
        }
        (t0, v0) = (t1, v1);
    }
    None
}

fn hit_in_cell(
    a: (f64, f64),
    b: (f64, f64),
    level: f64,
    sigma2: f64,
    depth: u32,
    rng: &mut RngStream,
) -> Option<f64> {
    let (d0, d1) = (a.1 - level, b.1 - level);
    let span = (b.0 - a.0).abs() * sigma2;
    let certain = d1 == 0.0 || (d0 < 0.0) != (d1 < 0.0);
    if depth == 0 {
        if certain {
            return Some(a.0 + (b.0 - a.0) * d0 / (d0 - d1));
        }
        let p = (-2.0 * d0 * d1 / span).exp();
        return (rng.uniform() < p).then(|| 0.5 * (a.0 + b.0));
    }
    if !certain && 2.0 * d0 * d1 / span > 36.0 {
        return None;
    }
    let mid = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1) + (0.25 * span).sqrt() * rng.normal());
    hit_in_cell(a, mid, level, sigma2, depth - 1, rng).or_else(|| hit_in_cell(mid, b, level, sigma2, depth - 1, rng))
}

/// First meeting of `level` along a sequence of knots (time order or reversed).
fn crossing(mut knots: impl Iterator<Item = (f64, f64)>, level: f64) -> Option<f64> {
    let (mut t0, mut v0) = knots.next()?;
    if v0 == level {
        return Some(t0);
    }
    for (t1, v1) in knots {
        let (d0, d1) = (v0 - level, v1 - level);
        if d1 == 0.0 {
            return Some(t1);
        }
        if (d0 < 0.0) != (d1 < 0.0) {
            return Some(t0 + (t1 - t0) * d0 / (d0 - d1));
        }
        (t0, v0) = (t1, v1);
    }
    None
}

/// Minimum of a Brownian bridge from `a` to `b` over `len`, by inverting
/// `P(min <= y) = exp(-2 (a - y)(b - y) / len)`.
fn bridge_min(a: f64, b: f64, len: f64, rng: &mut RngStream) -> f64 {
    0.5 * (a + b - ((a - b).powi(2) + 2.0 * len * rng.exponential()).sqrt())
}

/// Inverse Gaussian with mean `mu` and shape `shape` (Michael, Schucany and Haas).
fn inverse_gaussian(mu: f64, shape: f64, rng: &mut RngStream) -> f64 {
    let y = rng.normal().powi(2);
    let my = mu * y;
    let x = mu + mu / (2.0 * shape) * (my - (4.0 * shape * my + my * my).sqrt());
    if rng.uniform() * (mu + x) <= mu {
        x
    } else {
        mu * mu / x
    }
}

/// Time of the minimum `m` of a Brownian bridge from `a` to `b` over `len`.
/// Its density is proportional to the product of the first-passage densities
/// of `a - m` in time `θ` and `b - m` in time `len - θ`; `V = θ / (len - θ)`
/// is a two-branch inverse Gaussian mixture.
fn bridge_argmin(a: f64, b: f64, m: f64, len: f64, rng: &mut RngStream) -> f64 {
    let c1 = (a - m).powi(2) / (2.0 * len);
    let c2 = (b - m).powi(2) / (2.0 * len);
    if c1 == 0.0 {
        return 0.0;
    }
    if c2 == 0.0 {
        return len;
    }
    let r = (c1 / c2).sqrt();
    let v = if rng.uniform() * (1.0 + r) < 1.0 {
        inverse_gaussian(r, 2.0 * c1, rng)
    } else {
        1.0 / inverse_gaussian(1.0 / r, 2.0 * c2, rng)
    };
    len * v / (1.0 + v)
}

/// Value at time `s` of a Bessel(3) bridge from `h` to 0 over `len`.
fn bes3_to_zero(h: f64, len: f64, s: f64, rng: &mut RngStream) -> f64 {
    let sd = (s * (len - s) / len).max(0.0).sqrt();
    let c1 = h * (1.0 - s / len) + sd * rng.normal();
    let c2 = sd * rng.normal();
    let c3 = sd * rng.normal();
    (c1 * c1 + c2 * c2 + c3 * c3).sqrt()
}

/// Value at time `s` of a Brownian bridge from `a` to `b` over `len` whose
/// minimum `m` is attained at `theta`: Bessel(3) bridges on either side.
fn bridge_given_min(a: f64, b: f64, len: f64, m: f64, theta: f64, s: f64, rng: &mut RngStream) -> f64 {
    if s <= theta {
        m + bes3_to_zero(a - m, theta, s, rng)
    } else {
        m + bes3_to_zero(b - m, len - theta, len - s, rng)
    }
}

/// Vervaat transform of the Brownian path whose grid values are `x`, with the
/// minimum placed exactly.
///
/// The minimum of every cell is drawn from the bridge-minimum law; the lowest
/// one is the global minimum, and its time `τ = j dt + θ` is drawn from the
/// law of the argmin given the minimum. Every other cell is then sampled at
/// offset `θ` given its own minimum, so the output holds exact path values at
/// the times `τ + i dt` (mod the duration). The last output value is
/// `x[N] - x[0]` exactly.
pub fn vervaat_exact_min(x: Vec<f64>, duration: f64, rng: &mut RngStream) -> VervaatSample<f64> {
    let n = x.len() - 1;
    let dt = duration / n as f64;
    let mins: Vec<f64> = (0..n).map(|c| bridge_min(x[c], x[c + 1], dt, rng)).collect();
    let j = (0..n).fold(0, |best, c| if mins[c] < mins[best] { c } else { best });
    let m = mins[j];
    let theta = bridge_argmin(x[j], x[j + 1], m, dt, rng);
    let shifted: Vec<f64> = (0..n)
        .map(|c| {
            if c == j {
                m
            } else {
                let at = bridge_argmin(x[c], x[c + 1], mins[c], dt, rng);
                bridge_given_min(x[c], x[c + 1], dt, mins[c], at, theta, rng)
            }
        })
        .collect();
    let carry = x[n] - x[0];
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let k = j + i;
        out.push(if k < n { shifted[k] - m } else { shifted[k - n] + carry - m });
    }
    out[0] = 0.0;
    out[n] = carry;
    VervaatSample::new(out, duration, j as f64 * dt + theta, x[n] - m)
}

/// The processes the `sample` command knows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Process {
    Bm,
    Bridge,
    Excursion,
    Fpb,
    Meander,
    VervaatDirect,
    VervaatDecomposed,
    DriftExcursion,
    Denisov,
}

impl Process {
    pub const ALL: [Process; 9] = [
        Process::Bm,
        Process::Bridge,
        Process::Excursion,
        Process::Fpb,
        Process::Meander,
        Process::VervaatDirect,
        Process::VervaatDecomposed,
        Process::DriftExcursion,
        Process::Denisov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Process::Bm => "bm",
            Process::Bridge => "bridge",
            Process::Excursion => "excursion",
            Process::Fpb => "fpb",
            Process::Meander => "meander",
            Process::VervaatDirect => "vervaat-direct",
            Process::VervaatDecomposed => "vervaat-decomposed",
            Process::DriftExcursion => "drift-excursion",
            Process::Denisov => "denisov",
        }
    }
}

impl FromStr for Process {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Process::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown process {s:?}")))
    }
}

/// What to sample: process, endpoint, duration and grid size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerSpec {
    pub process: Process,
    pub lambda: f64,
    pub duration: f64,
    pub n: usize,
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("grid size must be at least 2, got {}", self.n)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid(format!("duration must be positive, got {}", self.duration)));
        }
        let needs_negative =
            matches!(self.process, Process::Fpb | Process::VervaatDecomposed | Process::DriftExcursion);
        if needs_negative && !(self.lambda < 0.0) {
            return Err(invalid(format!("{} needs lambda < 0", self.process.name())));
        }
        let unit_only = !matches!(self.process, Process::Bridge | Process::Excursion | Process::Fpb);
        if unit_only && self.duration != 1.0 {
            return Err(invalid(format!("{} is defined on [0, 1] only", self.process.name())));
        }
        Ok(())
    }

    pub fn sample<T: Scalar>(&self, rng: &mut RngStream) -> Result<SampledPath<T>> {
        self.validate()?;
        let (l, d, n) = (self.lambda, self.duration, self.n);
        Ok(match self.process {
            Process::Bm => sample_bm(n, rng),
            Process::Bridge => sample_bridge(l, d, n, rng),
            Process::Excursion => sample_excursion(d, n, rng),
            Process::Fpb => sample_fpb(l, d, n, rng),
            Process::Meander => sample_meander(n, rng),
            Process::VervaatDirect => sample_vervaat_bridge_direct(l, n, rng),
            Process::VervaatDecomposed => sample_vervaat_bridge_decomposed(l, n, rng).0,
            Process::DriftExcursion => sample_drifting_excursion(l, n, rng),
            Process::Denisov => sample_meander_pair_denisov(n, rng).0,
        })
    }
}

/// Runs `f` on replicate streams `0..reps` of the family `(seed, label)` and
/// returns the results in replicate order, whatever the thread count.
pub fn run_replicates<R, F>(seed: u64, label: &str, reps: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(&mut RngStream) -> R + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|i| f(&mut RngStream::labelled(seed, label, i)))
        .collect()
}
