//! Deterministic path transforms.
//!
//! Ties in an argmin are broken towards the first index, with exact value
//! comparison. On grid paths every split point is a grid index: there is no
//! sub-grid interpolation of the minimum here (see
//! [`crate::samplers::vervaat_exact_min`] for the exact minimum of a sampled path).

use crate::error::{Error, Result};
use crate::path::grid::SampledPath;
use crate::path::walk::LatticeWalk;
use crate::path::SplitIndex;
use crate::scalar::Scalar;

/// First grid index attaining the minimum over all of `0..=N`.
pub fn argmin_first<T: Scalar>(path: &SampledPath<T>) -> SplitIndex {
    argmin_slice(path.values())
}

pub(crate) fn argmin_slice<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// `τ_n`: first index in `1..=n` attaining the minimum of the walk. Index 0 is
/// excluded, so a walk whose only minimum is at the origin gets `τ_n >= 1`.
pub fn argmin_walk(w: &LatticeWalk) -> SplitIndex {
    assert!(!w.is_empty(), "argmin of an empty walk");
    let values = w.values();
    1 + argmin_slice(&values[1..])
}

/// Discrete Vervaat transform, returned with the helper variable `K = n - τ_n`.
pub fn vervaat_discrete(w: &LatticeWalk) -> (LatticeWalk, SplitIndex) {
    let n = w.len();
    let tau = argmin_walk(w);
    let steps = w.steps();
    // V reads the increments cyclically starting right after τ_n.
    let rotated: Vec<i8> = (0..n).map(|i| steps[(tau + i) % n]).collect();
    (LatticeWalk::from_steps_unchecked(rotated), n - tau)
}

/// Cyclic rotation of the grid values at index `k`, with the terminal value
/// carried across the wrap so that the result starts at 0 and ends at
/// `f(N) - f(0)`.
pub(crate) fn rotate_at<T: Scalar>(values: &[T], k: usize) -> Vec<T> {
    let n = values.len() - 1;
    let base = values[k];
    let carry = values[n] - values[0];
    let mut out = Vec::with_capacity(n + 1);
    out.extend(values[k..].iter().map(|&v| v - base));
    out.extend(values[1..=k].iter().map(|&v| (v - values[0]) + (values[n] - base)));
    out[0] = T::zero();
    out[n] = carry;
    out
}

/// Vervaat transform of a grid path: rotation at the first grid argmin.
pub fn vervaat_grid<T: Scalar>(path: &SampledPath<T>) -> SampledPath<T> {
    let tau = argmin_first(path);
    SampledPath::new_unchecked(rotate_at(path.values(), tau), path.duration())
}

/// Discrete quantile transform: increments reordered by the stable sort of
/// `(w(j-1), j)`.
pub fn quantile_discrete(w: &LatticeWalk) -> LatticeWalk {
    let values = w.values();
    let mut order: Vec<usize> = (1..=w.len()).collect();
    order.sort_by_key(|&j| values[j - 1]);
    let steps = w.steps();
    LatticeWalk::from_steps_unchecked(order.into_iter().map(|j| steps[j - 1]).collect())
}

/// Cyclic shift `θ(f, u)` with `u` snapped to the nearest grid point. The
/// wrapped part carries `f(1)`, so `θ(f, u)` keeps the endpoint of `f` and
/// `θ(V(f), K/N)` recovers `f` for walks embedded on the grid.
pub fn shift_cyclic<T: Scalar>(path: &SampledPath<T>, u: T) -> SampledPath<T> {
    let k = path.index_of(u);
    SampledPath::new_unchecked(rotate_at(path.values(), k), path.duration())
}

/// Time reversal plus vertical shift: `out[i] = path[N - i] + lambda`.
pub fn dual_reverse<T: Scalar>(path: &SampledPath<T>, lambda: T) -> SampledPath<T> {
    let values = path.values().iter().rev().map(|&v| v + lambda).collect();
    SampledPath::new_unchecked(values, path.duration())
}

/// Grid indices treated as zeros: exact zeros, plus the later point of every
/// strict sign change. Index 0 is always included.
fn zero_indices<T: Scalar>(values: &[T]) -> Vec<usize> {
    let mut zeros = vec![0];
    for i in 1..values.len() {
        let (a, b) = (values[i - 1], values[i]);
        let crossing = (a < T::zero() && b > T::zero()) || (a > T::zero() && b < T::zero());
        if b == T::zero() || crossing {
            zeros.push(i);
        }
    }
    zeros
}

/// Swaps the excursion straddling `u` with the path on `[0, G_u]`.
pub fn exchange_straddling<T: Scalar>(path: &SampledPath<T>, u: T) -> Result<SampledPath<T>> {
    if path.first() != T::zero() {
        return Err(Error::InvalidArgument("exchange_straddling needs a path started at 0".into()));
    }
    let n = path.n_steps();
    let iu = path.index_of(u);
    let zeros = zero_indices(path.values());
    if zeros.binary_search(&iu).is_ok() {
        return Err(Error::DegenerateStraddle(u.as_f64()));
    }
    let g = zeros.iter().copied().filter(|&z| z <= iu).max().unwrap_or(0);
    let d = zeros.iter().copied().find(|&z| z >= iu).unwrap_or(n);
    let x = path.values();
    let len = d - g;
    let out = (0..=n)
        .map(|i| {
            if i < len {
                x[i + g]
            } else if i < d {
                x[i - len]
            } else {
                x[i]
            }
        })
        .collect();
    Ok(SampledPath::new_unchecked(out, path.duration()))
}

/// Smallest time strictly after `after` at which the linearly interpolated
/// path touches or crosses `level`. A touch at a grid point returns that grid
/// time; a strict sign change between two grid points returns the
/// interpolated crossing time.
pub fn first_return_time<T: Scalar>(path: &SampledPath<T>, level: T, after: T) -> Option<T> {
    let x = path.values();
    let n = path.n_steps();
    let dt = path.dt();
    let start = (0..=n).find(|&i| path.time(i) > after)?;
    for i in start.max(1)..=n {
        let d1 = x[i] - level;
        if d1 == T::zero() {
            return Some(path.time(i));
        }
        let d0 = x[i - 1] - level;
        if (d0 > T::zero() && d1 < T::zero()) || (d0 < T::zero() && d1 > T::zero()) {
            let frac = d0 / (d0 - d1);
            let t = path.time(i - 1) + frac * dt;
            if t > after {
                return Some(t);
            }
        }
    }
    None
}

/// Largest time strictly before `before` at which the interpolated path
/// touches or crosses `level` (mirror image of [`first_return_time`]).
pub fn last_hit_time<T: Scalar>(path: &SampledPath<T>, level: T, before: T) -> Option<T> {
    let reversed = dual_reverse(path, T::zero());
    let d = path.duration();
    first_return_time(&reversed, level, d - before).map(|t| d - t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk(values: &[i64]) -> LatticeWalk {
        let mut v = vec![0];
        v.extend_from_slice(values);
        LatticeWalk::from_values(&v).unwrap()
    }

    fn grid(values: &[f64]) -> SampledPath<f64> {
        SampledPath::from_values(values.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn argmin_examples() {
        assert_eq!(argmin_walk(&"-+".parse().unwrap()), 1);
        assert_eq!(argmin_walk(&"+-".parse().unwrap()), 2);
        assert_eq!(argmin_first(&grid(&[0.0, -1.0, -1.0, 0.0])), 1);
    }

    #[test]
    fn vervaat_discrete_examples() {
        let (v, k) = vervaat_discrete(&walk(&[-1, 0]));
        assert_eq!(v.values()[1..], [1, 0]);
        assert_eq!(k, 1);

        let (v, k) = vervaat_discrete(&walk(&[-1, -2]));
        assert_eq!(v.values()[1..], [-1, -2]);
        assert_eq!(k, 0);

        let (v, k) = vervaat_discrete(&walk(&[-1, -2, -1, -2]));
        assert_eq!(v.values()[1..], [1, 0, -1, -2]);
        assert_eq!(k, 2);
    }

    #[test]
    fn vervaat_grid_identity_when_minimal_at_start() {
        let p = grid(&[0.5, 1.0, 2.0, 0.7]);
        let v = vervaat_grid(&p);
        assert_eq!(v.values(), &[0.0, 0.5, 1.5, 0.19999999999999996]);
    }

    #[test]
    fn vervaat_grid_matches_discrete_on_embedded_walk() {
        let w = walk(&[-1, -2, -1, -2]);
        let v = vervaat_grid(&w.to_grid::<f64>());
        assert_eq!(v.values(), &[0.0, 1.0, 0.0, -1.0, -2.0]);
    }

    #[test]
    fn quantile_examples() {
        let q = quantile_discrete(&"-+".parse().unwrap());
        assert_eq!(q.values(), vec![0, 1, 0]);
        let up: LatticeWalk = "++++".parse().unwrap();
        assert_eq!(quantile_discrete(&up), up);
    }

    #[test]
    fn shift_cyclic_edges() {
        let p = grid(&[0.0, 0.3, -0.2, 0.4, -0.5]);
        assert_eq!(shift_cyclic(&p, 0.0), p);
        let full = shift_cyclic(&p, 1.0);
        assert_eq!(full.values()[0], 0.0);
        assert_eq!(full.last(), p.last());
        assert_eq!(full, p);
    }

    #[test]
    fn shift_inverts_vervaat_on_walks() {
        let w = walk(&[-1, -2, -1, -2]);
        let (v, k) = vervaat_discrete(&w);
        let back = shift_cyclic(&v.to_grid::<f64>(), k as f64 / 4.0);
        assert_eq!(back, w.to_grid());
    }

    #[test]
    fn dual_reverse_involution() {
        let p = grid(&[0.0, 0.25, -0.5, 0.75]);
        assert_eq!(dual_reverse(&dual_reverse(&p, 1.5), -1.5), p);
        let pal = grid(&[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(dual_reverse(&pal, 0.0), pal);
    }

    #[test]
    fn exchange_examples() {
        let positive = grid(&[0.0, 1.0, 2.0, 1.0, 0.5]);
        assert_eq!(exchange_straddling(&positive, 0.5).unwrap(), positive);

        let two = grid(&[0.0, 1.0, 0.0, -1.0, 0.0]);
        assert_eq!(exchange_straddling(&two, 0.25).unwrap(), two);
        let swapped = exchange_straddling(&two, 0.75).unwrap();
        assert_eq!(swapped.values(), &[0.0, -1.0, 0.0, 1.0, 0.0]);

        assert!(matches!(exchange_straddling(&two, 0.5), Err(Error::DegenerateStraddle(_))));
    }

    #[test]
    fn exchange_preserves_endpoint() {
        let p = grid(&[0.0, 1.0, -1.0, -2.0, 1.0, 0.5, -0.25]);
        for k in 1..6 {
            let u = k as f64 / 6.0;
            if let Ok(x) = exchange_straddling(&p, u) {
                assert_eq!(x.last(), p.last());
                assert_eq!(x.n_steps(), p.n_steps());
            }
        }
    }

    #[test]
    fn first_return_examples() {
        let ex = grid(&[0.0, 0.4, 0.9, 0.3, 0.0]);
        assert_eq!(first_return_time(&ex, 0.0, 0.0), Some(1.0));

        let v = walk(&[-1, 0, -1, -2]).to_grid::<f64>();
        assert_eq!(first_return_time(&v, -1.0, 0.0), Some(0.25));

        let above = grid(&[0.0, 1.0, 2.0]);
        assert_eq!(first_return_time(&above, -1.0, 0.0), None);

        let cross = grid(&[0.0, 1.0, -1.0]);
        assert_eq!(first_return_time(&cross, 0.0, 0.0), Some(0.75));
    }

    #[test]
    fn last_hit_mirrors_first_return() {
        let p = grid(&[0.0, 2.0, 0.5, 1.5, 1.0]);
        // crossings of 1.0: interpolated in (0, 0.25), (0.25, 0.5), (0.5, 0.75), terminal touch
        let t = last_hit_time(&p, 1.0, 1.0).unwrap();
        assert!((t - 0.625).abs() < 1e-12, "{t}");
    }
}
