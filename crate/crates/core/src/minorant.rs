//! Convex minorants of grid paths.
//!
//! The minorant is the lower convex hull of the grid points, found by one
//! monotone-chain scan. Collinear points are merged, so segment slopes are
//! strictly increasing and the segment count is a grid-resolution statistic.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::path::SampledPath;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct MinorantResult<T> {
    /// Grid indices of the vertices, from 0 to N.
    pub vertices: Vec<usize>,
    /// Slope of each segment in path units per unit time.
    pub slopes: Vec<T>,
}

impl<T: Scalar> MinorantResult<T> {
    pub fn n_segments(&self) -> usize {
        self.slopes.len()
    }

    pub fn last_slope(&self) -> T {
        *self.slopes.last().expect("a minorant has at least one segment")
    }

    /// Minorant values at every grid point of `path` (the path it was built from).
    pub fn evaluate(&self, path: &SampledPath<T>) -> Vec<T> {
        let x = path.values();
        let mut out = Vec::with_capacity(x.len());
        out.push(x[0]);
        for w in self.vertices.windows(2) {
            let (i, j) = (w[0], w[1]);
            let span = T::of_usize(j - i);
            for k in i + 1..=j {
                let frac = T::of_usize(k - i) / span;
                out.push(x[i] + (x[j] - x[i]) * frac);
            }
        }
        out
    }
}

/// Orientation of `(i, a) -> (j, b) -> (k, c)`; positive for a strict left turn.
fn turn<T: Scalar>(i: usize, a: T, j: usize, b: T, k: usize, c: T) -> T {
    T::of_usize(j - i) * (c - a) - (b - a) * T::of_usize(k - i)
}

pub fn convex_minorant<T: Scalar>(path: &SampledPath<T>) -> MinorantResult<T> {
    let x = path.values();
    let mut hull: Vec<usize> = Vec::with_capacity(64);
    for k in 0..x.len() {
        while hull.len() >= 2 {
            let (i, j) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if turn(i, x[i], j, x[j], k, x[k]) <= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let dt = path.dt();
    let slopes = hull
        .windows(2)
        .map(|w| (x[w[1]] - x[w[0]]) / (T::of_usize(w[1] - w[0]) * dt))
        .collect();
    MinorantResult { vertices: hull, slopes }
}

pub fn last_segment_slope<T: Scalar>(path: &SampledPath<T>) -> T {
    convex_minorant(path).last_slope()
}

/// Histogram and mean of segment counts over an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentCountStats {
    pub n_paths: usize,
    pub histogram: BTreeMap<usize, usize>,
    pub mean: f64,
    pub std_error: f64,
}

pub fn segment_count_stats<I: IntoIterator<Item = usize>>(counts: I) -> SegmentCountStats {
    let mut histogram = BTreeMap::new();
    let (mut n, mut sum, mut sum_sq) = (0usize, 0f64, 0f64);
    for c in counts {
        *histogram.entry(c).or_insert(0) += 1;
        n += 1;
        sum += c as f64;
        sum_sq += (c * c) as f64;
    }
    assert!(n > 0, "segment_count_stats needs a nonempty ensemble");
    let mean = sum / n as f64;
    let var = if n > 1 { (sum_sq - n as f64 * mean * mean) / (n - 1) as f64 } else { 0.0 };
    SegmentCountStats { n_paths: n, histogram, mean, std_error: (var.max(0.0) / n as f64).sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(v: &[f64]) -> SampledPath<f64> {
        SampledPath::from_values(v.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn linear_and_v_shapes() {
        let line = grid(&[0.0, -0.25, -0.5, -0.75, -1.0]);
        let m = convex_minorant(&line);
        assert_eq!(m.vertices, vec![0, 4]);
        assert_eq!(m.slopes, vec![-1.0]);

        let v = convex_minorant(&grid(&[1.0, 0.0, 1.0]));
        assert_eq!(v.slopes, vec![-2.0, 2.0]);
    }

    #[test]
    fn positive_bridge_has_flat_minorant() {
        let m = convex_minorant(&grid(&[0.0, 0.3, 1.2, 0.4, 0.0]));
        assert_eq!(m.vertices, vec![0, 4]);
        assert_eq!(m.slopes, vec![0.0]);
    }

    #[test]
    fn dominance_and_idempotence() {
        let p = grid(&[0.0, 0.5, -0.3, -0.1, -0.9, 0.2, -0.4, -1.0]);
        let m = convex_minorant(&p);
        let c = m.evaluate(&p);
        for (ci, pi) in c.iter().zip(p.values()) {
            assert!(ci <= pi);
        }
        assert!(m.slopes.windows(2).all(|w| w[0] < w[1]));
        let again = convex_minorant(&SampledPath::from_values(c, 1.0).unwrap());
        assert_eq!(again.vertices, m.vertices);
        assert_eq!(*m.vertices.last().unwrap(), 7);
    }

    #[test]
    fn count_stats() {
        let s = segment_count_stats([1, 1, 1]);
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.std_error, 0.0);
        assert_eq!(s.histogram[&1], 3);
    }
}
