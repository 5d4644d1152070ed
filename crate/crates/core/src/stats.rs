//! Goodness-of-fit statistics and moment tests.

use crate::error::{invalid, Error, Result};

/// Minimum sample size accepted by the one-sample KS test.
pub const KS_MIN_SAMPLES: usize = 100;

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(invalid("samples contain NaN"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    let s = sorted(samples)?;
    let values: Vec<f64> = s.iter().map(|&x| cdf(x)).collect();
    ks_from_sorted(&s, &values, &values)
}

/// One-sample KS statistic for a law that may have atoms: `cdf(x) = P(X <= x)`
/// and `left(x) = P(X < x)`.
pub fn ks_one_sample_mixed<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(samples: &[f64], cdf: F, left: G) -> Result<f64> {
    let s = sorted(samples)?;
    let at: Vec<f64> = s.iter().map(|&x| cdf(x)).collect();
    let before: Vec<f64> = s.iter().map(|&x| left(x)).collect();
    ks_from_sorted(&s, &at, &before)
}

/// KS statistic from ascending samples and the model CDF (`at`) and its left
/// limit (`before`) evaluated at each sample.
pub fn ks_from_sorted(s: &[f64], at: &[f64], before: &[f64]) -> Result<f64> {
    let n = s.len();
    if n < KS_MIN_SAMPLES {
        return Err(invalid(format!("KS needs at least {KS_MIN_SAMPLES} samples, got {n}")));
    }
    for i in 0..n {
        if !(0.0..=1.0).contains(&at[i]) || !(0.0..=1.0).contains(&before[i]) || before[i] > at[i] + 1e-12 {
            return Err(Error::NonMonotoneCdf(s[i]));
        }
        if i > 0 && at[i] < at[i - 1] - 1e-12 {
            return Err(Error::NonMonotoneCdf(s[i]));
        }
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < n {
        // group ties
        let mut j = i;
        while j + 1 < n && s[j + 1] == s[i] {
            j += 1;
        }
        let below = i as f64 / nf; // empirical P(X < x)
        let upto = (j + 1) as f64 / nf; // empirical P(X <= x)
        d = d.max((upto - at[i]).abs()).max((below - before[i]).abs());
        i = j + 1;
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("two-sample KS needs nonempty samples"));
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `(mean - target) / se`.
pub fn z_score(xs: &[f64], target: f64) -> f64 {
    let (m, se) = mean_se(xs);
    (m - target) / se
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Fisher z statistic for a sample correlation `r` from `n` pairs under the
/// null of zero correlation.
pub fn fisher_z(r: f64, n: usize) -> f64 {
    r.atanh() * ((n as f64) - 3.0).sqrt()
}

/// Weighted least-squares fit of `y = c x` through the origin. Returns `c`
/// and `R²`, measured about the weighted mean of `y`.
pub fn fit_through_origin(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, b), w)| w * a * b).sum();
    let sxx: f64 = x.iter().zip(w).map(|(a, w)| w * a * a).sum();
    let c = sxy / sxx;
    let sw: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(b, w)| w * b).sum::<f64>() / sw;
    let ss_res: f64 = x.iter().zip(y).zip(w).map(|((a, b), w)| w * (b - c * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().zip(w).map(|(b, w)| w * (b - ybar).powi(2)).sum();
    (c, 1.0 - ss_res / ss_tot)
}

/// Empirical quantile (type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniforms(n: usize) -> Vec<f64> {
        // low-discrepancy sequence: KS distance exactly 1/(2n) style
        (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn ks_basics() {
        let u = uniforms(1000);
        let d = ks_one_sample(&u, |x| x).unwrap();
        assert!((d - 0.0005).abs() < 1e-12);
        let constant = vec![0.5; 200];
        assert!(ks_one_sample(&constant, |x| x).unwrap() >= 0.5);
        assert!(ks_one_sample(&u[..50], |x| x).is_err());
        assert!(matches!(ks_one_sample(&u, |x| 1.0 - x), Err(Error::NonMonotoneCdf(_))));
    }

    #[test]
    fn ks_with_atom() {
        // half the mass at 0, the rest uniform on (0, 1)
        let mut s = vec![0.0; 500];
        s.extend((0..500).map(|i| (i as f64 + 0.5) / 500.0));
        let cdf = |x: f64| if x < 0.0 { 0.0 } else { 0.5 + 0.5 * x.min(1.0) };
        let left = |x: f64| if x <= 0.0 { 0.0 } else { 0.5 + 0.5 * x.min(1.0) };
        let d = ks_one_sample_mixed(&s, cdf, left).unwrap();
        assert!(d < 0.001, "{d}");
        // treating the atom as continuous is wrong by about the atom
        let d_naive = ks_one_sample(&s, cdf).unwrap();
        assert!(d_naive >= 0.0);
    }

    #[test]
    fn two_sample() {
        let a = uniforms(1000);
        let b: Vec<f64> = a.iter().map(|x| x + 0.1).collect();
        assert!((ks_two_sample(&a, &b).unwrap() - 0.1).abs() < 2e-3);
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn regression_and_correlation() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        let (c, r2) = fit_through_origin(&x, &y, &[1.0; 4]);
        assert!((c - 2.0).abs() < 1e-15 && (r2 - 1.0).abs() < 1e-15);
        assert!((correlation(&x, &y) - 1.0).abs() < 1e-15);
        let (m, se) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }
}
