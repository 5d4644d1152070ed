//! Exact combinatorics of simple-walk bridges.
//!
//! Everything here is exact: counts are [`BigUint`], laws are [`BigRational`].
//! Binomials are read in the standard orientation `C(n, k)` with `n >= k`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::path::{quantile_discrete, vervaat_discrete, LatticeWalk};

/// Largest walk length [`enumerate_bridges`] accepts.
pub const ENUMERATION_GUARD: usize = 24;

/// Prefix length used to split enumeration work across threads.
const PREFIX_DEPTH: usize = 8;

/// A law on the integers with exact rational masses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactPmf {
    masses: BTreeMap<i64, BigRational>,
}

impl ExactPmf {
    /// Builds a pmf from nonnegative masses summing to exactly one. Zero
    /// masses are dropped from the support.
    pub fn new(masses: BTreeMap<i64, BigRational>) -> Result<Self> {
        if masses.values().any(|m| m < &BigRational::zero()) {
            return Err(invalid("pmf masses must be nonnegative"));
        }
        let total: BigRational = masses.values().sum();
        if !total.is_one() {
            return Err(invalid(format!("pmf masses sum to {total}, not 1")));
        }
        Ok(Self { masses: masses.into_iter().filter(|(_, m)| !m.is_zero()).collect() })
    }

    /// Normalises integer counts into a pmf.
    pub fn from_counts(counts: &BTreeMap<i64, BigUint>) -> Result<Self> {
        let total: BigUint = counts.values().sum();
        if total.is_zero() {
            return Err(invalid("cannot normalise an empty count table"));
        }
        let total = BigInt::from(total);
        let masses = counts
            .iter()
            .map(|(&k, c)| (k, BigRational::new(BigInt::from(c.clone()), total.clone())))
            .collect();
        Self::new(masses)
    }

    pub fn point(at: i64) -> Self {
        Self { masses: BTreeMap::from([(at, BigRational::one())]) }
    }

    pub fn mass(&self, at: i64) -> BigRational {
        self.masses.get(&at).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.masses.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &BigRational)> + '_ {
        self.masses.iter().map(|(&k, m)| (k, m))
    }

    pub fn total(&self) -> BigRational {
        self.masses.values().sum()
    }

    pub fn mean(&self) -> BigRational {
        self.masses.iter().map(|(&k, m)| m * BigRational::from_integer(BigInt::from(k))).sum()
    }

    /// Masses rounded to `f64`.
    pub fn to_f64(&self) -> Vec<(i64, f64)> {
        self.masses.iter().map(|(&k, m)| (k, ratio_to_f64(m))).collect()
    }
}

/// Rounds an exact ratio to the nearest `f64` (also for huge numerators and
/// denominators).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(x) = r.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    // Fall back to scaling by a power of two when both parts overflow.
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
    let num = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let den = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    num / den
}

/// The complete set of lattice bridges `0 -> a` of length `n`.
#[derive(Clone, Debug)]
pub struct BridgeEnsemble {
    pub n: usize,
    pub a: i64,
    pub walks: Vec<LatticeWalk>,
}

impl BridgeEnsemble {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }
}

fn check_bridge_args(n: usize, a: i64) -> Result<()> {
    if n > ENUMERATION_GUARD {
        return Err(Error::Capacity { n, max: ENUMERATION_GUARD });
    }
    check_parity(n, a)
}

fn check_parity(n: usize, a: i64) -> Result<()> {
    if (n as i64 - a).rem_euclid(2) != 0 {
        return Err(Error::Parity { n: n as i64, a });
    }
    if a.unsigned_abs() as usize > n {
        return Err(invalid(format!("|a| = {} exceeds the walk length {n}", a.abs())));
    }
    Ok(())
}

/// Depth-first completion of `prefix` into bridges ending at `a`, down-steps
/// first so that the output is in lexicographic order.
fn complete(prefix: &mut Vec<i8>, height: i64, n: usize, a: i64, out: &mut Vec<LatticeWalk>) {
    if prefix.len() == n {
        out.push(LatticeWalk::from_steps_unchecked(prefix.clone()));
        return;
    }
    let remaining = (n - prefix.len() - 1) as i64;
    for step in [-1i8, 1] {
        let h = height + i64::from(step);
        if (a - h).abs() <= remaining {
            prefix.push(step);
            complete(prefix, h, n, a, out);
            prefix.pop();
        }
    }
}

fn feasible_prefixes(depth: usize, n: usize, a: i64) -> Vec<(Vec<i8>, i64)> {
    let mut level = vec![(Vec::new(), 0i64)];
    for d in 0..depth {
        let remaining = (n - d - 1) as i64;
        level = level
            .into_iter()
            .flat_map(|(p, h)| {
                [-1i8, 1].into_iter().filter_map(move |s| {
                    let h2 = h + i64::from(s);
                    ((a - h2).abs() <= remaining).then(|| {
                        let mut p2 = p.clone();
                        p2.push(s);
                        (p2, h2)
                    })
                })
            })
            .collect();
    }
    level
}

/// Every walk of length `n` ending at `a`, in lexicographic step order
/// (`-` before `+`). Work is split by step prefix; the result does not depend
/// on the thread count.
pub fn enumerate_bridges(n: usize, a: i64) -> Result<BridgeEnsemble> {
    check_bridge_args(n, a)?;
    let prefixes = feasible_prefixes(PREFIX_DEPTH.min(n), n, a);
    let chunks: Vec<Vec<LatticeWalk>> = prefixes
        .into_par_iter()
        .map(|(mut p, h)| {
            let mut out = Vec::new();
            complete(&mut p, h, n, a, &mut out);
            out
        })
        .collect();
    Ok(BridgeEnsemble { n, a, walks: chunks.into_iter().flatten().collect() })
}

/// Every walk of length `n`, in lexicographic step order.
pub fn enumerate_walks(n: usize) -> Result<Vec<LatticeWalk>> {
    if n > ENUMERATION_GUARD {
        return Err(Error::Capacity { n, max: ENUMERATION_GUARD });
    }
    Ok((0u64..1 << n)
        .map(|bits| {
            let steps = (0..n).map(|j| if bits >> (n - 1 - j) & 1 == 1 { 1 } else { -1 }).collect();
            LatticeWalk::from_steps_unchecked(steps)
        })
        .collect())
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of walks of length `m` that hit `-k` for the first time at step `m`:
/// `(k/m) C(m, (m+k)/2)`. The empty walk counts once for `m = k = 0`.
pub fn count_first_passage(m: u64, k: u64) -> Result<BigUint> {
    if m < k || (m - k) % 2 != 0 {
        return Err(Error::Parity { n: m as i64, a: -(k as i64) });
    }
    if m == 0 {
        return Ok(BigUint::one());
    }
    if k == 0 {
        return Ok(BigUint::zero());
    }
    Ok(binomial(m, (m + k) / 2) * k / m)
}

/// `C(m, (m+k)/2)` for `m = k, k+2, ..., <= max_m`, by the two-step recurrence.
fn binomial_ladder(k: u64, max_m: u64) -> Vec<BigUint> {
    let mut out = Vec::new();
    if k > max_m {
        return out;
    }
    let mut c = BigUint::one();
    let mut m = k;
    loop {
        out.push(c.clone());
        if m + 2 > max_m {
            break;
        }
        let j = (m + k) / 2;
        c = c * ((m + 1) * (m + 2)) / ((j + 1) * (m + 1 - j));
        m += 2;
    }
    out
}

/// Exact law of the first hitting time of `-1` by the Vervaat image of a
/// uniform bridge `0 -> a` of length `n`:
/// `P(Z = l) = l fp(l, 1) fp(n-l, |a|-1) / C(n, (n+|a|)/2)` on odd `l`,
/// where `fp` is [`count_first_passage`].
pub fn z_pmf(n: usize, a: i64) -> Result<ExactPmf> {
    if a >= 0 {
        return Err(invalid(format!("z_pmf needs a negative endpoint, got {a}")));
    }
    check_parity(n, a)?;
    let (n, k) = (n as u64, a.unsigned_abs());
    if k == 1 {
        return Ok(ExactPmf::point(n as i64));
    }
    let total = BigInt::from(binomial(n, (n + k) / 2));
    // l odd in [1, n - (k-1)]; first pieces use the k=1 ladder, second pieces
    // the k-1 ladder indexed from the top.
    let first = binomial_ladder(1, n);
    let second = binomial_ladder(k - 1, n);
    let mut masses = BTreeMap::new();
    let mut l = 1;
    while l + (k - 1) <= n {
        let r = n - l;
        let fp_second = if r == 0 {
            BigUint::one()
        } else {
            &second[((r - (k - 1)) / 2) as usize] * (k - 1) / r
        };
        // l * fp(l, 1) = C(l, (l+1)/2)
        let count = &first[((l - 1) / 2) as usize] * fp_second;
        masses.insert(l as i64, BigRational::new(BigInt::from(count), total.clone()));
        l += 2;
    }
    ExactPmf::new(masses)
}

/// First `j > 0` with `v(j) = level`.
pub fn first_hit(v: &LatticeWalk, level: i64) -> Option<usize> {
    v.values().iter().skip(1).position(|&x| x == level).map(|j| j + 1)
}

/// The Vervaat image, helper `K` and first return `Z` of every bridge.
fn vervaat_images(ens: &BridgeEnsemble) -> Vec<(LatticeWalk, usize, usize)> {
    ens.walks
        .par_iter()
        .map(|w| {
            let (v, k) = vervaat_discrete(w);
            let z = first_hit(&v, -1).expect("a Vervaat bridge with negative endpoint hits -1");
            (v, k, z)
        })
        .collect()
}

fn uniform_counts<I: IntoIterator<Item = i64>>(items: I) -> BTreeMap<i64, BigUint> {
    let mut counts = BTreeMap::new();
    for x in items {
        *counts.entry(x).or_insert_with(BigUint::zero) += 1u32;
    }
    counts
}

/// Law of `Z` computed by enumerating the bridges and their Vervaat images.
pub fn empirical_z_pmf(n: usize, a: i64) -> Result<ExactPmf> {
    if a >= 0 {
        return Err(invalid(format!("empirical_z_pmf needs a negative endpoint, got {a}")));
    }
    let ens = enumerate_bridges(n, a)?;
    ExactPmf::from_counts(&uniform_counts(vervaat_images(&ens).into_iter().map(|(_, _, z)| z as i64)))
}

/// Checks the bijection `w -> (V(w), K(w))` on bridges `0 -> a`: no two
/// bridges share an image pair, and every image satisfies `v(j) >= 0` for
/// `j <= k`, `v(j) > a` for `k <= j < n`, `v(n) = a`.
pub fn check_bijection(n: usize, a: i64) -> Result<bool> {
    let ens = enumerate_bridges(n, a)?;
    let mut seen = BTreeSet::new();
    for w in &ens.walks {
        let (v, k) = vervaat_discrete(w);
        let vals = v.values();
        let ok = vals[n] == a
            && vals[..=k].iter().all(|&x| x >= 0)
            && vals[k..n].iter().all(|&x| x > a);
        if !ok || !seen.insert((v, k)) {
            return Ok(false);
        }
    }
    Ok(seen.len() == ens.len())
}

/// Exact multiset equality of `{Q(w)}` and `{V(w)}` over all walks of length `n`.
pub fn quantile_vervaat_multisets_equal(n: usize) -> Result<bool> {
    let walks = enumerate_walks(n)?;
    let mut q: Vec<LatticeWalk> = walks.par_iter().map(quantile_discrete).collect();
    let mut v: Vec<LatticeWalk> = walks.par_iter().map(|w| vervaat_discrete(w).0).collect();
    q.par_sort();
    v.par_sort();
    Ok(q == v)
}

/// A law on lattice walks with exact masses.
pub type WalkLaw = BTreeMap<LatticeWalk, BigRational>;

/// Laws of the two pieces of the Vervaat image given `Z = l`.
#[derive(Clone, Debug)]
pub struct PieceLaws {
    pub first: WalkLaw,
    pub second: WalkLaw,
    /// The joint law of the pieces equals the product of the two marginals.
    pub factorizes: bool,
    /// Both marginals are uniform over the full first-passage sets, of sizes
    /// `fp(l, 1)` and `fp(n-l, |a|-1)`.
    pub uniform: bool,
}

fn law_from_counts<K: Ord + Clone>(counts: &BTreeMap<K, u64>, total: u64) -> BTreeMap<K, BigRational> {
    counts
        .iter()
        .map(|(k, &c)| (k.clone(), BigRational::new(BigInt::from(c), BigInt::from(total))))
        .collect()
}

fn is_uniform(law: &WalkLaw, size: &BigUint) -> bool {
    let expected = BigRational::new(BigInt::one(), BigInt::from(size.clone()));
    BigUint::from(law.len()) == *size && law.values().all(|m| *m == expected)
}

/// Conditioned on `Z = l`, the laws of `V|[0,l]` and `V|[l,n]` (re-rooted at 0).
pub fn conditional_piece_laws(n: usize, a: i64, l: usize) -> Result<PieceLaws> {
    if a >= 0 {
        return Err(invalid(format!("piece laws need a negative endpoint, got {a}")));
    }
    let ens = enumerate_bridges(n, a)?;
    let mut joint: BTreeMap<(LatticeWalk, LatticeWalk), u64> = BTreeMap::new();
    for (v, _, z) in vervaat_images(&ens) {
        if z == l {
            *joint.entry((v.segment(0, l), v.segment(l, n))).or_default() += 1;
        }
    }
    let total: u64 = joint.values().sum();
    if total == 0 {
        return Err(invalid(format!("l = {l} is outside the support of Z")));
    }
    let mut first: BTreeMap<LatticeWalk, u64> = BTreeMap::new();
    let mut second: BTreeMap<LatticeWalk, u64> = BTreeMap::new();
    for ((p1, p2), c) in &joint {
        *first.entry(p1.clone()).or_default() += c;
        *second.entry(p2.clone()).or_default() += c;
    }
    let factorizes = first.len() * second.len() == joint.len()
        && joint.iter().all(|((p1, p2), &c)| {
            u128::from(c) * u128::from(total) == u128::from(first[p1]) * u128::from(second[p2])
        });
    let first = law_from_counts(&first, total);
    let second = law_from_counts(&second, total);
    let k = a.unsigned_abs();
    let uniform = is_uniform(&first, &count_first_passage(l as u64, 1)?)
        && is_uniform(&second, &count_first_passage((n - l) as u64, k - 1)?);
    Ok(PieceLaws { first, second, factorizes, uniform })
}

/// For every Vervaat image of a bridge `0 -> a`, the law of the helper `K`
/// over its preimages.
pub fn helper_distribution(n: usize, a: i64) -> Result<BTreeMap<LatticeWalk, BTreeMap<usize, BigRational>>> {
    let ens = enumerate_bridges(n, a)?;
    let mut by_image: BTreeMap<LatticeWalk, Vec<usize>> = BTreeMap::new();
    for (v, k, _) in vervaat_images(&ens) {
        by_image.entry(v).or_default().push(k);
    }
    Ok(by_image
        .into_iter()
        .map(|(v, ks)| {
            let total = ks.len() as u64;
            let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
            for k in ks {
                *counts.entry(k).or_default() += 1;
            }
            (v, law_from_counts(&counts, total))
        })
        .collect())
}

/// Every image `v` has exactly `Z(v)` preimages, with helper values
/// `0, ..., Z(v) - 1`, each of mass `1/Z(v)`.
pub fn helper_uniform(n: usize, a: i64) -> Result<bool> {
    let laws = helper_distribution(n, a)?;
    Ok(laws.iter().all(|(v, law)| {
        let z = first_hit(v, -1).unwrap_or(0);
        let mass = BigRational::new(BigInt::one(), BigInt::from(z));
        law.len() == z && law.iter().enumerate().all(|(i, (&k, m))| k == i && *m == mass)
    }))
}

/// Summary of the exact checks for one `(n, a)`.
#[derive(Clone, Debug)]
pub struct DiscreteChecks {
    pub pmf: ExactPmf,
    pub pmf_matches_enumeration: bool,
    pub bijection_ok: bool,
    pub uniform_helper_ok: bool,
    pub factorization_ok: bool,
}

/// Runs every exact check for bridges `0 -> a` of length `n`.
pub fn discrete_checks(n: usize, a: i64) -> Result<DiscreteChecks> {
    let pmf = z_pmf(n, a)?;
    let pmf_matches_enumeration = empirical_z_pmf(n, a)? == pmf;
    let bijection_ok = check_bijection(n, a)?;
    let uniform_helper_ok = helper_uniform(n, a)?;
    let mut factorization_ok = true;
    for l in pmf.support().collect::<Vec<_>>() {
        let laws = conditional_piece_laws(n, a, l as usize)?;
        factorization_ok &= laws.factorizes && laws.uniform;
    }
    Ok(DiscreteChecks { pmf, pmf_matches_enumeration, bijection_ok, uniform_helper_ok, factorization_ok })
}

/// Conditioning events for the discrete non-Markov experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PastEvent {
    /// The image visits `-1` at step `at` (an earlier return to the lattice zero).
    HitAt(usize),
    /// The image stays `>= 0` on `[0, t0]`.
    Positive,
}

/// Exact law of `T`, the first visit to `-1` after step `t0`, for the Vervaat
/// image of a uniform bridge `0 -> a`, given `V(t0) = x0` and `past`.
pub fn conditional_return_law(n: usize, a: i64, t0: usize, x0: i64, past: PastEvent) -> Result<ExactPmf> {
    if t0 >= n {
        return Err(invalid(format!("t0 = {t0} must be below n = {n}")));
    }
    let ens = enumerate_bridges(n, a)?;
    let times: Vec<Option<i64>> = ens
        .walks
        .par_iter()
        .map(|w| {
            let vals = vervaat_discrete(w).0.values();
            if vals[t0] != x0 {
                return None;
            }
            let past_ok = match past {
                PastEvent::HitAt(s) => s < t0 && vals[s] == -1,
                PastEvent::Positive => vals[..=t0].iter().all(|&x| x >= 0),
            };
            if !past_ok {
                return None;
            }
            vals.iter().enumerate().skip(t0 + 1).find(|(_, &x)| x == -1).map(|(j, _)| j as i64)
        })
        .collect();
    let counts = uniform_counts(times.into_iter().flatten());
    if counts.is_empty() {
        return Err(invalid("the conditioning event is empty"));
    }
    ExactPmf::from_counts(&counts)
}

/// Parity-matched integer nearest to `x`.
pub fn nearest_with_parity(x: f64, n: usize) -> i64 {
    let r = x.round() as i64;
    if (r - n as i64).rem_euclid(2) == 0 {
        return r;
    }
    let (lo, hi) = (r - 1, r + 1);
    if (x - lo as f64).abs() <= (hi as f64 - x).abs() {
        lo
    } else {
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumerate_bridges(2, -2).unwrap().walks, vec!["--".parse().unwrap()]);
        assert_eq!(enumerate_bridges(4, -2).unwrap().len(), 4);
        assert_eq!(enumerate_bridges(12, -4).unwrap().len(), 495);
        assert!(matches!(enumerate_bridges(5, -2), Err(Error::Parity { .. })));
        assert!(matches!(enumerate_bridges(26, -2), Err(Error::Capacity { .. })));
    }

    #[test]
    fn first_passage_counts() {
        assert_eq!(count_first_passage(1, 1).unwrap(), BigUint::from(1u32));
        assert_eq!(count_first_passage(3, 1).unwrap(), BigUint::from(1u32));
        assert_eq!(count_first_passage(7, 3).unwrap(), BigUint::from(9u32));
        assert!(count_first_passage(4, 1).is_err());
    }

    #[test]
    fn z_pmf_small_cases() {
        assert_eq!(z_pmf(2, -2).unwrap(), ExactPmf::point(1));
        let p = z_pmf(4, -2).unwrap();
        assert_eq!(p.mass(1), q(1, 4));
        assert_eq!(p.mass(3), q(3, 4));
        assert_eq!(z_pmf(5, -1).unwrap(), ExactPmf::point(5));
    }

    #[test]
    fn ladder_matches_direct_binomials() {
        for k in 0..5u64 {
            for (i, c) in binomial_ladder(k, 30).iter().enumerate() {
                let m = k + 2 * i as u64;
                assert_eq!(*c, binomial(m, (m + k) / 2));
            }
        }
    }

    #[test]
    fn helper_example() {
        let laws = helper_distribution(4, -2).unwrap();
        let v = LatticeWalk::from_values(&[0, 1, 0, -1, -2]).unwrap();
        let law = &laws[&v];
        assert_eq!(law.keys().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(law.values().all(|m| *m == q(1, 3)));
    }

    #[test]
    fn piece_law_example() {
        let laws = conditional_piece_laws(4, -2, 3).unwrap();
        assert_eq!(laws.first.len(), 1);
        assert_eq!(laws.second.len(), 1);
        assert!(laws.factorizes && laws.uniform);
    }

    #[test]
    fn parity_rounding() {
        assert_eq!(nearest_with_parity(-14.142, 200), -14);
        assert_eq!(nearest_with_parity(-28.28, 800), -28);
        assert_eq!(nearest_with_parity(-3.2, 5), -3);
        assert_eq!(nearest_with_parity(-3.2, 6), -4);
    }

    #[test]
    fn ratio_conversion_of_huge_values() {
        let big = BigInt::from(10u32).pow(400);
        let r = BigRational::new(big.clone() + 1, big * 2);
        assert_eq!(ratio_to_f64(&r), 0.5);
    }
}
