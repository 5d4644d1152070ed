use num_bigint::BigUint;
use num_rational::BigRational;

use vervaat::lattice::{binomial, count_first_passage, empirical_z_pmf, enumerate_walks, nearest_with_parity, z_pmf};

#[test]
fn cycle_lemma_counts_match_brute_force() {
    for m in 1..=12u64 {
        let walks = enumerate_walks(m as usize).unwrap();
        for k in 1..=m {
            if (m + k) % 2 != 0 {
                continue;
            }
            let brute = walks
                .iter()
                .filter(|w| {
                    let v = w.values();
                    v[m as usize] == -(k as i64) && v[..m as usize].iter().all(|&x| x > -(k as i64))
                })
                .count();
            assert_eq!(count_first_passage(m, k).unwrap(), BigUint::from(brute), "m = {m}, k = {k}");
        }
    }
}

#[test]
fn z_pmf_is_a_probability_for_large_n() {
    let one = BigRational::from_integer(1.into());
    for &(n, a) in &[(60usize, -2i64), (101, -7), (400, -20)] {
        let pmf = z_pmf(n, a).unwrap();
        assert_eq!(pmf.total(), one, "n = {n}");
    }
}

#[test]
fn z_pmf_equals_enumeration_for_small_n() {
    for &(n, a) in &[(6usize, -2i64), (9, -3), (12, -4)] {
        assert_eq!(z_pmf(n, a).unwrap(), empirical_z_pmf(n, a).unwrap());
    }
}

#[test]
fn z_pmf_example_values() {
    let pmf = z_pmf(4, -2).unwrap();
    assert_eq!(pmf.mass(1), BigRational::new(1.into(), 4.into()));
    assert_eq!(pmf.mass(3), BigRational::new(3.into(), 4.into()));
    assert!(z_pmf(1, -1).unwrap().mass(1) == BigRational::from_integer(1.into()));
}

#[test]
fn parity_rounding() {
    assert_eq!(nearest_with_parity(-56.568, 3200), -56);
    assert_eq!(nearest_with_parity(-14.1, 201), -15);
    assert_eq!(binomial(10, 3), BigUint::from(120u32));
}
