use vervaat::lattice::{check_bijection, enumerate_walks, quantile_vervaat_multisets_equal};
use vervaat::path::{argmin_first, dual_reverse, shift_cyclic, vervaat_discrete, vervaat_grid};
use vervaat::Path;

#[test]
fn bijection_for_every_admissible_bridge_up_to_14() {
    for n in 1..=14usize {
        for a in (-(n as i64)..0).filter(|a| (n as i64 + a) % 2 == 0) {
            assert!(check_bijection(n, a).unwrap(), "n = {n}, a = {a}");
        }
    }
}

#[test]
fn grid_vervaat_agrees_with_the_lattice_one() {
    // the lattice argmin skips index 0, so the two agree once 0 cannot be a minimum
    for n in 1..=12 {
        for w in enumerate_walks(n).unwrap().into_iter().filter(|w| w.endpoint() < 0) {
            let (v, _) = vervaat_discrete(&w);
            assert_eq!(vervaat_grid(&w.to_grid::<f64>()), v.to_grid::<f64>(), "{w:?}");
        }
    }
}

#[test]
fn cyclic_shift_by_the_helper_undoes_vervaat() {
    for n in 1..=12 {
        for w in enumerate_walks(n).unwrap() {
            let (v, k) = vervaat_discrete(&w);
            let back = shift_cyclic(&v.to_grid::<f64>(), k as f64 / n as f64);
            assert_eq!(back, w.to_grid::<f64>(), "{w:?}");
        }
    }
}

#[test]
fn quantile_and_vervaat_images_agree_up_to_12() {
    for n in 1..=12 {
        assert!(quantile_vervaat_multisets_equal(n).unwrap(), "n = {n}");
    }
}

#[test]
fn vervaat_of_a_lattice_bridge_starts_at_its_minimum() {
    for w in enumerate_walks(10).unwrap().into_iter().filter(|w| w.endpoint() <= 0) {
        let p: Path = w.to_grid();
        let g = vervaat_grid(&p);
        let wrap = p.n_steps() - argmin_first(&p);
        assert!(g.values()[..=wrap].iter().all(|&x| x >= 0.0), "{w:?}");
        assert_eq!(g.last(), w.endpoint() as f64);
        if w.endpoint() == 0 {
            assert_eq!(argmin_first(&g), 0);
        }
    }
}

#[test]
fn dual_reverse_is_an_involution_on_walks() {
    for w in enumerate_walks(8).unwrap() {
        let p: Path = w.to_grid();
        let lam = w.endpoint() as f64;
        assert_eq!(dual_reverse(&dual_reverse(&p, lam), -lam), p);
    }
}
