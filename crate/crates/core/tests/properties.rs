use proptest::prelude::*;

use vervaat::minorant::convex_minorant;
use vervaat::path::{argmin_first, dual_reverse, shift_cyclic, vervaat_grid};
use vervaat::stats::{ks_one_sample, ks_two_sample};
use vervaat::verify::line_survival;
use vervaat::Path;

fn path_strategy() -> impl Strategy<Value = Path> {
    prop::collection::vec(-3.0f64..3.0, 1..40).prop_map(|steps| {
        let mut v = vec![0.0];
        for s in steps {
            v.push(v[v.len() - 1] + s);
        }
        Path::from_values(v, 1.0).unwrap()
    })
}

proptest! {
    #[test]
    fn vervaat_starts_at_zero_and_keeps_the_endpoint(p in path_strategy()) {
        let v = vervaat_grid(&p);
        let tau = argmin_first(&p);
        prop_assert_eq!(v.values()[0], 0.0);
        // non-negative up to the wrap point, which carries the endpoint
        prop_assert!(v.values()[..=p.n_steps() - tau].iter().all(|&x| x >= 0.0));
        prop_assert!((v.last() - p.last()).abs() < 1e-12);
        prop_assert_eq!(v.n_steps(), p.n_steps());
    }

    #[test]
    fn shift_by_zero_and_one_is_identity(p in path_strategy()) {
        prop_assert_eq!(shift_cyclic(&p, 0.0), p.clone());
        prop_assert_eq!(shift_cyclic(&p, 1.0), p);
    }

    #[test]
    fn dual_reverse_round_trips(p in path_strategy(), lam in -2.0f64..2.0) {
        let back = dual_reverse(&dual_reverse(&p, lam), -lam);
        for (a, b) in back.values().iter().zip(p.values()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn minorant_is_convex_and_below(p in path_strategy()) {
        let m = convex_minorant(&p);
        let c = m.evaluate(&p);
        for (ci, pi) in c.iter().zip(p.values()) {
            prop_assert!(*ci <= pi + 1e-9);
        }
        prop_assert!(m.slopes.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(m.vertices[0], 0);
        prop_assert_eq!(*m.vertices.last().unwrap(), p.n_steps());
        let hull = Path::from_values(c.clone(), 1.0).unwrap();
        for (a, b) in convex_minorant(&hull).evaluate(&hull).iter().zip(&c) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn ks_statistics_are_in_unit_interval(xs in prop::collection::vec(0.0f64..1.0, 100..300), ys in prop::collection::vec(0.0f64..1.0, 100..300)) {
        let d1 = ks_one_sample(&xs, |x| x).unwrap();
        let d2 = ks_two_sample(&xs, &ys).unwrap();
        prop_assert!((0.0..=1.0).contains(&d1));
        prop_assert!((0.0..=1.0).contains(&d2));
        prop_assert_eq!(ks_two_sample(&xs, &xs).unwrap(), 0.0);
    }

    #[test]
    fn line_survival_is_a_probability_and_monotone(p in path_strategy(), c in 0.0f64..2.0) {
        let knots: Vec<(f64, f64)> = p.values().iter().enumerate().map(|(i, v)| (p.time(i), *v)).collect();
        let low = line_survival(&knots, |_| -10.0 - c, |_| f64::NEG_INFINITY);
        let high = line_survival(&knots, |_| -10.0 + c, |_| f64::NEG_INFINITY);
        prop_assert!((0.0..=1.0).contains(&low));
        prop_assert!(high <= low);
    }
}
