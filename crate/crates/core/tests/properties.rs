//! Randomised invariants.

use anokat::dynamics::{build_box_shuffle, empirical_measure, AreaMap, Rational};
use anokat::ot::w1;
use anokat::surface::{dist, DiscreteMeasure, SurfacePoint, SurfaceTag, Turn};
use proptest::prelude::*;

fn tag() -> impl Strategy<Value = SurfaceTag> {
    prop_oneof![Just(SurfaceTag::Cylinder), Just(SurfaceTag::Sphere), Just(SurfaceTag::Disk)]
}

fn point(tag: SurfaceTag) -> impl Strategy<Value = SurfacePoint> {
    (0.0..1.0f64, -1.0..=1.0f64).prop_map(move |(t, y)| SurfacePoint::new(t, y, tag).unwrap())
}

fn measure(tag: SurfaceTag, max: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((point(tag), 0.05..1.0f64), 1..=max)
        .prop_map(move |atoms| DiscreteMeasure::normalized(tag, atoms, "p").unwrap())
}

fn three_measures() -> impl Strategy<Value = (DiscreteMeasure, DiscreteMeasure, DiscreteMeasure)> {
    tag().prop_flat_map(|t| (measure(t, 7), measure(t, 7), measure(t, 7)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w1_is_a_metric((a, b, c) in three_measures()) {
        let ab = w1(&a, &b).unwrap();
        let ba = w1(&b, &a).unwrap();
        let bc = w1(&b, &c).unwrap();
        let ac = w1(&a, &c).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(w1(&a, &a).unwrap() < 1e-12);
        prop_assert!(ab <= a.tag().diameter() + 1e-12);
    }

    #[test]
    fn point_distance_is_a_metric(t in tag(), s in any::<u64>()) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(s);
        let mut p = || {
            use rand::Rng;
            SurfacePoint::new(rng.gen(), rng.gen_range(-1.0..=1.0), t).unwrap()
        };
        let (x, y, z) = (p(), p(), p());
        prop_assert!(dist(&x, &z).unwrap() <= dist(&x, &y).unwrap() + dist(&y, &z).unwrap() + 1e-12);
        prop_assert!((dist(&x, &y).unwrap() - dist(&y, &x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn scale_split_round_trips(raw in any::<u128>(), k in 1..u64::MAX) {
        let t = Turn(raw);
        let (d, u) = t.scale_split(k);
        prop_assert!(d < k);
        prop_assert_eq!(Turn::unscale(d, u, k), t);
    }

    #[test]
    fn shuffles_round_trip(q in 1u64..6, eps in 0.15..0.9f64, th in 0.0..1.0f64, y in -1.0..=1.0f64) {
        let (g, _) = build_box_shuffle(q, eps).unwrap();
        let p = SurfacePoint::new(th, y, SurfaceTag::Cylinder).unwrap();
        if let Ok(img) = g.eval(&p) {
            let back = g.eval_inv(&img).unwrap();
            prop_assert!(dist(&back, &p).unwrap() < 1e-12);
        }
        if let Ok(pre) = g.eval_inv(&p) {
            let fwd = g.eval(&pre).unwrap();
            prop_assert!(dist(&fwd, &p).unwrap() < 1e-12);
        }
    }

    #[test]
    fn shuffles_commute_with_their_rotation(q in 1u64..6, eps in 0.15..0.9f64, j in 0i64..6, th in 0.0..1.0f64, y in -1.0..=1.0f64) {
        let (g, _) = build_box_shuffle(q, eps).unwrap();
        let r = AreaMap::rotation(Rational::from_ints(j, q as i64).unwrap());
        let p = SurfacePoint::new(th, y, SurfaceTag::Cylinder).unwrap();
        if let (Ok(a), Ok(b)) = (g.eval(&r.eval(&p).unwrap()), g.eval(&p)) {
            prop_assert!(dist(&a, &r.eval(&b).unwrap()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn empirical_measure_is_invariant(p in 1i64..9, q in 1i64..9, th in 0.0..1.0f64, y in -0.99..0.99f64) {
        // The full-period empirical measure is invariant under f = h R h⁻¹.
        let alpha = Rational::from_ints(p, q).unwrap();
        let (g, _) = build_box_shuffle(alpha.denom().try_into().unwrap(), 0.4).unwrap();
        let h = AreaMap::compose(vec![g]);
        let x = SurfacePoint::new(th, y, SurfaceTag::Cylinder).unwrap();
        let Ok(e) = empirical_measure(&h, &alpha, &x, q as usize) else { return Ok(()) };
        let f = AreaMap::compose(vec![h.clone(), AreaMap::rotation(alpha.clone()), h.inverse()]);
        let Ok(pushed) = anokat::dynamics::pushforward(&f, &e) else { return Ok(()) };
        prop_assert!(w1(&e, &pushed).unwrap() < 1e-9);
    }
}
