use nalgebra::DVector;
use proptest::prelude::*;
use randhull_core::hull::{hull_measure_2d, in_hull, Witness};
use randhull_core::{Body, VecD};

fn cloud(dim: usize, max_len: usize) -> impl Strategy<Value = Vec<VecD>> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, dim), 1..max_len)
        .prop_map(|rows| rows.into_iter().map(DVector::from_vec).collect())
}

fn direction(dim: usize) -> impl Strategy<Value = VecD> {
    prop::collection::vec(-1.0f64..1.0, dim)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn convex_combinations_are_members(
        (pts, raw) in (2usize..5).prop_flat_map(|d| cloud(d, 12))
            .prop_flat_map(|p| { let n = p.len(); (Just(p), prop::collection::vec(0.01f64..1.0, n)) })
    ) {
        let total: f64 = raw.iter().sum();
        let q = pts.iter().zip(&raw).fold(DVector::zeros(pts[0].len()), |acc, (p, w)| acc + p * (w / total));
        let r = in_hull(&pts, &q, 1e-9).unwrap();
        prop_assert!(r.inside, "distance {}", r.distance);
        if let Witness::Convex { indices, coefficients } = r.witness {
            let sum: f64 = coefficients.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            let rebuilt = indices.iter().zip(&coefficients)
                .fold(DVector::zeros(q.len()), |acc, (&i, c)| acc + &pts[i] * *c);
            prop_assert!((rebuilt - &q).norm() < 1e-7);
        } else {
            prop_assert!(false, "inside without a convex witness");
        }
    }

    #[test]
    fn separating_witness_really_separates(pts in cloud(3, 15), u in direction(3)) {
        let top = pts.iter().map(|p| p.dot(&u)).fold(f64::NEG_INFINITY, f64::max);
        let q = &u * ((top + 0.5) / u.norm_squared());
        let r = in_hull(&pts, &q, 1e-9).unwrap();
        prop_assert!(!r.inside);
        match r.witness {
            Witness::Separating { direction, margin } => {
                let best = pts.iter().map(|p| p.dot(&direction)).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(margin > 0.0);
                prop_assert!((direction.dot(&q) - best - margin).abs() < 1e-8);
            }
            Witness::Convex { .. } => prop_assert!(false, "outside with a convex witness"),
        }
    }

    #[test]
    fn support_is_positively_homogeneous(
        u in direction(3), s in 0.1f64..10.0, a in 0.5f64..2.0, b in 0.5f64..2.0, c in 0.5f64..2.0
    ) {
        let bodies = [
            Body::ball(3, a).unwrap(),
            Body::ellipsoid(&[a, b, c]).unwrap(),
            Body::capsule(3, a, b, 2).unwrap(),
            Body::cube(3, c).unwrap(),
        ];
        for body in &bodies {
            let h = body.support(&u).unwrap();
            let hs = body.support(&(&u * s)).unwrap();
            prop_assert!((hs - s * h).abs() <= 1e-10 * (1.0 + hs.abs()));
            let x = body.boundary_point_towards(&u).unwrap();
            prop_assert!(x.x.dot(&u) <= h + 1e-9);
        }
    }

    #[test]
    fn planar_hull_area_is_translation_invariant(pts in cloud(2, 30), dx in -5.0f64..5.0, dy in -5.0f64..5.0) {
        let shift = DVector::from_vec(vec![dx, dy]);
        let moved: Vec<VecD> = pts.iter().map(|p| p + &shift).collect();
        let a = hull_measure_2d(&pts);
        prop_assert!((a - hull_measure_2d(&moved)).abs() < 1e-9 * (1.0 + a));
    }
}
