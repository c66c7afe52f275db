use proptest::prelude::*;

use rectiflat_core::coeffs::set_excess;
use rectiflat_core::heisenberg::{dist_to_hplane, heis_mul, horiz_project, koranyi_dist};
use rectiflat_core::planes::angle_euclid;
use rectiflat_core::*;

fn cloud(dim: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, dim), 3..max)
}

fn euclid(pts: &[Vec<f64>], s: f64) -> Option<MetricSpace> {
    MetricSpace::from_coords(pts, Ambient::Euclidean { dim: pts[0].len() }, None, s).ok()
}

fn heis_point() -> impl Strategy<Value = HeisPoint> {
    (prop::collection::vec(-2.0..2.0f64, 2), -2.0..2.0f64).prop_map(|(x, t)| HeisPoint::new(x, t).unwrap())
}

fn hline() -> impl Strategy<Value = HorizontalPlane> {
    (heis_point(), 0.0..std::f64::consts::TAU)
        .prop_map(|(b, a)| HorizontalPlane::line(b, vec![a.cos(), a.sin()]).unwrap())
}

fn line_plane(dim: usize) -> impl Strategy<Value = AffinePlane> {
    (prop::collection::vec(-1.0..1.0f64, dim), prop::collection::vec(-1.0..1.0f64, dim))
        .prop_filter_map("degenerate direction", |(b, d)| AffinePlane::from_directions(b, &[d]).ok())
}

fn line1() -> PlaneSource {
    PlaneSource::EuclideanFamily { k: 1 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snowflaked_distances_are_metrics(pts in cloud(2, 12), s in 0.3..=1.0f64) {
        if let Some(sp) = euclid(&pts, s) {
            prop_assert!(sp.check_metric().is_ok());
        }
    }

    #[test]
    fn beta_and_kappa_are_scale_invariant(pts in cloud(2, 10), lambda in 0.1..10.0f64) {
        if let Some(sp) = euclid(&pts, 1.0) {
            let big = sp.scaled(lambda).unwrap();
            let (a, b) = (sp.all(), big.all());
            let b0 = beta(&sp, &a, 2.0, &line1()).unwrap().raw;
            let b1 = beta(&big, &b, 2.0, &line1()).unwrap().raw;
            prop_assert!((b0 - b1).abs() <= 1e-9);
            let k0 = kappa(&sp, &a, &KappaOptions::default()).unwrap().raw;
            let k1 = kappa(&big, &b, &KappaOptions::default()).unwrap().raw;
            prop_assert!((k0 - k1).abs() <= 1e-9);
        }
    }

    #[test]
    fn iota_plane_at_most_twice_beta(pts in cloud(2, 14), q in prop::sample::select(vec![1.0, 2.0])) {
        if let Some(sp) = euclid(&pts, 1.0) {
            let all = sp.all();
            let b = beta(&sp, &all, q, &line1()).unwrap();
            if let Some(Witness::Plane { plane, .. }) = b.witness {
                let i = iota_plane(&sp, &all, q, &PlaneSource::Affine(plane)).unwrap();
                prop_assert!(i.raw <= 2.0 * b.raw + 1e-9, "ι {} β {}", i.raw, b.raw);
            }
        }
    }

    #[test]
    fn kappa_at_most_three_iota(pts in cloud(2, 10)) {
        if let Some(sp) = euclid(&pts, 1.0) {
            let all = sp.all();
            let k = kappa(&sp, &all, &KappaOptions::default()).unwrap().raw;
            let b = iota_estimate(&sp, &all, 1.0, 1, &IotaOptions::default()).unwrap();
            prop_assert!(b.lower <= b.upper + 1e-12);
            prop_assert!(k <= 3.0 * b.upper + 1e-9);
        }
    }

    #[test]
    fn beta_is_monotone_in_q(pts in cloud(3, 12), plane in line_plane(3), q in 0.5..4.0f64) {
        if let Some(sp) = euclid(&pts, 1.0) {
            let all = sp.all();
            let src = PlaneSource::Affine(plane);
            let b1 = beta(&sp, &all, q, &src).unwrap().raw;
            let b2 = beta(&sp, &all, 2.0 * q, &src).unwrap().raw;
            prop_assert!(b1 <= b2 + 1e-12);
        }
    }

    #[test]
    fn excess_ignores_labels(pts in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 2), 4), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        if let Some(sp) = euclid(&pts, 1.0) {
            prop_assert_eq!(set_excess(&sp, &[0, 1, 2, 3]), set_excess(&sp, &perm));
        }
    }

    #[test]
    fn angles_satisfy_the_triangle_inequality(a in line_plane(3), b in line_plane(3), c in line_plane(3)) {
        let ac = angle_euclid(&a, &c).unwrap();
        let ab = angle_euclid(&a, &b).unwrap();
        let bc = angle_euclid(&b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn koranyi_triangle_inequality(p in heis_point(), q in heis_point(), r in heis_point()) {
        let pr = koranyi_dist(&p, &r).unwrap();
        let pq = koranyi_dist(&p, &q).unwrap();
        let qr = koranyi_dist(&q, &r).unwrap();
        prop_assert!(pr <= pq + qr + 1e-9);
    }

    #[test]
    fn koranyi_left_invariance(w in heis_point(), p in heis_point(), q in heis_point()) {
        let d0 = koranyi_dist(&p, &q).unwrap();
        let d1 = koranyi_dist(&heis_mul(&w, &p).unwrap(), &heis_mul(&w, &q).unwrap()).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0));
    }

    #[test]
    fn projection_commutes_with_translation(v in hline(), w in heis_point(), p in heis_point()) {
        let lhs = horiz_project(&v.translate(&w).unwrap(), &heis_mul(&w, &p).unwrap()).unwrap();
        let rhs = heis_mul(&w, &horiz_project(&v, &p).unwrap()).unwrap();
        for (a, b) in lhs.to_vec().iter().zip(rhs.to_vec()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn plane_distance_sandwich(v in hline(), p in heis_point()) {
        let d = dist_to_hplane(&v, &p).unwrap();
        prop_assert!(d.lower <= d.value + 1e-6 && d.value <= d.upper + 1e-6, "{d:?}");
    }
}
