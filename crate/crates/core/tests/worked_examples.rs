use rectiflat_core::heisenberg::{heis_mul, horiz_project, koranyi_norm};
use rectiflat_core::*;

fn h(x: f64, y: f64, t: f64) -> HeisPoint {
    HeisPoint::new(vec![x, y], t).unwrap()
}

#[test]
fn group_law_and_gauge() {
    let p = heis_mul(&h(1.0, 0.0, 0.0), &h(0.0, 1.0, 0.0)).unwrap();
    assert_eq!(p.to_vec(), vec![1.0, 1.0, 0.5]);
    assert_eq!(koranyi_norm(&h(0.0, 0.0, 1.0)), 2.0);
    assert_eq!(koranyi_norm(&h(3.0, 4.0, 0.0)), 5.0);
}

#[test]
fn horizontal_projections() {
    let axis = HorizontalPlane::line(h(0.0, 0.0, 0.0), vec![1.0, 0.0]).unwrap();
    assert_eq!(horiz_project(&axis, &h(3.0, 4.0, 5.0)).unwrap().to_vec(), vec![3.0, 0.0, 0.0]);
    let shifted = HorizontalPlane::line(h(0.0, 1.0, 0.0), vec![1.0, 0.0]).unwrap();
    assert_eq!(horiz_project(&shifted, &h(2.0, 0.0, 0.0)).unwrap().to_vec(), vec![2.0, 1.0, -1.0]);
    let on = shifted.point_at(&[0.7]);
    let back = horiz_project(&shifted, &on).unwrap();
    for (a, b) in back.to_vec().iter().zip(on.to_vec()) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn generated_datasets() {
    let c = generate(&GeneratorSpec::new(GeneratorKind::Cantor4 { depth: 2 }, 0, 0)).unwrap();
    assert_eq!(c.len(), 16);
    assert!((c.total_mass() - 1.0).abs() < 1e-12);
    let pl = generate(&GeneratorSpec::new(GeneratorKind::ParallelLines { eps: 0.125, r: 1.0 }, 64, 0)).unwrap();
    let b = beta(&pl, &pl.all(), 2.0, &PlaneSource::EuclideanFamily { k: 1 }).unwrap().raw;
    // the midline leaves every point at ε/2, against a diameter just above 1
    assert!((b - 0.0625 / (1.0f64 + 0.015625).sqrt()).abs() < 1e-9, "{b}");
}

#[test]
fn collinear_points_are_flat() {
    let sp = MetricSpace::from_coords(
        &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
        Ambient::Euclidean { dim: 1 },
        None,
        1.0,
    )
    .unwrap();
    let all = sp.all();
    assert_eq!(kappa(&sp, &all, &KappaOptions::default()).unwrap().raw, 0.0);
    let b = iota_estimate(&sp, &all, 1.0, 1, &IotaOptions::default()).unwrap();
    assert_eq!((b.lower, b.upper), (0.0, 0.0));
}
