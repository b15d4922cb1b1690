use std::f64::consts::PI;

use lapfm::geometry::*;
use lapfm::oracle::{adaptive_simpson, ellipse_perimeter, polygon_is_simple, ray_cast_contains};
use lapfm::Error;
use proptest::prelude::*;

fn circle(n: usize) -> BoundaryGeometry {
    make_curve(&CurveShape::Circle { radius: 1.0 }, n).unwrap()
}

fn kite(n: usize) -> BoundaryGeometry {
    make_curve(&CurveShape::Kite { scale: 1.0 }, n).unwrap()
}

fn shapes() -> Vec<CurveShape> {
    vec![
        CurveShape::Circle { radius: 1.3 },
        CurveShape::Ellipse { a: 2.0, b: 1.0 },
        CurveShape::Kite { scale: 1.0 },
        CurveShape::Peanut { a: 1.0, b: 0.25 },
    ]
}

#[test]
fn circle_weights_sum_to_circumference() {
    let g = circle(64);
    let s: f64 = g.weights().iter().sum();
    assert!((s - 2.0 * PI).abs() < 1e-10);
    assert!(g.closed());
    assert_eq!(g.param_range(), (0.0, 2.0 * PI));
}

#[test]
fn ellipse_perimeter_against_simpson() {
    let o = ellipse_perimeter(2.0, 1.0);
    let s = adaptive_simpson(&|t: f64| (4.0 * t.sin().powi(2) + t.cos().powi(2)).sqrt(), 0.0, 2.0 * PI, 1e-13);
    assert!((o - s).abs() < 1e-10);
    assert!((o - 9.688_448_220_547_674).abs() < 1e-10);
    let g = make_curve(&CurveShape::Ellipse { a: 2.0, b: 1.0 }, 128).unwrap();
    assert!((g.perimeter() - o).abs() < 1e-10);
}

#[test]
fn kite_is_simple() {
    assert!(polygon_is_simple(kite(128).nodes()));
    assert!(polygon_is_simple(kite(1024).nodes()));
}

#[test]
fn rejects_bad_discretizations() {
    let c = CurveShape::Circle { radius: 1.0 };
    assert!(make_curve(&c, 7).is_err());
    assert!(make_curve(&c, 6).is_err());
    assert!(make_curve(&CurveShape::Circle { radius: 0.0 }, 16).is_err());
    assert!(make_curve(&CurveShape::Ellipse { a: 1.0, b: f64::NAN }, 16).is_err());
}

#[test]
fn screen_examples() {
    let g = circle(64);
    let s = make_screen(&g, (0.0, PI)).unwrap();
    assert_eq!(s.n_active(), 32);
    let idx = s.active_indices();
    assert!(idx.windows(2).all(|w| w[1] == w[0] + 1));
    assert!(matches!(make_screen(&g, (0.0, 2.0 * PI)), Err(Error::Screen(_))));
    assert!(matches!(make_screen(&g, (0.3, 0.35)), Err(Error::Screen(_))));
    assert!(make_screen(&g, (1.0, 0.5)).is_err());
}

#[test]
fn screen_wrapping_interval_is_contiguous() {
    let g = circle(64);
    let s = make_screen(&g, (1.5 * PI, 2.5 * PI)).unwrap();
    assert_eq!(s.n_active(), 32);
    let idx = s.active_indices();
    for w in idx.windows(2) {
        assert_eq!(w[1], (w[0] + 1) % 64);
    }
}

#[test]
fn probe_examples() {
    let ring = make_probe([5.0, 0.0], 1.0, 32, ProbeLayout::Ring).unwrap();
    assert_eq!(ring.len(), 32);
    assert!(ring.points().iter().all(|p| (dist(*p, [5.0, 0.0]) - 1.0).abs() < 1e-14));
    assert!(ring.weights().iter().all(|w| *w > 0.0));

    let disk = make_probe([0.0, 0.0], 1.0, 81, ProbeLayout::DiskGrid).unwrap();
    assert_eq!(disk.len(), 69);
    let area: f64 = disk.weights().iter().sum();
    assert!((area - PI).abs() < 0.05 * PI, "{area}");
    assert!(disk.points().iter().all(|p| dist(*p, [0.0, 0.0]) < 1.0));
    assert!(disk.weights().iter().all(|w| *w > 0.0));

    assert!(make_probe([0.0, 0.0], 1.0, 0, ProbeLayout::Ring).is_err());
    assert!(make_probe([0.0, 0.0], -1.0, 8, ProbeLayout::Ring).is_err());
    assert!(ProbeRegion::from_points(vec![[0.0, 0.0]], vec![0.0]).is_err());
}

#[test]
fn containment_examples() {
    let g = circle(64);
    assert!(g.contains([0.0, 0.0]).unwrap());
    assert!(!g.contains([2.0, 0.0]).unwrap());
    assert!(matches!(g.contains([1.0, 0.0]), Err(Error::BoundaryAmbiguity { .. })));

    let polygon = kite(1 << 16);
    let k = kite(128);
    let truth = ray_cast_contains(polygon.nodes(), [-1.2, 0.0]);
    // Frozen from the ray-casting oracle: the point lies in the notch between
    // the two wings, which reach x = -1 on the axis.
    assert!(!truth);
    assert_eq!(k.contains([-1.2, 0.0]).unwrap(), truth);
}

#[test]
fn separation_examples() {
    let g = circle(64);
    let ring = make_probe([0.0, 0.0], 4.0, 32, ProbeLayout::Ring).unwrap();
    assert!(validate_separation(&g, &ring, 0.5).unwrap());
    let inside = make_probe([0.0, 0.0], 0.5, 16, ProbeLayout::Ring).unwrap();
    assert!(!validate_separation(&g, &inside, 0.1).unwrap());
    let straddle = make_probe([1.0, 0.0], 0.3, 16, ProbeLayout::Ring).unwrap();
    assert!(!validate_separation(&g, &straddle, 0.01).unwrap());
    assert!(validate_separation(&g, &ring, 0.0).is_err());
}

#[test]
fn separation_decided_by_distance_near_margin() {
    let g = circle(256);
    let margin = 0.5;
    let near = ProbeRegion::from_points(vec![[1.5 - 1e-6, 0.0]], vec![1.0]).unwrap();
    let far = ProbeRegion::from_points(vec![[1.5 + 1e-6, 0.0]], vec![1.0]).unwrap();
    assert!(!validate_separation(&g, &near, margin).unwrap());
    assert!(validate_separation(&g, &far, margin).unwrap());
}

#[test]
fn grid_layout_and_coverage() {
    let grid = EvaluationGrid::new([-1.0, 1.0, -2.0, 2.0], 3).unwrap();
    assert_eq!(grid.len(), 9);
    assert_eq!(grid.points()[1], [0.0, -2.0]);
    assert_eq!(grid.points()[3], [-1.0, 0.0]);
    assert!(EvaluationGrid::new([-1.0, 1.0, -1.0, 1.0], 1).is_err());
    assert!(EvaluationGrid::covering(&circle(32), [-1.0, 1.0, -1.0, 1.0], 8).is_err());
    assert!(EvaluationGrid::covering(&circle(32), [-1.1, 1.1, -1.1, 1.1], 8).is_ok());
}

#[test]
fn closest_point_on_ellipse() {
    let g = make_curve(&CurveShape::Ellipse { a: 2.0, b: 1.0 }, 64).unwrap();
    let (_, q, d) = g.closest_point([0.0, 3.0]);
    assert!(q[0].abs() < 1e-6 && (q[1] - 1.0).abs() < 1e-12);
    assert!((d - 2.0).abs() < 1e-12);
}

#[test]
fn translated_curve() {
    let g = make_curve_at(&CurveShape::Circle { radius: 1.0 }, [3.0, -1.0], 32).unwrap();
    assert!(g.contains([3.0, -1.0]).unwrap());
    assert!(!g.contains([0.0, 0.0]).unwrap());
    assert_eq!(g.center(), [3.0, -1.0]);
}

#[test]
fn frame_invariants_for_all_shapes() {
    for shape in shapes() {
        let g = make_curve(&shape, 128).unwrap();
        for (t, nu) in g.tangents().iter().zip(g.normals()) {
            assert!((nu[0].hypot(nu[1]) - 1.0).abs() < 1e-12);
            let tn = t[0].hypot(t[1]);
            assert!((t[0] * nu[0] + t[1] * nu[1]).abs() <= 1e-10 * tn.max(1.0));
        }
        assert!(g.weights().iter().all(|w| *w > 0.0));
        let (q0, _) = shape.eval(0.0);
        let (q1, _) = shape.eval(2.0 * PI);
        assert!(dist(q0, q1) < 1e-12);
    }
}

#[test]
fn perimeter_converges_spectrally() {
    for shape in shapes() {
        let a = make_curve(&shape, 128).unwrap().perimeter();
        let b = make_curve(&shape, 256).unwrap().perimeter();
        assert!((a - b).abs() < 1e-8 * b, "{shape:?}");
    }
}

#[test]
fn normals_point_outward() {
    for shape in shapes() {
        let g = make_curve(&shape, 64).unwrap();
        for (q, nu) in g.nodes().iter().zip(g.normals()) {
            let eps = 1e-3;
            assert!(!g.contains([q[0] + eps * nu[0], q[1] + eps * nu[1]]).unwrap(), "{shape:?}");
            assert!(g.contains([q[0] - eps * nu[0], q[1] - eps * nu[1]]).unwrap(), "{shape:?}");
        }
    }
}

proptest! {
    #[test]
    fn containment_stable_under_refinement(x in -2.5f64..2.5, y in -2.5f64..2.5, which in 0usize..4) {
        let shape = shapes()[which].clone();
        let coarse = make_curve(&shape, 32).unwrap();
        prop_assume!(coarse.distance_to([x, y]) > 1e-3);
        let fine = make_curve(&shape, 512).unwrap();
        prop_assert_eq!(coarse.contains([x, y]).unwrap(), fine.contains([x, y]).unwrap());
    }

    #[test]
    fn containment_matches_ray_cast(x in -2.5f64..2.5, y in -2.5f64..2.5, which in 0usize..4) {
        let shape = shapes()[which].clone();
        let g = make_curve(&shape, 64).unwrap();
        prop_assume!(g.distance_to([x, y]) > 1e-3);
        let dense = make_curve(&shape, 1 << 14).unwrap();
        prop_assert_eq!(g.contains([x, y]).unwrap(), ray_cast_contains(dense.nodes(), [x, y]));
    }

    #[test]
    fn screen_membership(a in 0.0f64..6.0, len in 0.5f64..5.5) {
        let g = circle(64);
        let s = make_screen(&g, (a, a + len)).unwrap();
        prop_assert!(s.n_active() >= 4);
        let idx = s.active_indices();
        for w in idx.windows(2) {
            prop_assert_eq!(w[1], (w[0] + 1) % 64);
        }
        for (j, t) in g.params().iter().enumerate() {
            let inside = (t - a).rem_euclid(2.0 * PI) < len;
            prop_assert_eq!(s.active_mask()[j], inside);
        }
    }

    #[test]
    fn ring_probe_separated(r in 1.6f64..10.0, n in 8usize..100) {
        let g = circle(64);
        let p = make_probe([0.0, 0.0], r, n, ProbeLayout::Ring).unwrap();
        prop_assert!(validate_separation(&g, &p, 0.5).unwrap());
    }
}
