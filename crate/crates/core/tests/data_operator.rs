use lapfm::boundary_ops::{symmetry_residual, BoundaryCondition, Coefficient};
use lapfm::data_operator::*;
use lapfm::geometry::*;
use lapfm::kernels::SpectralParam;
use lapfm::oracle;
use lapfm::Error;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn lam(l: f64) -> SpectralParam {
    SpectralParam::free(l).unwrap()
}

fn circle(n: usize) -> BoundaryGeometry {
    make_curve(&CurveShape::Circle { radius: 1.0 }, n).unwrap()
}

fn kite(n: usize) -> BoundaryGeometry {
    make_curve(&CurveShape::Kite { scale: 1.0 }, n).unwrap()
}

fn ring(r: f64, n: usize) -> ProbeRegion {
    make_probe([0.0, 0.0], r, n, ProbeLayout::Ring).unwrap()
}

fn kinds() -> Vec<(BoundaryCondition, f64)> {
    vec![
        (BoundaryCondition::dirichlet(), -1.0),
        (BoundaryCondition::neumann(), 1.0),
        (BoundaryCondition::alpha(Coefficient::Constant { value: 1.0 }), -1.0),
        (BoundaryCondition::theta(Coefficient::Constant { value: 1.0 }), 1.0),
    ]
}

#[test]
fn congruence_sign_law() {
    for g in [circle(64), kite(64)] {
        for (bc, sign) in kinds() {
            let f = assemble_f(&bc, &g, &ring(4.0, 32), lam(2.0)).unwrap();
            let tol = 1e-13 * f.norm();
            assert!(f.eigenvalues.iter().all(|m| m * sign > -tol), "{:?}", bc.kind);
            assert!(f.eigenvalues[0] * sign > 0.0);
        }
    }
}

#[test]
fn symmetric_with_orthonormal_eigenvectors() {
    let probe = make_probe([4.0, 1.0], 1.0, 64, ProbeLayout::DiskGrid).unwrap();
    let f = assemble_f(&BoundaryCondition::neumann(), &kite(64), &probe, lam(1.0)).unwrap();
    assert!(symmetry_residual(&f.matrix) <= 1e-10);
    let n = probe.len();
    for a in 0..n {
        let va = f.raw_eigenvector(a);
        for b in 0..n {
            let vb = f.raw_eigenvector(b);
            let ip: f64 = va.iter().zip(&vb).zip(probe.weights()).map(|((x, y), w)| x * y * w).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((ip - want).abs() < 1e-10);
        }
    }
}

#[test]
fn spectral_reconstruction() {
    let probe = ring(4.0, 32);
    let f = assemble_f(&BoundaryCondition::dirichlet(), &circle(64), &probe, lam(2.0)).unwrap();
    let v = &f.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(f.eigenvalues.clone())) * v.transpose();
    assert!((rebuilt - &f.matrix).norm() <= 1e-10 * f.norm());

    let raw = f.raw_matrix();
    let n = probe.len();
    let mut sum = DMatrix::zeros(n, n);
    for k in 0..n {
        let vk = f.raw_eigenvector(k);
        for i in 0..n {
            for j in 0..n {
                sum[(i, j)] += f.eigenvalues[k] * vk[i] * vk[j] * probe.weights()[j];
            }
        }
    }
    assert!((sum - raw).norm() <= 1e-10 * f.norm());
}

#[test]
fn spectrum_sorted_and_decaying() {
    let f = assemble_f(&BoundaryCondition::dirichlet(), &circle(64), &ring(4.0, 32), lam(1.0)).unwrap();
    assert!(f.eigenvalues.windows(2).all(|w| w[0].abs() >= w[1].abs()));
    assert!(f.eigenvalues[9].abs() / f.eigenvalues[0].abs() < 1e-4);
}

#[test]
fn circle_ring_spectrum_matches_modes() {
    for (bc, neumann) in [(BoundaryCondition::dirichlet(), false), (BoundaryCondition::neumann(), true)] {
        let f = assemble_f(&bc, &circle(64), &ring(4.0, 32), lam(2.0)).unwrap();
        // Mode 0 is simple and every other mode is a cos/sin pair.
        let mut want = vec![oracle::circle_data_eigenvalue(neumann, 0, 2f64.sqrt(), 1.0, 4.0)];
        for m in 1..6 {
            let v = oracle::circle_data_eigenvalue(neumann, m, 2f64.sqrt(), 1.0, 4.0);
            want.extend([v, v]);
        }
        for (k, w) in want.iter().enumerate() {
            let r = (f.eigenvalues[k] - w).abs() / w.abs();
            assert!(r < 1e-8, "neumann={neumann} k={k}: {} vs {w}", f.eigenvalues[k]);
        }
    }
    // Frozen from the mode formula: at λ = 2 the tenth eigenvalue is only
    // 2.06e-4 of the first, the 1e-4 decay needs λ ≤ 1 here.
    let d = |m| oracle::circle_data_eigenvalue(false, m, 2f64.sqrt(), 1.0, 4.0);
    assert!((d(5) / d(0) - 2.060_251_420_003e-4).abs() < 1e-12);
    assert!((d(0) + 8.521_913_929_196_03e-5).abs() < 1e-17);
}

#[test]
fn rank_bounded_by_boundary_nodes() {
    let g = circle(16);
    let f = assemble_f(&BoundaryCondition::dirichlet(), &g, &ring(2.5, 64), lam(1.0)).unwrap();
    assert_eq!(f.boundary_rank, 16);
    let tol = 1e-12 * f.norm();
    assert!(f.eigenvalues.iter().filter(|m| m.abs() > tol).count() <= 16);
}

#[test]
fn probe_refinement_converges() {
    let g = circle(64);
    let a = assemble_f(&BoundaryCondition::dirichlet(), &g, &ring(4.0, 32), lam(2.0)).unwrap();
    let b = assemble_f(&BoundaryCondition::dirichlet(), &g, &ring(4.0, 64), lam(2.0)).unwrap();
    let r = (a.eigenvalues[0] - b.eigenvalues[0]).abs() / b.eigenvalues[0].abs();
    assert!(r <= 1e-4, "{r}");
}

#[test]
fn far_probe_is_exponentially_small() {
    let g = circle(64);
    let l = 1.0f64;
    let near = assemble_f(&BoundaryCondition::dirichlet(), &g, &ring(5.0, 64), lam(l)).unwrap();
    let far = assemble_f(&BoundaryCondition::dirichlet(), &g, &ring(50.0, 64), lam(l)).unwrap();
    let diam = g.diameter();
    let bound = (-2.0 * l.sqrt() * (50.0 - 5.0 - diam)).exp();
    assert!(far.norm() > 0.0);
    assert!(far.norm() <= bound * near.norm(), "{} vs {}", far.norm(), bound * near.norm());
}

#[test]
fn screen_interval_continuity() {
    let g = circle(256);
    let probe = ring(4.0, 32);
    let base = make_screen(&g, (0.0, std::f64::consts::PI)).unwrap();
    let f0 = assemble_f(&BoundaryCondition::dirichlet().with_screen(base), &g, &probe, lam(2.0)).unwrap();
    let mut last = f64::INFINITY;
    for delta in [0.8, 0.4, 0.2, 0.1, 0.05] {
        let s = make_screen(&g, (0.0, std::f64::consts::PI + delta)).unwrap();
        let f = assemble_f(&BoundaryCondition::dirichlet().with_screen(s), &g, &probe, lam(2.0)).unwrap();
        let d = (&f.matrix - &f0.matrix).norm();
        assert!(d < last, "delta {delta}: {d}");
        last = d;
    }
    assert!(last < 0.1 * f0.norm());
}

#[test]
fn rejects_probe_near_obstacle() {
    let g = circle(64);
    let res = assemble_f(&BoundaryCondition::dirichlet(), &g, &ring(1.05, 16), lam(1.0));
    assert!(matches!(res, Err(Error::Geometry(_))));
}

#[test]
fn noise_contract() {
    let f = assemble_f(&BoundaryCondition::dirichlet(), &circle(32), &ring(4.0, 24), lam(2.0)).unwrap();
    let z = f.add_noise(0.0, 3).unwrap();
    assert_eq!(z.matrix, f.matrix);
    let a = f.add_noise(0.05, 3).unwrap();
    let b = f.add_noise(0.05, 3).unwrap();
    let c = f.add_noise(0.05, 4).unwrap();
    assert_eq!(a.matrix, b.matrix);
    assert_ne!(a.matrix, c.matrix);
    assert_eq!(symmetry_residual(&a.matrix), 0.0);
    let e = &a.matrix - &f.matrix;
    let en = SymmetricEigen::new(e).eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((en - 0.05 * f.norm()).abs() < 1e-10 * f.norm());
    assert!(f.add_noise(-1.0, 0).is_err());
}

#[test]
fn spectrum_csv_round_trips() {
    let f = assemble_f(&BoundaryCondition::neumann(), &circle(32), &ring(4.0, 16), lam(2.0)).unwrap();
    let mut buf = Vec::new();
    f.write_spectrum_csv(&mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rd.headers().unwrap(), vec!["k", "mu"]);
    let rows: Vec<(usize, f64)> = rd.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 16);
    for (i, (k, mu)) in rows.iter().enumerate() {
        assert_eq!(*k, i + 1);
        assert_eq!(*mu, f.eigenvalues[i]);
    }

    let mut buf = Vec::new();
    f.write_matrix_csv(&mut buf).unwrap();
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(buf.as_slice());
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.unwrap();
        assert_eq!(rec.len(), 16);
        for (j, v) in rec.iter().enumerate() {
            assert_eq!(v.parse::<f64>().unwrap(), f.matrix[(i, j)]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sign_law_for_random_configurations(
        l in 0.2f64..6.0,
        r in 2.5f64..6.0,
        n in 8usize..40,
        kind in 0usize..4,
        theta in 0.0f64..6.28,
    ) {
        let g = kite(48);
        let probe = make_probe([r * theta.cos(), r * theta.sin()], 0.5, n, ProbeLayout::Ring).unwrap();
        let (bc, sign) = kinds()[kind].clone();
        let f = assemble_f(&bc, &g, &probe, lam(l)).unwrap();
        prop_assert!(symmetry_residual(&f.matrix) <= 1e-10);
        let tol = 1e-12 * f.norm();
        prop_assert!(f.eigenvalues.iter().all(|m| m * sign > -tol));
    }
}
