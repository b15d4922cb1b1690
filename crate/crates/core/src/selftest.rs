//! Embedded example suite run by `selftest`.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary_ops::*;
use crate::data_operator::assemble_f;
use crate::geometry::*;
use crate::kernels::*;
use crate::oracle;
use crate::reconstruction::*;
use crate::time_domain::*;

type Outcome = std::result::Result<(), String>;

pub struct Example {
    pub name: &'static str,
    pub run: fn() -> Outcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleResult {
    pub name: String,
    pub pass: bool,
    pub message: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestSummary {
    pub registered: usize,
    pub passed: usize,
    pub results: Vec<ExampleResult>,
    pub seconds: f64,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn e<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn lam(l: f64) -> SpectralParam {
    SpectralParam::free(l).expect("positive lambda")
}

fn circle(n: usize) -> BoundaryGeometry {
    make_curve(&CurveShape::Circle { radius: 1.0 }, n).expect("circle")
}

fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = nalgebra::SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Every registered example.
pub fn examples() -> Vec<Example> {
    vec![
        Example { name: "kernels/k_half_order", run: || {
            let v = e(bessel_k(0.5, 2.0))?;
            ensure((v - 0.119938).abs() < 1e-6, || format!("{v}"))
        }},
        Example { name: "kernels/k0_at_1", run: || {
            let v = e(bessel_k(0.0, 1.0))?;
            ensure(rel(v, oracle::bessel_k_integral(0.0, 1.0)) < 1e-12 && (v - 0.4210244382).abs() < 1e-10, || format!("{v}"))
        }},
        Example { name: "kernels/k1_at_1", run: || {
            let v = e(bessel_k(1.0, 1.0))?;
            ensure(rel(v, oracle::bessel_k_integral(1.0, 1.0)) < 1e-12 && (v - 0.6019072302).abs() < 1e-10, || format!("{v}"))
        }},
        Example { name: "kernels/fundamental_3d", run: || {
            let v = e(fundamental_solution(Dim::Three, lam(1.0), &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]))?;
            ensure(rel(v, (-1.0f64).exp() / (4.0 * PI)) < 1e-14, || format!("{v}"))
        }},
        Example { name: "kernels/fundamental_2d", run: || {
            let v = e(fundamental_solution(Dim::Two, lam(4.0), &[0.0, 0.0], &[1.0, 0.0]))?;
            ensure(rel(v, oracle::bessel_k_integral(0.0, 2.0) / (2.0 * PI)) < 1e-12 && (v - 0.01812677).abs() < 1e-7, || format!("{v}"))
        }},
        Example { name: "kernels/symmetry", run: || {
            let a = e(fundamental_solution(Dim::Three, lam(1.0), &[0.1, 0.2, 0.3], &[1.0, -0.5, 0.2]))?;
            let b = e(fundamental_solution(Dim::Three, lam(1.0), &[1.0, -0.5, 0.2], &[0.1, 0.2, 0.3]))?;
            ensure(a == b, || format!("{a} vs {b}"))
        }},
        Example { name: "kernels/gradient_fd", run: || {
            let (x, y) = ([0.3, -0.2], [1.4, 0.9]);
            let g = e(fundamental_solution_gradient(Dim::Two, lam(1.7), &x, &y))?;
            let h = 1e-6;
            for c in 0..2 {
                let (mut p, mut m) = (y, y);
                p[c] += h;
                m[c] -= h;
                let fd = (e(fundamental_solution(Dim::Two, lam(1.7), &x, &p))? - e(fundamental_solution(Dim::Two, lam(1.7), &x, &m))?) / (2.0 * h);
                ensure(rel(g[c], fd) < 1e-6, || format!("component {c}: {} vs {fd}", g[c]))?;
            }
            Ok(())
        }},
        Example { name: "kernels/gradient_radial_2d", run: || {
            let g = e(fundamental_solution_gradient(Dim::Two, lam(1.0), &[0.0, 0.0], &[2.0, 0.0]))?;
            let expect = oracle::bessel_k_integral(1.0, 2.0) / (2.0 * PI);
            ensure(rel(g[0].hypot(g[1]), expect) < 1e-12 && (expect - 0.02226035).abs() < 1e-7, || format!("{g:?}"))
        }},
        Example { name: "kernels/bessel_form_3d", run: || {
            let r = 1.3;
            let a = e(fundamental_solution_bessel_form(Dim::Three, lam(2.0), r))?;
            let b = (-(2.0f64).sqrt() * r).exp() / (4.0 * PI * r);
            ensure(rel(a, b) < 1e-12, || format!("{a} vs {b}"))
        }},
        Example { name: "geometry/circle_perimeter", run: || {
            ensure((circle(64).perimeter() - 2.0 * PI).abs() < 1e-10, || "perimeter".into())
        }},
        Example { name: "geometry/ellipse_perimeter", run: || {
            let g = e(make_curve(&CurveShape::Ellipse { a: 2.0, b: 1.0 }, 128))?;
            let o = oracle::ellipse_perimeter(2.0, 1.0);
            ensure(rel(g.perimeter(), o) < 1e-10 && (o - 9.6884482).abs() < 1e-6, || format!("{} vs {o}", g.perimeter()))
        }},
        Example { name: "geometry/kite_simple", run: || {
            let g = e(make_curve(&CurveShape::Kite { scale: 1.0 }, 128))?;
            ensure(oracle::polygon_is_simple(g.nodes()), || "self-intersection".into())
        }},
        Example { name: "geometry/half_screen", run: || {
            let s = e(make_screen(&circle(64), (0.0, PI)))?;
            ensure(s.n_active() == 32, || format!("{}", s.n_active()))
        }},
        Example { name: "geometry/screen_rejections", run: || {
            let g = circle(64);
            ensure(make_screen(&g, (0.0, 2.0 * PI)).is_err() && make_screen(&g, (0.3, 0.35)).is_err(), || "accepted".into())
        }},
        Example { name: "geometry/ring_probe", run: || {
            let p = e(make_probe([5.0, 0.0], 1.0, 32, ProbeLayout::Ring))?;
            ensure(p.points().iter().all(|x| (dist(*x, [5.0, 0.0]) - 1.0).abs() < 1e-14), || "radius".into())
        }},
        Example { name: "geometry/disk_probe", run: || {
            let p = e(make_probe([0.0, 0.0], 1.0, 81, ProbeLayout::DiskGrid))?;
            let s: f64 = p.weights().iter().sum();
            ensure(p.len() == 69 && rel(s, PI) < 0.05, || format!("{} points, area {s}", p.len()))
        }},
        Example { name: "geometry/containment", run: || {
            let g = circle(64);
            ensure(e(g.contains([0.0, 0.0]))? && !e(g.contains([2.0, 0.0]))?, || "circle".into())?;
            let k = e(make_curve(&CurveShape::Kite { scale: 1.0 }, 128))?;
            let dense = e(make_curve(&CurveShape::Kite { scale: 1.0 }, 8192))?;
            let truth = oracle::ray_cast_contains(dense.nodes(), [-1.2, 0.0]);
            ensure(e(k.contains([-1.2, 0.0]))? == truth, || "kite".into())
        }},
        Example { name: "geometry/separation", run: || {
            let g = circle(64);
            let ring = e(make_probe([0.0, 0.0], 5.0, 32, ProbeLayout::Ring))?;
            let inside = e(make_probe([0.0, 0.0], 0.5, 32, ProbeLayout::Ring))?;
            ensure(e(validate_separation(&g, &ring, 0.5))? && !e(validate_separation(&g, &inside, 0.1))?, || "separation".into())
        }},
        Example { name: "boundary_ops/sl_circle_m0", run: || {
            let s = e(assemble_gamma0_sl(&circle(64), lam(1.0)))?;
            let ev = eigenvalues(&s.matrix);
            let expect = oracle::circle_sl_eigenvalue(0, 1.0, 1.0);
            ensure(ev.iter().any(|v| rel(*v, expect) < 1e-10) && (expect - 0.5330447).abs() < 1e-6, || format!("{expect}"))?;
            ensure(ev[0] > 0.0, || "not positive".into())
        }},
        Example { name: "boundary_ops/dl_circle_negative", run: || {
            let t = e(assemble_gamma1_dl(&circle(64), lam(1.0)))?;
            let ev = eigenvalues(&t.matrix);
            let m1 = oracle::circle_hypersingular_eigenvalue(1, 1.0, 1.0);
            ensure(*ev.last().unwrap() < 0.0 && symmetry_residual(&t.matrix) < 1e-10, || "sign".into())?;
            ensure(ev.iter().any(|v| rel(*v, m1) < 1e-8), || format!("mode 1 {m1}"))
        }},
        Example { name: "boundary_ops/m_signs", run: || {
            let g = circle(64);
            let d = sign_check(&e(assemble_m(&BoundaryCondition::dirichlet(), &g, lam(1.0)))?);
            let th = sign_check(&e(assemble_m(&BoundaryCondition::theta(Coefficient::Constant { value: 1.0 }), &g, lam(1.0)))?);
            ensure(d.definiteness == Definiteness::DefiniteNegative && th.definiteness == Definiteness::DefinitePositive, || format!("{d:?} {th:?}"))
        }},
        Example { name: "boundary_ops/screen_submatrix", run: || {
            let g = circle(64);
            let s = e(make_screen(&g, (0.0, PI)))?;
            let full = e(assemble_m(&BoundaryCondition::dirichlet(), &g, lam(1.0)))?;
            let c = e(assemble_m(&BoundaryCondition::dirichlet().with_screen(s.clone()), &g, lam(1.0)))?;
            let idx = s.active_indices();
            let ok = (0..idx.len()).all(|i| (0..idx.len()).all(|j| c.matrix[(i, j)] == full.matrix[(idx[i], idx[j])]));
            ensure(ok, || "not a principal submatrix".into())
        }},
        Example { name: "boundary_ops/inverse", run: || {
            let m = e(assemble_m(&BoundaryCondition::dirichlet(), &circle(64), lam(1.0)))?;
            let inv = e(invert_m(&m))?;
            let r = (&m.matrix * &inv.matrix - DMatrix::identity(64, 64)).norm();
            ensure(r < 1e-8, || format!("{r}"))
        }},
        Example { name: "boundary_ops/potential_decay", run: || {
            let g = circle(64);
            let one = vec![1.0; 64];
            let v = e(evaluate_potential(&g, PotentialKind::Single, &one, &[[3.0, 0.0], [2.0, 0.0], [10.0, 0.0]], lam(1.0)))?;
            let exact = 2.0 * PI * oracle::bessel_i_series(0, 1.0) * oracle::bessel_k_integral(0.0, 3.0) / (2.0 * PI);
            ensure(v[2] < v[1] && rel(v[0], exact) < 1e-10, || format!("{v:?} vs {exact}"))
        }},
        Example { name: "boundary_ops/exterior_reproduction", run: || {
            let g = circle(64);
            let targets: Vec<Point> = (0..8).map(|k| { let t = PI * k as f64 / 4.0; [3.0 * t.cos(), 3.0 * t.sin()] }).collect();
            let r = e(exterior_reproduction_residual(&g, BcKind::Dirichlet, lam(1.0), [0.3, 0.0], &targets))?;
            ensure(r < 1e-6, || format!("{r}"))
        }},
        Example { name: "boundary_ops/jump_relation", run: || {
            let g = circle(1024);
            let one = vec![1.0; 1024];
            let r = e(jump_relation_residual(&g, None, lam(1.0), &one, JumpKind::SingleLayerNormalDerivative))?;
            ensure(r < 1e-4, || format!("{r}"))
        }},
        Example { name: "data_operator/signs", run: || {
            let g = circle(64);
            let p = e(make_probe([0.0, 0.0], 4.0, 32, ProbeLayout::Ring))?;
            let fd = e(assemble_f(&BoundaryCondition::dirichlet(), &g, &p, lam(2.0)))?;
            let fnn = e(assemble_f(&BoundaryCondition::neumann(), &g, &p, lam(2.0)))?;
            let tol = |f: f64| 1e-12 * f;
            ensure(fd.eigenvalues.iter().all(|m| *m < tol(fd.norm())) && fnn.eigenvalues.iter().all(|m| *m > -tol(fnn.norm())), || "signs".into())
        }},
        Example { name: "data_operator/noise_determinism", run: || {
            let g = circle(32);
            let p = e(make_probe([0.0, 0.0], 4.0, 16, ProbeLayout::Ring))?;
            let f = e(assemble_f(&BoundaryCondition::dirichlet(), &g, &p, lam(2.0)))?;
            let a = e(f.add_noise(0.01, 9))?;
            let b = e(f.add_noise(0.01, 9))?;
            let z = e(f.add_noise(0.0, 9))?;
            ensure(a.matrix == b.matrix && z.matrix == f.matrix && symmetry_residual(&a.matrix) == 0.0, || "noise".into())
        }},
        Example { name: "reconstruction/picard_eigenvector", run: || {
            let g = circle(32);
            let p = e(make_probe([0.0, 0.0], 4.0, 16, ProbeLayout::Ring))?;
            let f = e(assemble_f(&BoundaryCondition::dirichlet(), &g, &p, lam(2.0)))?;
            let tv = TestVector { values: f.raw_eigenvector(0), weighted: f.eigenvectors.column(0).iter().cloned().collect(), source: TestSource::Point([0.0, 0.0]), lambda: lam(2.0) };
            let w = e(picard_indicator(&f, &tv, 1e-8))?;
            ensure(rel(w, f.eigenvalues[0].abs()) < 1e-10, || format!("{w}"))
        }},
        Example { name: "reconstruction/inside_outside", run: || {
            let g = circle(64);
            let p = e(make_probe([0.0, 0.0], 4.0, 64, ProbeLayout::Ring))?;
            let f = e(assemble_f(&BoundaryCondition::dirichlet(), &g, &p, lam(2.0)))?;
            let w = |x| -> std::result::Result<f64, String> { e(picard_indicator(&f, &e(make_test_vector(&p, x, lam(2.0), Dim::Two))?, 1e-8)) };
            let (a, b) = (w([0.0, 0.0])?, w([3.0, 0.0])?);
            ensure(a >= 10.0 * b, || format!("{a} vs {b}"))
        }},
        Example { name: "reconstruction/inf_equals_picard", run: || {
            let g = circle(64);
            let p = e(make_probe([0.0, 0.0], 4.0, 32, ProbeLayout::Ring))?;
            let f = e(assemble_f(&BoundaryCondition::neumann(), &g, &p, lam(2.0)))?;
            let tv = e(make_test_vector(&p, [0.2, 0.1], lam(2.0), Dim::Two))?;
            let k = e(retained_modes(&f, 1e-8))?;
            let a = e(picard_indicator_modes(&f, &tv, k))?;
            let b = e(inf_indicator(&f, &tv, k))?;
            ensure(rel(a, b) < 1e-8, || format!("{a} vs {b}"))
        }},
        Example { name: "time_domain/families", run: || {
            let a = DMatrix::from_diagonal_element(1, 1, -4.0);
            let c = cosine_family(&a, 0.7);
            let s0 = sine_family(&a, 0.0);
            ensure((c[(0, 0)] - (1.4f64).cos()).abs() < 1e-14 && s0[(0, 0)] == 0.0, || "scalar".into())
        }},
        Example { name: "time_domain/laplace_scalar", run: || {
            let a = DMatrix::from_diagonal_element(1, 1, -1.0);
            let r = e(laplace_identity_residual(&a, 1.0, 10.0, 200))?;
            ensure(r < 1e-10, || format!("{r}"))
        }},
        Example { name: "time_domain/lemma_constants", run: || {
            let b = e(lemma_bound(9.0, 0.0, 4.0, 2.0, 0.1))?;
            ensure(b.c2 == 4.0 && b.c3 == 2.0 && (b.c1 - 3.0).abs() < 1e-15, || format!("{b:?}"))
        }},
        Example { name: "time_domain/bound_holds", run: || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let m = e(SurrogateModel::random(18, 1.0, &mut rng))?;
            let pulses = [e(PulseProfile::new(0.1, PulseKind::Bump))?];
            let r = e(verify_bound(&m, &pulses, &[4.0, 9.0], &[2.0], 16))?;
            ensure(r.all_pass, || "violation".into())
        }},
        Example { name: "time_domain/sherman_morrison", run: || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let base = e(SurrogateModel::random(12, 0.0, &mut rng))?;
            let v = DMatrix::from_fn(12, 1, |i, _| if i < 4 { 1.0 / (1.0 + i as f64) } else { 0.0 });
            let c = -0.7;
            let pert = &base.a_free + &v * v.transpose() * c;
            let m = e(SurrogateModel::new(pert, base.a_free.clone(), 0.0, vec![true; 12]))?;
            let lam = 3.0;
            let f = e(assemble_f_ideal(&m, lam))?;
            let r0 = (DMatrix::identity(12, 12) * lam - &base.a_free).try_inverse().ok_or("singular")?;
            let u = &r0 * &v;
            let sm = &u * u.transpose() * (c / (1.0 - c * (v.transpose() * &u)[(0, 0)]));
            let err = (f - &sm).norm() / sm.norm();
            ensure(err < 1e-10, || format!("{err}"))
        }},
    ]
}

/// Runs every example, timing each.
pub fn run_selftest() -> SelftestSummary {
    let start = Instant::now();
    let list = examples();
    let mut results = Vec::with_capacity(list.len());
    for ex in &list {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(ex.run).unwrap_or_else(|_| Err("panicked".into()));
        results.push(ExampleResult {
            name: ex.name.into(),
            pass: outcome.is_ok(),
            message: outcome.err().unwrap_or_default(),
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    SelftestSummary {
        registered: list.len(),
        passed: results.iter().filter(|r| r.pass).count(),
        results,
        seconds: start.elapsed().as_secs_f64(),
    }
}
