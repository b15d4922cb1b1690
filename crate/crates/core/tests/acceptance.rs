//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use lapfm::boundary_ops::*;
use lapfm::cli::output::parse_pgm;
use lapfm::cli::{run_reconstruct, ReconstructMetrics, Scenario, VerifyReport};
use lapfm::data_operator::assemble_f;
use lapfm::geometry::*;
use lapfm::kernels::{Dim, SpectralParam};
use lapfm::oracle;
use lapfm::reconstruction::*;
use lapfm::selftest::run_selftest;
use lapfm::time_domain::*;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn lam(l: f64) -> SpectralParam {
    SpectralParam::free(l).unwrap()
}

fn curve(shape: &CurveShape, n: usize) -> BoundaryGeometry {
    make_curve(shape, n).unwrap()
}

const CIRCLE: CurveShape = CurveShape::Circle { radius: 1.0 };
const KITE: CurveShape = CurveShape::Kite { scale: 1.0 };

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn mode_value(a: &DMatrix<f64>, geom: &BoundaryGeometry, m: usize) -> f64 {
    let v = DVector::from_iterator(geom.len(), geom.params().iter().map(|t| (m as f64 * t).cos()));
    v.dot(&(a * &v)) / v.dot(&v)
}

fn circle_oracle_accuracy() -> Outcome {
    let kappa = 1.0;
    let mut oracle_gap: f64 = 0.0;
    for m in 0..=20 {
        let series = oracle::circle_sl_eigenvalue(m, kappa, 1.0);
        let quad = oracle::circle_sl_eigenvalue_quadrature(m, kappa, 1.0, |z| oracle::bessel_k_integral(0.0, z));
        oracle_gap = oracle_gap.max(rel(series, quad));
    }
    ensure!(oracle_gap < 1e-9, "series and quadrature oracles differ by {oracle_gap:e}");
    let dense = curve(&CIRCLE, 512);
    let s512 = assemble_gamma0_sl(&dense, lam(1.0)).map_err(e)?;
    let mut dense_gap: f64 = 0.0;
    for m in 0..=20 {
        dense_gap = dense_gap.max(rel(mode_value(&s512.matrix, &dense, m), oracle::circle_sl_eigenvalue(m as i32, kappa, 1.0)));
    }
    ensure!(dense_gap < 1e-9, "n=512 operator differs from the oracle by {dense_gap:e}");
    let start = Instant::now();
    let g = curve(&CIRCLE, 128);
    let s = assemble_gamma0_sl(&g, lam(1.0)).map_err(e)?;
    let secs = start.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for m in 0..=20 {
        worst = worst.max(rel(mode_value(&s.matrix, &g, m), oracle::circle_sl_eigenvalue(m as i32, kappa, 1.0)));
    }
    ensure!(worst <= 1e-6, "max rel error {worst:e} over m <= 20");
    ensure!(secs < 5.0, "assembly took {secs:.2}s");
    Ok(format!("max rel error {worst:.2e} (n=512: {dense_gap:.1e}), assembly {secs:.3}s"))
}

fn sign_suite() -> Outcome {
    let kinds = [
        (BoundaryCondition::dirichlet(), -1.0),
        (BoundaryCondition::neumann(), 1.0),
        (BoundaryCondition::alpha(Coefficient::Constant { value: 1.0 }), -1.0),
        (BoundaryCondition::theta(Coefficient::Constant { value: 1.0 }), 1.0),
    ];
    let mut cases = 0;
    for (name, shape) in [("circle", CIRCLE), ("kite", KITE)] {
        let g = curve(&shape, 128);
        for l in [1.0, 4.0] {
            for (bc, sign) in &kinds {
                let m = assemble_m(bc, &g, lam(l)).map_err(e)?;
                let sym = (&m.matrix + m.matrix.transpose()) * 0.5;
                let ev = SymmetricEigen::new(sym).eigenvalues;
                let ok = ev.iter().all(|v| v * sign > 0.0);
                ensure!(ok, "{name} {:?} at λ={l}: eigenvalues in [{:e}, {:e}]", bc.kind, ev.min(), ev.max());
                cases += 1;
            }
        }
    }
    Ok(format!("{cases}/16 operators with the expected strict sign"))
}

fn jump_relation() -> Outcome {
    let g = curve(&CIRCLE, 1024);
    let densities: [Vec<f64>; 3] = [
        vec![1.0; 1024],
        g.params().iter().map(|t| t.cos()).collect(),
        g.params().iter().map(|t| t.sin().exp()).collect(),
    ];
    let mut worst: f64 = 0.0;
    for phi in &densities {
        let r = jump_relation_residual(&g, None, lam(1.0), phi, JumpKind::SingleLayerNormalDerivative).map_err(e)?;
        worst = worst.max(r);
    }
    ensure!(worst <= 1e-4, "residual {worst:e}");
    Ok(format!("max residual {worst:.2e} over 3 densities"))
}

fn gram_identity() -> Outcome {
    let g = curve(&CIRCLE, 128);
    let r200 = gram_identity_residual(&g, lam(1.0), lam(2.0), 12.0, 200).map_err(e)?;
    let r400 = gram_identity_residual(&g, lam(1.0), lam(2.0), 12.0, 400).map_err(e)?;
    ensure!(r200 <= 1e-2, "residual {r200:e} at resolution 200");
    ensure!(r400 <= 0.5 * r200, "residual {r200:e} -> {r400:e} does not halve");
    Ok(format!("residual {r200:.2e} at 200, {r400:.2e} at 400"))
}

fn exterior_reproduction() -> Outcome {
    let targets: Vec<Point> = (0..8)
        .map(|k| {
            let t = PI * k as f64 / 4.0 + 0.1;
            [3.0 * t.cos(), 3.0 * t.sin()]
        })
        .collect();
    let cases = [
        ("circle", CIRCLE, 1e-6, [[0.0, 0.0], [0.3, 0.0], [-0.2, 0.4], [0.1, -0.5], [0.5, 0.5]], [[2.0, 0.0], [0.0, -2.5], [-1.8, 1.5]]),
        ("kite", KITE, 1e-4, [[0.0, 0.0], [-0.3, 0.0], [0.3, 0.5], [0.2, -0.6], [-0.6, 0.8]], [[2.0, 0.5], [0.0, -2.5], [-2.0, 1.5]]),
    ];
    let mut notes = Vec::new();
    for (name, shape, tol, inside, outside) in cases {
        let g = curve(&shape, 128);
        let mut worst: f64 = 0.0;
        for kind in [BcKind::Dirichlet, BcKind::Neumann] {
            for x in inside {
                ensure!(g.contains(x).map_err(e)?, "{name}: {x:?} is not inside");
                worst = worst.max(exterior_reproduction_residual(&g, kind, lam(2.0), x, &targets).map_err(e)?);
            }
        }
        ensure!(worst <= tol, "{name}: reproduction residual {worst:e} > {tol:e}");
        let probe = make_probe([0.0, 0.0], 4.0, 64, ProbeLayout::Ring).map_err(e)?;
        let f = assemble_f(&BoundaryCondition::dirichlet(), &g, &probe, lam(2.0)).map_err(e)?;
        let w = |x: Point| -> Result<f64, String> {
            let t = make_test_vector(&probe, x, lam(2.0), Dim::Two).map_err(e)?;
            picard_indicator(&f, &t, DEFAULT_TRUNCATION_FLOOR).map_err(e)
        };
        let mut w_in = f64::INFINITY;
        for x in inside {
            w_in = w_in.min(w(x)?);
        }
        let mut w_out: f64 = 0.0;
        for x in outside {
            ensure!(!g.contains(x).map_err(e)?, "{name}: {x:?} is not outside");
            w_out = w_out.max(w(x)?);
        }
        ensure!(w_in >= 10.0 * w_out, "{name}: min inside {w_in:e} vs max outside {w_out:e}");
        notes.push(format!("{name} residual {worst:.1e}, Picard ratio {:.0}", w_in / w_out));
    }
    Ok(notes.join("; "))
}

fn reconstruction_benchmarks() -> Outcome {
    let mut notes = Vec::new();
    for (name, shape, jmin) in [("circle", CIRCLE, 0.85), ("kite", KITE, 0.75)] {
        for bc in [BoundaryCondition::dirichlet(), BoundaryCondition::neumann()] {
            let start = Instant::now();
            let g = curve(&shape, 128);
            let probe = make_probe([0.0, 0.0], 4.0, 64, ProbeLayout::Ring).map_err(e)?;
            let f = assemble_f(&bc, &g, &probe, lam(2.0)).map_err(e)?;
            let grid = EvaluationGrid::covering(&g, [-2.0, 2.0, -2.0, 2.0], 64).map_err(e)?;
            let ind = sweep(&f, &probe, &grid, SweepMode::Picard, DEFAULT_TRUNCATION_FLOOR, Dim::Two).map_err(e)?;
            let s = segment(&ind, SegmentRule::default(), Some(&g), 0.1).map_err(e)?;
            let secs = start.elapsed().as_secs_f64();
            let (j, a) = (s.jaccard.unwrap_or(0.0), s.accuracy.unwrap_or(0.0));
            ensure!(a >= 0.9 && j >= jmin && secs < 60.0, "{name}/{:?}: accuracy {a:.3}, Jaccard {j:.3}, {secs:.1}s", bc.kind);
            notes.push(format!("{name}/{:?} J={j:.3} acc={a:.3} {secs:.1}s", bc.kind));
        }
    }
    Ok(notes.join("; "))
}

const SCREEN_SCENARIO: &str = r#"
schema_version = 1

[geometry]
shape = { kind = "circle", radius = 1.0 }
nodes = 256
screen = [0.0, 3.141592653589793]

[boundary_condition]
kind = "dirichlet"

[probe]
layout = "ring"
radius = 4.0
count = 64

[spectral]
lambda = 2.0

[screen_sweep]
curve = { kind = "circle", radius = 1.0 }
arc_length = 0.39269908169872414
count = 16
"#;

fn screen_benchmark() -> Outcome {
    let s = Scenario::from_toml(SCREEN_SCENARIO).map_err(e)?;
    let dir = tempfile::tempdir().map_err(e)?;
    let m = run_reconstruct(&s, dir.path()).map_err(e)?;
    let ratio = m.separation_ratio.ok_or("no separation ratio")?;
    ensure!(ratio >= 10.0, "arc ratio {ratio:.2}");
    Ok(format!("mean over arcs in Σ / mean over complement = {ratio:.1}"))
}

fn time_domain_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pulses = Vec::new();
    for eps in [0.01, 0.1] {
        for kind in [PulseKind::Bump, PulseKind::Box] {
            pulses.push(PulseProfile::new(eps, kind).map_err(e)?);
        }
    }
    let (mut cells, mut worst_slack) = (0, f64::INFINITY);
    for k in 0..20 {
        let dim = rng.random_range(6..=50);
        let ll = (k % 2) as f64;
        let model = SurrogateModel::random(dim, ll, &mut rng).map_err(e)?;
        let report = verify_bound(&model, &pulses, &[4.0, 9.0, 25.0], &[2.0, 5.0], 8).map_err(e)?;
        if let Some(c) = report.cells.iter().find(|c| !c.pass) {
            return Err(format!(
                "surrogate {k} (dim {dim}, λ_Λ={ll}): λ={} t∘={} ε={} {:?}: measured {:e} > bound {:e}",
                c.lambda, c.t_circ, c.epsilon, c.pulse, c.measured, c.bound
            ));
        }
        ensure!(envelope_check(&model, &report).map_err(e)?, "surrogate {k}: decay envelope violated");
        cells += report.cells.len();
        for c in &report.cells {
            worst_slack = worst_slack.min(c.slack.unwrap_or(f64::INFINITY));
        }
    }
    Ok(format!("{cells} cells, zero violations, smallest slack {worst_slack:.2}"))
}

fn laplace_and_trig() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let models: Vec<SurrogateModel> = (0..10)
        .map(|k| SurrogateModel::random(rng.random_range(6..=30), (k % 2) as f64, &mut rng))
        .collect::<lapfm::Result<_>>()
        .map_err(e)?;
    let (mut laplace, mut addition): (f64, f64) = (0.0, 0.0);
    for m in &models {
        laplace = laplace.max(laplace_identity_residual(&m.a_perturbed, 4.0, 10.0, 200).map_err(e)?);
        laplace = laplace.max(laplace_identity_residual(&m.a_free, 1.0, 10.0, 200).map_err(e)?);
        let a = &m.a_perturbed;
        for t in [0.3, 1.7] {
            for tc in [0.3, 1.7] {
                let lhs = sine_family(a, t + tc);
                let rhs = cosine_family(a, tc) * sine_family(a, t) + sine_family(a, tc) * cosine_family(a, t);
                addition = addition.max((&lhs - rhs).norm() / lhs.norm().max(1.0));
            }
        }
        let root = m.lambda_lambda.sqrt();
        for k in 1..=50 {
            let t = 0.1 * k as f64;
            let c = sym_norm(&cosine_family(a, t));
            ensure!(c <= (root * t).cosh() * (1.0 + 1e-12), "‖Cos({t})‖ = {c} exceeds cosh bound");
            let s = sym_norm(&sine_family(&m.a_free, t));
            ensure!(s <= t.min(1.0) * (1.0 + 1e-12), "‖Sin({t})‖ = {s} exceeds min(t, 1)");
        }
    }
    ensure!(laplace <= 1e-6, "Laplace residual {laplace:e}");
    ensure!(addition <= 1e-10, "addition residual {addition:e}");
    Ok(format!("Laplace {laplace:.1e}, addition {addition:.1e}, norm bounds hold"))
}

fn bin(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lapfm")).args(args).output().map_err(e)?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned()))
}

fn determinism_and_formats() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/circle_dirichlet.toml");
    let sc = scenario.to_str().unwrap();
    let mut files = 0;
    for (sub, names) in [
        ("forward", &["spectrum.csv", "data_operator.csv", "m_report.json"][..]),
        ("reconstruct", &["indicator.csv", "indicator.pgm", "metrics.json"][..]),
    ] {
        let (a, b) = (dir.path().join(format!("{sub}_a")), dir.path().join(format!("{sub}_b")));
        for o in [&a, &b] {
            let (code, err) = bin(&[sub, "--scenario", sc, "--out", o.to_str().unwrap()])?;
            ensure!(code == 0, "{sub} exited {code}: {err}");
        }
        for n in names {
            let (x, y) = (fs::read(a.join(n)).map_err(e)?, fs::read(b.join(n)).map_err(e)?);
            ensure!(x == y, "{sub}/{n} differs between runs");
            let text = String::from_utf8(x).map_err(e)?;
            match Path::new(n).extension().and_then(|s| s.to_str()) {
                Some("csv") => {
                    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
                    let mut width = None;
                    for rec in r.records() {
                        let rec = rec.map_err(e)?;
                        ensure!(*width.get_or_insert(rec.len()) == rec.len(), "{n}: ragged rows");
                    }
                }
                Some("pgm") => {
                    parse_pgm(&text).map_err(e)?;
                }
                _ => {
                    serde_json::from_str::<serde_json::Value>(&text).map_err(e)?;
                }
            }
            files += 1;
        }
    }
    let metrics: ReconstructMetrics =
        serde_json::from_str(&fs::read_to_string(dir.path().join("reconstruct_a/metrics.json")).map_err(e)?).map_err(e)?;
    ensure!(metrics.jaccard.is_some(), "metrics lack a Jaccard index");
    let v = dir.path().join("verify");
    let (code, err) = bin(&["verify", "--out", v.to_str().unwrap()])?;
    ensure!(code == 0, "verify exited {code}: {err}");
    let report: VerifyReport = serde_json::from_str(&fs::read_to_string(v.join("verify.json")).map_err(e)?).map_err(e)?;
    ensure!(report.all_pass, "verify report has failures");
    let summary = run_selftest();
    ensure!(summary.passed == summary.registered, "selftest {}/{}", summary.passed, summary.registered);
    ensure!(summary.seconds < 300.0, "selftest took {:.1}s", summary.seconds);
    Ok(format!(
        "{files} artifacts byte-identical and parsed, verify green, selftest {}/{} in {:.1}s",
        summary.passed, summary.registered, summary.seconds
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("circle oracle accuracy", circle_oracle_accuracy),
        ("sign definiteness", sign_suite),
        ("jump relation", jump_relation),
        ("Gram identity", gram_identity),
        ("exterior reproduction and range test", exterior_reproduction),
        ("reconstruction benchmarks", reconstruction_benchmarks),
        ("screen benchmark", screen_benchmark),
        ("time-domain bound", time_domain_bound),
        ("Laplace and trigonometric identities", laplace_and_trig),
        ("determinism and formats", determinism_and_formats),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:2} {name}: {detail} [{secs:.1}s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:2} {name}: {why} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
