//! Scenario-driven pipelines behind the command line tool.

pub mod output;
pub mod scenario;

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary_ops::{
    assemble_gamma0_sl, assemble_gamma1_dl, assemble_m, gram_identity_residual, jump_relation_residual, sign_check,
    symmetry_residual, BoundaryCondition, BoundaryOperator, Definiteness, JumpKind, OperatorKind, SignReport,
};
use crate::data_operator::{assemble_f, DataOperator};
use crate::error::{Error, Result};
use crate::geometry::{make_curve, BoundaryGeometry, CurveShape, ProbeRegion};
use crate::kernels::{Dim, SpectralParam};
use crate::reconstruction::{segment, sweep, sweep_arcs, SweepMode};
use crate::time_domain::{laplace_identity_residual, verify_bound, BoundCell, PulseKind, PulseProfile, SurrogateModel};

pub use scenario::Scenario;

/// Everything the forward problem produces.
pub struct ForwardData {
    pub geom: BoundaryGeometry,
    pub bc: BoundaryCondition,
    pub lambda: SpectralParam,
    pub probe: ProbeRegion,
    pub m: BoundaryOperator,
    pub f: DataOperator,
}

pub fn forward_data(s: &Scenario) -> Result<ForwardData> {
    let geom = s.build_geometry()?;
    let bc = s.build_bc(&geom)?;
    let lambda = s.lambda(&bc)?;
    let probe = s.build_probe()?;
    let m = assemble_m(&bc, &geom, lambda)?;
    let mut f = assemble_f(&bc, &geom, &probe, lambda)?;
    if let Some(level) = s.spectral.noise_level {
        f = f.add_noise(level, s.seed)?;
    }
    Ok(ForwardData {
        geom,
        bc,
        lambda,
        probe,
        m,
        f,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForwardSummary {
    pub operator: OperatorKind,
    pub lambda: f64,
    pub lambda_bound: f64,
    pub boundary_unknowns: usize,
    pub probe_points: usize,
    pub symmetry_residual: f64,
    pub sign: SignReport,
    pub spectrum_sign: Definiteness,
    pub noise_level: Option<f64>,
}

fn spectrum_sign(f: &DataOperator) -> Definiteness {
    let tol = 1e-12 * f.norm();
    let pos = f.eigenvalues.iter().any(|m| *m > tol);
    let neg = f.eigenvalues.iter().any(|m| *m < -tol);
    match (pos, neg) {
        (true, false) => Definiteness::DefinitePositive,
        (false, true) => Definiteness::DefiniteNegative,
        _ => Definiteness::Indefinite,
    }
}

/// Writes `m_report.json`, `spectrum.csv` and optionally `data_operator.csv`.
pub fn run_forward(s: &Scenario, out: &Path) -> Result<ForwardSummary> {
    let d = forward_data(s)?;
    let summary = ForwardSummary {
        operator: d.m.kind,
        lambda: d.lambda.lambda(),
        lambda_bound: d.bc.lambda_bound,
        boundary_unknowns: d.m.active.len(),
        probe_points: d.probe.len(),
        symmetry_residual: symmetry_residual(&d.m.matrix),
        sign: sign_check(&d.m),
        spectrum_sign: spectrum_sign(&d.f),
        noise_level: d.f.noise_level,
    };
    output::write_json(&out.join("m_report.json"), &summary)?;
    d.f.write_spectrum_csv(output::create(&out.join("spectrum.csv"))?)?;
    if s.outputs.operator_dump {
        d.f.write_matrix_csv(output::create(&out.join("data_operator.csv"))?)?;
    }
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructMetrics {
    pub mode: String,
    pub truncation_k: usize,
    pub eigenvalues: Vec<f64>,
    pub threshold: Option<f64>,
    pub jaccard: Option<f64>,
    pub accuracy: Option<f64>,
    pub scored_points: Option<usize>,
    /// Median indicator well inside over median well outside (grid mode),
    /// or mean over screen arcs over mean over complementary arcs.
    pub separation_ratio: Option<f64>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Offset of `t` from `a` on the circle, in `[-1e-9, 2π - 1e-9)`.
fn offset(t: f64, a: f64) -> f64 {
    let o = (t - a).rem_euclid(2.0 * PI);
    if o > 2.0 * PI - 1e-9 {
        o - 2.0 * PI
    } else {
        o
    }
}

/// Whether the arc `[start, end]` lies in `[a, a + len]` modulo `2π`.
pub fn arc_within(start: f64, end: f64, a: f64, len: f64) -> bool {
    let o = offset(start, a);
    o >= -1e-9 && o + (end - start) <= len + 1e-9
}

/// Grid mode writes `indicator.csv`, `indicator.pgm`, `metrics.json`.
/// Screen mode (a `screen_sweep` section) writes `arcs.csv` and
/// `metrics.json`.
pub fn run_reconstruct(s: &Scenario, out: &Path) -> Result<ReconstructMetrics> {
    let d = forward_data(s)?;
    let floor = s.spectral.truncation_floor;
    let metrics = if let Some(arcs) = s.build_arcs() {
        let sw = s.screen_sweep.as_ref().expect("arcs imply a sweep section");
        let values = sweep_arcs(&d.f, &d.probe, &arcs, floor, sw.n_quad)?;
        let screen = s.geometry.screen;
        let mut wr = csv::Writer::from_writer(output::create(&out.join("arcs.csv"))?);
        wr.write_record(["index", "start", "end", "W", "on_screen"])?;
        let (mut inside, mut outside) = (Vec::new(), Vec::new());
        for (k, (arc, w)) in arcs.iter().zip(&values).enumerate() {
            let tag = match screen {
                Some([a, b]) if arc_within(arc.start, arc.end, a, b - a) => {
                    inside.push(*w);
                    "inside"
                }
                Some([a, b]) if arc_within(arc.start, arc.end, b, 2.0 * PI - (b - a)) => {
                    outside.push(*w);
                    "outside"
                }
                Some(_) => "straddling",
                None => "unknown",
            };
            wr.write_record([k.to_string(), format!("{:e}", arc.start), format!("{:e}", arc.end), format!("{w:e}"), tag.into()])?;
        }
        wr.flush()?;
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let ratio = match (mean(&inside), mean(&outside)) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        };
        ReconstructMetrics {
            mode: "screen".into(),
            truncation_k: crate::reconstruction::retained_modes(&d.f, floor)?,
            eigenvalues: d.f.eigenvalues.clone(),
            threshold: None,
            jaccard: None,
            accuracy: None,
            scored_points: None,
            separation_ratio: ratio,
        }
    } else {
        let gs = s
            .grid
            .as_ref()
            .ok_or_else(|| Error::Validation("reconstruction needs a grid or screen_sweep section".into()))?;
        let grid = s.build_grid(&d.geom)?.expect("grid section present");
        let mut ind = sweep(&d.f, &d.probe, &grid, SweepMode::Both, floor, Dim::Two)?;
        let reference = d.bc.screen.is_none().then_some(&d.geom);
        let seg = segment(&ind, gs.segmentation, reference, gs.margin)?;
        ind.threshold = Some(seg.threshold);
        output::write_indicator_csv(&ind, output::create(&out.join("indicator.csv"))?)?;
        if s.outputs.heatmap {
            output::write_pgm(&ind, output::create(&out.join("indicator.pgm"))?)?;
        }
        let ratio = if reference.is_some() {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (x, w) in grid.points().iter().zip(&ind.picard_values) {
                if d.geom.distance_to(*x) <= 0.2 {
                    continue;
                }
                if d.geom.contains(*x)? {
                    a.push(*w);
                } else {
                    b.push(*w);
                }
            }
            match (median(a), median(b)) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                _ => None,
            }
        } else {
            None
        };
        ReconstructMetrics {
            mode: "grid".into(),
            truncation_k: ind.truncation_k,
            eigenvalues: d.f.eigenvalues.clone(),
            threshold: Some(seg.threshold),
            jaccard: seg.jaccard,
            accuracy: seg.accuracy,
            scored_points: Some(seg.scored_points),
            separation_ratio: ratio,
        }
    };
    output::write_json(&out.join("metrics.json"), &metrics)?;
    Ok(metrics)
}

/// Deliberate defects for exercising the verification suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Negates the hypersingular operator before it enters `M_N`.
    DlSign,
}

impl std::str::FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dl-sign" => Ok(Fault::DlSign),
            other => Err(Error::Validation(format!("unknown fault '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub lemma_cells: Vec<BoundCell>,
    pub all_pass: bool,
}

fn check(name: &str, value: f64, tolerance: f64, pass: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.into(),
        pass,
        value,
        tolerance,
        detail: detail.into(),
    }
}

fn below(name: &str, r: Result<f64>, tolerance: f64) -> CheckResult {
    match r {
        Ok(v) => check(name, v, tolerance, v <= tolerance, ""),
        Err(e) => check(name, f64::NAN, tolerance, false, e.to_string()),
    }
}

/// Operator identities and the time-domain bound. The scenario, when given,
/// supplies the curve, node count and `λ` of the operator checks.
pub fn run_verify(s: Option<&Scenario>, fault: Option<Fault>, out: &Path) -> Result<VerifyReport> {
    let (geom, lambda) = match s {
        Some(s) => (s.build_geometry()?, SpectralParam::free(s.spectral.lambda)?),
        None => (make_curve(&CurveShape::Circle { radius: 1.0 }, 64)?, SpectralParam::free(1.0)?),
    };
    let mut checks = Vec::new();
    let sl = assemble_gamma0_sl(&geom, lambda)?;
    let mut dl = assemble_gamma1_dl(&geom, lambda)?;
    if fault == Some(Fault::DlSign) {
        dl.matrix = -dl.matrix;
    }
    let r = symmetry_residual(&sl.matrix);
    checks.push(check("single_layer_symmetry", r, 1e-10, r <= 1e-10, ""));
    let r = symmetry_residual(&dl.matrix);
    checks.push(check("hypersingular_symmetry", r, 1e-10, r <= 1e-10, ""));
    let md = assemble_m(&BoundaryCondition::dirichlet(), &geom, lambda)?;
    let rep = sign_check(&md);
    checks.push(check(
        "m_dirichlet_negative",
        rep.max_eigenvalue,
        0.0,
        rep.definiteness == Definiteness::DefiniteNegative,
        format!("{:?}", rep.definiteness),
    ));
    let mut mn = dl.clone();
    mn.matrix = -dl.matrix.clone();
    mn.kind = OperatorKind::MNeumann;
    let rep = sign_check(&mn);
    checks.push(check(
        "m_neumann_positive",
        rep.min_eigenvalue,
        0.0,
        rep.definiteness == Definiteness::DefinitePositive,
        format!("{:?}", rep.definiteness),
    ));

    let fine = make_curve(&CurveShape::Circle { radius: 1.0 }, 1024)?;
    let density: Vec<f64> = fine.params().iter().map(|t| 1.0 + 0.5 * t.cos()).collect();
    checks.push(below(
        "jump_single_layer",
        jump_relation_residual(&fine, None, lambda, &density, JumpKind::SingleLayerNormalDerivative),
        1e-4,
    ));
    checks.push(below(
        "jump_double_layer",
        jump_relation_residual(&fine, None, lambda, &density, JumpKind::DoubleLayerValue),
        1e-4,
    ));
    let circle = make_curve(&CurveShape::Circle { radius: 1.0 }, 128)?;
    checks.push(below(
        "gram_identity",
        gram_identity_residual(&circle, SpectralParam::free(1.0)?, SpectralParam::free(2.0)?, 12.0, 200),
        1e-2,
    ));

    let seed = s.map_or(0, |s| s.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let m = SurrogateModel::random(12 + 4 * k, 0.0, &mut rng)?;
        worst = worst.max(laplace_identity_residual(&m.a_perturbed, 1.0, 10.0, 400)?);
    }
    checks.push(check("laplace_identities", worst, 1e-6, worst <= 1e-6, ""));

    let mut cells = Vec::new();
    let pulses = [
        PulseProfile::new(0.01, PulseKind::Bump)?,
        PulseProfile::new(0.1, PulseKind::Bump)?,
    ];
    for (k, ll) in [0.0, 1.0].into_iter().enumerate() {
        let m = SurrogateModel::random(16 + 8 * k, ll, &mut rng)?;
        let rep = verify_bound(&m, &pulses, &[4.0, 9.0, 25.0], &[2.0, 5.0], 16)?;
        cells.extend(rep.cells);
    }
    let violations = cells.iter().filter(|c| !c.pass).count();
    checks.push(check(
        "truncation_bound",
        violations as f64,
        0.0,
        violations == 0,
        format!("{} cells", cells.len()),
    ));

    let all_pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        checks,
        lemma_cells: cells,
        all_pass,
    };
    output::write_json(&out.join("verify.json"), &report)?;
    Ok(report)
}

