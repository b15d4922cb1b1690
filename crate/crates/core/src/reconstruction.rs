//! Picard and inf-criterion indicators, grid sweeps and segmentation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_operator::DataOperator;
use crate::error::{Error, Result};
use crate::geometry::{dist, BoundaryGeometry, CurveShape, EvaluationGrid, Point, ProbeRegion};
use crate::kernels::{fundamental_solution, Dim, RadialKernel, SpectralParam};
use crate::quadrature::gauss_legendre;

/// Default relative floor for retained eigenvalues.
pub const DEFAULT_TRUNCATION_FLOOR: f64 = 1e-8;
/// Default segmentation level relative to the largest indicator value.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// Parameter arc `t ∈ [start, end]` on a test curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestArc {
    pub shape: CurveShape,
    #[serde(default)]
    pub center: Point,
    pub start: f64,
    pub end: f64,
}

impl TestArc {
    fn point(&self, t: f64) -> (Point, f64) {
        let (q, dq) = self.shape.eval(t);
        ([q[0] + self.center[0], q[1] + self.center[1]], dq[0].hypot(dq[1]))
    }

    pub fn midpoint(&self) -> Point {
        self.point(0.5 * (self.start + self.end)).0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TestSource {
    Point(Point),
    Arc(TestArc),
}

#[derive(Clone, Debug)]
pub struct TestVector {
    /// `g(b_i)`
    pub values: Vec<f64>,
    /// `√w_i g(b_i)`
    pub weighted: Vec<f64>,
    pub source: TestSource,
    pub lambda: SpectralParam,
}

fn weighted(probe: &ProbeRegion, values: &[f64]) -> Vec<f64> {
    values.iter().zip(probe.weights()).map(|(v, w)| v * w.sqrt()).collect()
}

/// `g^x_λ` sampled at the probe points. In three dimensions the plane
/// points are embedded at height zero.
pub fn make_test_vector(probe: &ProbeRegion, x: Point, lambda: SpectralParam, dim: Dim) -> Result<TestVector> {
    let values = probe
        .points()
        .iter()
        .map(|b| match dim {
            Dim::Two => fundamental_solution(dim, lambda, b, &x),
            Dim::Three => fundamental_solution(dim, lambda, &[b[0], b[1], 0.0], &[x[0], x[1], 0.0]),
        })
        .collect::<Result<Vec<f64>>>()?;
    check_norm(&values)?;
    Ok(TestVector {
        weighted: weighted(probe, &values),
        values,
        source: TestSource::Point(x),
        lambda,
    })
}

fn check_norm(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) || values.iter().all(|v| *v == 0.0) {
        return Err(Error::Parameter("test vector is zero or non-finite".into()));
    }
    Ok(())
}

/// `∫_arc g^x_λ dσ(x)` sampled at the probe points, by `n_quad`-point
/// Gauss–Legendre quadrature in the arc parameter.
pub fn make_screen_test_vector(
    probe: &ProbeRegion,
    arc: &TestArc,
    lambda: SpectralParam,
    n_quad: usize,
) -> Result<TestVector> {
    arc.shape.validate()?;
    if !(arc.end > arc.start) || n_quad == 0 {
        return Err(Error::Parameter(format!(
            "test arc [{}, {}] with {n_quad} nodes",
            arc.start, arc.end
        )));
    }
    let (x, w) = gauss_legendre(n_quad);
    let half = 0.5 * (arc.end - arc.start);
    let mid = 0.5 * (arc.end + arc.start);
    let nodes: Vec<(Point, f64)> = x
        .iter()
        .zip(&w)
        .map(|(x, w)| {
            let (p, speed) = arc.point(mid + half * x);
            (p, w * half * speed)
        })
        .collect();
    // Separation from the probe, checked on a fine polyline of the arc.
    for b in probe.points() {
        let close = (0..=256).any(|k| {
            let t = arc.start + (arc.end - arc.start) * k as f64 / 256.0;
            dist(arc.point(t).0, *b) < 1e-9
        });
        if close {
            return Err(Error::Singularity(format!("test arc passes through probe point {b:?}")));
        }
    }
    let k = RadialKernel::new(Dim::Two, lambda);
    let values: Vec<f64> = probe
        .points()
        .iter()
        .map(|b| nodes.iter().map(|(p, w)| w * k.value(dist(*p, *b))).sum())
        .collect();
    check_norm(&values)?;
    Ok(TestVector {
        weighted: weighted(probe, &values),
        values,
        source: TestSource::Arc(arc.clone()),
        lambda,
    })
}

/// Number of eigenpairs with `|μ_k| ≥ floor·|μ_1|`.
pub fn retained_modes(f: &DataOperator, truncation_floor: f64) -> Result<usize> {
    if !(truncation_floor > 0.0 && truncation_floor < 1.0) {
        return Err(Error::Parameter(format!("truncation floor {truncation_floor} must lie in (0, 1)")));
    }
    let top = f.eigenvalues.first().map_or(0.0, |m| m.abs());
    if !(top > 0.0) {
        return Err(Error::DegenerateOperator("data operator has no nonzero eigenvalue".into()));
    }
    Ok(f.eigenvalues.iter().take_while(|m| m.abs() >= truncation_floor * top).count())
}

fn projections(f: &DataOperator, g: &TestVector, k: usize) -> Result<Vec<f64>> {
    if g.weighted.len() != f.matrix.nrows() {
        return Err(Error::Parameter(format!(
            "test vector has {} entries for {} probe points",
            g.weighted.len(),
            f.matrix.nrows()
        )));
    }
    Ok((0..k)
        .map(|c| f.eigenvectors.column(c).iter().zip(&g.weighted).map(|(v, x)| v * x).sum())
        .collect())
}

/// Cumulative Picard sums `Σ_{k≤K} ⟨g, v_k⟩² / |μ_k|` for `K = 1..=modes`.
pub fn picard_partial_sums(f: &DataOperator, g: &TestVector, modes: usize) -> Result<Vec<f64>> {
    let modes = modes.min(f.eigenvalues.len());
    let c = projections(f, g, modes)?;
    let mut acc = 0.0;
    Ok(c
        .iter()
        .zip(&f.eigenvalues)
        .map(|(c, mu)| {
            acc += c * c / mu.abs();
            acc
        })
        .collect())
}

/// `[Σ_{k≤K} ⟨g, v_k⟩²/|μ_k|]⁻¹` over the first `modes` eigenpairs;
/// `f64::MAX` when the sum vanishes.
pub fn picard_indicator_modes(f: &DataOperator, g: &TestVector, modes: usize) -> Result<f64> {
    if modes == 0 {
        return Err(Error::DegenerateOperator("empty truncated spectrum".into()));
    }
    let s = *picard_partial_sums(f, g, modes)?.last().unwrap_or(&0.0);
    Ok(if s > 0.0 { 1.0 / s } else { f64::MAX })
}

/// Picard indicator over the eigenpairs above the truncation floor.
pub fn picard_indicator(f: &DataOperator, g: &TestVector, truncation_floor: f64) -> Result<f64> {
    let k = retained_modes(f, truncation_floor)?;
    picard_indicator_modes(f, g, k)
}

/// `inf |⟨u, F u⟩|` over `u ∈ span{v_1..v_K}` with `⟨u, g⟩ = 1`.
///
/// If the retained eigenvalues share one sign this is the Lagrange value
/// `[Σ ⟨g, v_k⟩²/|μ_k|]⁻¹`. With both signs present the quadratic form
/// vanishes somewhere on the constraint set.
pub fn inf_indicator(f: &DataOperator, g: &TestVector, subspace_k: usize) -> Result<f64> {
    if subspace_k == 0 || subspace_k > f.eigenvalues.len() {
        return Err(Error::Parameter(format!(
            "subspace size {subspace_k} outside 1..={}",
            f.eigenvalues.len()
        )));
    }
    let c = projections(f, g, subspace_k)?;
    let scale = g.weighted.iter().map(|x| x * x).sum::<f64>().sqrt();
    if c.iter().all(|c| c.abs() <= 1e-14 * scale) {
        return Err(Error::ConstraintInfeasible(
            "test vector is orthogonal to the eigenvector subspace".into(),
        ));
    }
    let mu = &f.eigenvalues[..subspace_k];
    if c.iter().zip(mu).any(|(c, m)| *m == 0.0 && *c != 0.0) {
        return Ok(0.0);
    }
    let pos = mu.iter().any(|m| *m > 0.0);
    let neg = mu.iter().any(|m| *m < 0.0);
    if pos && neg {
        return Ok(0.0);
    }
    let s: f64 = c.iter().zip(mu).filter(|(_, m)| **m != 0.0).map(|(c, m)| c * c / m.abs()).sum();
    Ok(1.0 / s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Picard,
    Inf,
    Both,
}

#[derive(Clone, Debug)]
pub struct IndicatorGrid {
    pub grid: EvaluationGrid,
    pub picard_values: Vec<f64>,
    pub inf_values: Option<Vec<f64>>,
    pub truncation_k: usize,
    pub threshold: Option<f64>,
}

/// Evaluates the indicators at every grid point. The Picard field is
/// always computed; the inf field only when requested.
pub fn sweep(
    f: &DataOperator,
    probe: &ProbeRegion,
    grid: &EvaluationGrid,
    mode: SweepMode,
    truncation_floor: f64,
    dim: Dim,
) -> Result<IndicatorGrid> {
    let k = retained_modes(f, truncation_floor)?;
    let values: Vec<(f64, Option<f64>)> = grid
        .points()
        .par_iter()
        .map(|x| -> Result<(f64, Option<f64>)> {
            let g = make_test_vector(probe, *x, f.lambda, dim)?;
            match mode {
                SweepMode::Picard => Ok((picard_indicator_modes(f, &g, k)?, None)),
                SweepMode::Inf | SweepMode::Both => {
                    let p = picard_indicator_modes(f, &g, k)?;
                    Ok((p, Some(inf_indicator(f, &g, k)?)))
                }
            }
        })
        .collect::<Result<_>>()?;
    let (picard, inf): (Vec<f64>, Vec<Option<f64>>) = values.into_iter().unzip();
    Ok(IndicatorGrid {
        grid: grid.clone(),
        picard_values: picard,
        inf_values: if mode != SweepMode::Picard {
            Some(inf.into_iter().map(|v| v.unwrap_or(0.0)).collect())
        } else {
            None
        },
        truncation_k: k,
        threshold: None,
    })
}

/// Picard indicator of each screen test arc.
pub fn sweep_arcs(
    f: &DataOperator,
    probe: &ProbeRegion,
    arcs: &[TestArc],
    truncation_floor: f64,
    n_quad: usize,
) -> Result<Vec<f64>> {
    let k = retained_modes(f, truncation_floor)?;
    arcs.par_iter()
        .map(|a| {
            let g = make_screen_test_vector(probe, a, f.lambda, n_quad)?;
            picard_indicator_modes(f, &g, k)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SegmentRule {
    /// Inside iff value ≥ fraction·max.
    FixedThreshold { fraction: f64 },
    Otsu,
}

impl Default for SegmentRule {
    fn default() -> Self {
        SegmentRule::FixedThreshold {
            fraction: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub mask: Vec<bool>,
    pub threshold: f64,
    /// Present when a reference curve was given.
    pub jaccard: Option<f64>,
    pub accuracy: Option<f64>,
    pub scored_points: usize,
}

fn otsu(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    const BINS: usize = 256;
    let mut hist = [0usize; BINS];
    for v in values {
        let b = (((v - lo) / (hi - lo)) * BINS as f64) as usize;
        hist[b.min(BINS - 1)] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, h)| i as f64 * *h as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_bin) = (-1.0, 0);
    for (i, h) in hist.iter().enumerate() {
        w0 += *h as f64;
        sum0 += i as f64 * *h as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1).powi(2);
        if between > best {
            best = between;
            best_bin = i;
        }
    }
    lo + (hi - lo) * (best_bin + 1) as f64 / BINS as f64
}

/// Thresholds the Picard field. With a reference curve, points closer than
/// `margin` to it are left out of the Jaccard index and accuracy.
pub fn segment(
    grid: &IndicatorGrid,
    rule: SegmentRule,
    reference: Option<&BoundaryGeometry>,
    margin: f64,
) -> Result<Segmentation> {
    let v = &grid.picard_values;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Segmentation("indicator field is empty or non-finite".into()));
    }
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Segmentation("indicator field is constant".into()));
    }
    let threshold = match rule {
        SegmentRule::FixedThreshold { fraction } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::Parameter(format!("threshold fraction {fraction} outside (0, 1)")));
            }
            fraction * hi
        }
        SegmentRule::Otsu => otsu(v),
    };
    let mask: Vec<bool> = v.iter().map(|x| *x >= threshold).collect();
    let (mut jaccard, mut accuracy, mut scored) = (None, None, 0);
    if let Some(geom) = reference {
        let (mut inter, mut union, mut correct) = (0usize, 0usize, 0usize);
        for (x, m) in grid.grid.points().iter().zip(&mask) {
            if geom.distance_to(*x) < margin {
                continue;
            }
            let truth = geom.contains(*x)?;
            scored += 1;
            if truth && *m {
                inter += 1;
            }
            if truth || *m {
                union += 1;
            }
            if truth == *m {
                correct += 1;
            }
        }
        if scored == 0 {
            return Err(Error::Segmentation("margin band leaves no points to score".into()));
        }
        jaccard = Some(if union == 0 { 1.0 } else { inter as f64 / union as f64 });
        accuracy = Some(correct as f64 / scored as f64);
    }
    Ok(Segmentation {
        mask,
        threshold,
        jaccard,
        accuracy,
        scored_points: scored,
    })
}
