//! Cosine and sine operator families on finite symmetric surrogates, pulse
//! responses, the time-truncated data operator and its error bound.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

const GAUSS_ORDER: usize = 16;

fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    a.is_square() && (a - a.transpose()).norm() <= tol * a.norm().max(1.0)
}

fn spectral_map(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * f(eig.eigenvalues[j]));
    let mut out = scaled * v.transpose();
    let t = out.transpose();
    out += t;
    out *= 0.5;
    out
}

/// Scalar cosine function of the generator: `cos(t√−a)` or `cosh(t√a)`.
pub fn cos_scalar(a: f64, t: f64) -> f64 {
    if a <= 0.0 {
        (t * (-a).sqrt()).cos()
    } else {
        (t * a.sqrt()).cosh()
    }
}

/// Scalar sine function: `sin(t√−a)/√−a`, `sinh(t√a)/√a`, or `t` at zero.
pub fn sin_scalar(a: f64, t: f64) -> f64 {
    if a == 0.0 {
        t
    } else if a < 0.0 {
        let w = (-a).sqrt();
        (t * w).sin() / w
    } else {
        let w = a.sqrt();
        (t * w).sinh() / w
    }
}

/// `Cos(t)` of a symmetric matrix by spectral calculus.
pub fn cosine_family(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    spectral_map(a, |x| cos_scalar(x, t))
}

/// `Sin(t)` of a symmetric matrix by spectral calculus.
pub fn sine_family(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    spectral_map(a, |x| sin_scalar(x, t))
}

/// Operator norm of a symmetric matrix.
pub fn sym_norm(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

fn lambda_max(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Composite Gauss rule on `[a, b]` with panels no wider than `width`.
fn panels(a: f64, b: f64, width: f64, out: &mut Vec<(f64, f64)>) {
    if b <= a {
        return;
    }
    let count = ((b - a) / width).ceil().max(1.0) as usize;
    let (x, w) = gauss_legendre(GAUSS_ORDER);
    let h = (b - a) / count as f64;
    for p in 0..count {
        let mid = a + h * (p as f64 + 0.5);
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + 0.5 * h * xi, 0.5 * h * wi));
        }
    }
}

/// Largest `t` needed so that `e^{-rate t} < 1e-16`.
fn tail_horizon(lambda: f64, a_max: f64) -> Result<f64> {
    let rate = lambda.sqrt() - a_max.max(0.0).sqrt();
    if !(rate > 0.0) {
        return Err(Error::SpectralParameter(format!(
            "lambda = {lambda} does not exceed the spectral bound {a_max}"
        )));
    }
    Ok(37.0 / rate)
}

/// Largest relative error of the two Laplace relations
/// `√λ R_λ = ∫ e^{-√λ t} Cos(t) dt` and `R_λ = ∫ e^{-√λ t} Sin(t) dt`
/// against the resolvent `R_λ = (λ − A)⁻¹` from an LU solve. The time
/// integral uses `quadrature_n` Gauss panels, is extended past `t_max` until
/// the tail is negligible, and keeps the panel width of the first
/// `[0, t_max]` subdivision.
pub fn laplace_identity_residual(a: &DMatrix<f64>, lambda: f64, t_max: f64, quadrature_n: usize) -> Result<f64> {
    if !is_symmetric(a, 1e-12) {
        return Err(Error::Parameter("generator must be symmetric".into()));
    }
    if quadrature_n == 0 || !(t_max > 0.0) {
        return Err(Error::Parameter("quadrature needs a positive horizon and panel count".into()));
    }
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lambda <= top {
        return Err(Error::SpectralParameter(format!("lambda = {lambda} lies in the spectrum (max {top})")));
    }
    let horizon = tail_horizon(lambda, top)?.max(t_max);
    let width = t_max / quadrature_n as f64;
    let mut nodes = Vec::new();
    panels(0.0, horizon, width, &mut nodes);
    let k = lambda.sqrt();
    let mut c = vec![0.0; eig.eigenvalues.len()];
    let mut s = vec![0.0; eig.eigenvalues.len()];
    for (t, w) in &nodes {
        let damp = w * (-k * t).exp();
        for (j, a) in eig.eigenvalues.iter().enumerate() {
            c[j] += damp * cos_scalar(*a, *t);
            s[j] += damp * sin_scalar(*a, *t);
        }
    }
    let v = &eig.eigenvectors;
    let rebuild = |d: &[f64]| DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * d[j]) * v.transpose();
    let qc = rebuild(&c);
    let qs = rebuild(&s);
    let n = a.nrows();
    let shifted = DMatrix::<f64>::identity(n, n) * lambda - a;
    let resolvent = shifted
        .lu()
        .try_inverse()
        .ok_or(Error::SpectralParameter(format!("lambda = {lambda} is an eigenvalue")))?;
    let rn = resolvent.norm();
    let e_cos = (qc - &resolvent * k).norm() / (k * rn);
    let e_sin = (qs - &resolvent).norm() / rn;
    Ok(e_cos.max(e_sin))
}

/// Pair of symmetric generators standing in for the perturbed and free
/// Laplacians, with the probe block as a 0/1 mask.
#[derive(Clone, Debug)]
pub struct SurrogateModel {
    pub a_perturbed: DMatrix<f64>,
    pub a_free: DMatrix<f64>,
    pub lambda_lambda: f64,
    pub probe_mask: Vec<bool>,
}

impl SurrogateModel {
    pub fn new(a_perturbed: DMatrix<f64>, a_free: DMatrix<f64>, lambda_lambda: f64, probe_mask: Vec<bool>) -> Result<Self> {
        let n = a_free.nrows();
        if a_perturbed.shape() != (n, n) || a_free.shape() != (n, n) || probe_mask.len() != n {
            return Err(Error::Parameter("surrogate blocks have inconsistent sizes".into()));
        }
        if !is_symmetric(&a_perturbed, 1e-12) || !is_symmetric(&a_free, 1e-12) {
            return Err(Error::Parameter("surrogate generators must be symmetric".into()));
        }
        if !(lambda_lambda >= 0.0) {
            return Err(Error::Parameter(format!("spectral bound {lambda_lambda} must be non-negative")));
        }
        let tol = 1e-10 * sym_norm(&a_free).max(1.0);
        if lambda_max(&a_free) > tol {
            return Err(Error::Parameter("free generator must be negative semidefinite".into()));
        }
        if lambda_max(&a_perturbed) > lambda_lambda + tol {
            return Err(Error::Parameter(format!(
                "perturbed generator exceeds its spectral bound {lambda_lambda}"
            )));
        }
        Ok(Self {
            a_perturbed,
            a_free,
            lambda_lambda,
            probe_mask,
        })
    }

    pub fn dim(&self) -> usize {
        self.a_free.nrows()
    }

    /// Random surrogate of size `dim`. The free part is the Dirichlet
    /// second-difference matrix scaled so that its spectrum lies in
    /// `[-4/h², -1]`. The perturbation lives on the first third of the
    /// indices and the probe on the last third. With `lambda_lambda = 0` the
    /// perturbation is negative semidefinite; otherwise it is indefinite and
    /// scaled so the top eigenvalue of the perturbed generator lies just
    /// below `lambda_lambda`.
    pub fn random<R: Rng>(dim: usize, lambda_lambda: f64, rng: &mut R) -> Result<Self> {
        if dim < 6 {
            return Err(Error::Parameter(format!("surrogate dimension {dim} is below 6")));
        }
        let h = 2.0 * (std::f64::consts::PI / (2.0 * (dim + 1) as f64)).sin();
        let mut a_free = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            a_free[(i, i)] = -2.0 / (h * h);
            if i + 1 < dim {
                a_free[(i, i + 1)] = 1.0 / (h * h);
                a_free[(i + 1, i)] = 1.0 / (h * h);
            }
        }
        let block = dim / 3;
        let mut b = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..block {
            for j in 0..block {
                b[(i, j)] = StandardNormal.sample(rng);
            }
        }
        let a_perturbed = if lambda_lambda == 0.0 {
            let strength: f64 = rng.random_range(0.5..5.0);
            &a_free - &b * b.transpose() * (strength / block as f64)
        } else {
            let mut p = (&b + b.transpose()) * 0.5;
            // The bracket below needs a positive direction.
            if lambda_max(&p) <= 0.0 {
                p = -p;
            }
            let target = lambda_lambda * rng.random_range(0.5..1.0);
            let (mut lo, mut hi) = (0.0, 1.0);
            while lambda_max(&(&a_free + &p * hi)) < target {
                hi *= 2.0;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if lambda_max(&(&a_free + &p * mid)) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            &a_free + &p * lo
        };
        let mask = (0..dim).map(|i| i >= dim - block).collect();
        Self::new(a_perturbed, a_free, lambda_lambda, mask)
    }

    /// Same model with the free generator in both slots.
    pub fn unperturbed(&self) -> Self {
        Self {
            a_perturbed: self.a_free.clone(),
            ..self.clone()
        }
    }

    fn masked(&self, m: DMatrix<f64>) -> DMatrix<f64> {
        let mask = &self.probe_mask;
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| if mask[i] && mask[j] { m[(i, j)] } else { 0.0 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    /// `30 s²(ε − s)²/ε⁵`
    Bump,
    /// `1/ε`
    Box,
}

/// Non-negative unit-mass pulse supported on `[0, ε]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseProfile {
    pub epsilon: f64,
    pub kind: PulseKind,
}

impl PulseProfile {
    pub fn new(epsilon: f64, kind: PulseKind) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Parameter(format!("pulse width {epsilon} must be positive")));
        }
        Ok(Self { epsilon, kind })
    }

    pub fn value(&self, s: f64) -> f64 {
        let e = self.epsilon;
        if !(0.0..e).contains(&s) {
            return 0.0;
        }
        match self.kind {
            PulseKind::Bump => 30.0 * s * s * (e - s) * (e - s) / e.powi(5),
            PulseKind::Box => 1.0 / e,
        }
    }

    /// `∫₀^t χ`
    pub fn mass_until(&self, t: f64) -> f64 {
        let e = self.epsilon;
        let u = (t / e).clamp(0.0, 1.0);
        match self.kind {
            PulseKind::Bump => u * u * u * (10.0 - 15.0 * u + 6.0 * u * u),
            PulseKind::Box => u,
        }
    }
}

/// `∫₀^{min(t,ε)} sin_a(t − s) χ(s) ds` by Gauss quadrature.
fn pulse_scalar(a: f64, pulse: &PulseProfile, t: f64, x: &[f64], w: &[f64]) -> f64 {
    let top = t.min(pulse.epsilon);
    if top <= 0.0 {
        return 0.0;
    }
    let half = 0.5 * top;
    x.iter()
        .zip(w)
        .map(|(x, w)| {
            let s = half * (1.0 + x);
            w * half * sin_scalar(a, t - s) * pulse.value(s)
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Perturbed,
    Free,
}

/// `u(t) = ∫₀^t Sin(t − s) χ(s) f ds`.
pub fn pulse_response(model: &SurrogateModel, pulse: &PulseProfile, f: &[f64], t: f64, which: Which) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("time {t} must be non-negative")));
    }
    if f.len() != model.dim() {
        return Err(Error::Parameter("source vector has the wrong size".into()));
    }
    let a = match which {
        Which::Perturbed => &model.a_perturbed,
        Which::Free => &model.a_free,
    };
    let (x, w) = gauss_legendre(64);
    let m = spectral_map(a, |lam| pulse_scalar(lam, pulse, t, &x, &w));
    Ok((m * DVector::from_column_slice(f)).as_slice().to_vec())
}

/// `Φ(a) = ∫₀^{t∘} e^{-√λ t} ∫₀^{min(t,ε)} sin_a(t − s) χ(s) ds dt`.
///
/// For `t ≥ ε` the inner integral splits as
/// `sin_a(t) ∫cos_a χ − cos_a(t) ∫sin_a χ`.
fn truncated_symbol(a: f64, pulse: &PulseProfile, lambda: f64, t_circ: f64, outer: &[(f64, f64)], gx: &[f64], gw: &[f64]) -> f64 {
    let e = pulse.epsilon;
    let k = lambda.sqrt();
    let half = 0.5 * e;
    let (mut mc, mut ms) = (0.0, 0.0);
    for (x, w) in gx.iter().zip(gw) {
        let s = half * (1.0 + x);
        let c = w * half * pulse.value(s);
        mc += c * cos_scalar(a, s);
        ms += c * sin_scalar(a, s);
    }
    let mut total = 0.0;
    for &(t, w) in outer {
        if t > t_circ {
            break;
        }
        let inner = if t < e {
            pulse_scalar(a, pulse, t, gx, gw)
        } else {
            sin_scalar(a, t) * mc - cos_scalar(a, t) * ms
        };
        total += w * (-k * t).exp() * inner;
    }
    total
}

/// `∫₀^{t∘} e^{-√λ t} 1_B (u_Λ(t) − u_0(t)) 1_B dt` as a matrix. Time panels
/// are no wider than `min(ε, 0.1)` with a break at `ε`; each carries
/// `quadrature_n` Gauss points.
pub fn assemble_f_truncated(
    model: &SurrogateModel,
    pulse: &PulseProfile,
    lambda: f64,
    t_circ: f64,
    quadrature_n: usize,
) -> Result<DMatrix<f64>> {
    if lambda <= model.lambda_lambda {
        return Err(Error::SpectralParameter(format!(
            "lambda = {lambda} must exceed {}",
            model.lambda_lambda
        )));
    }
    if !(t_circ > pulse.epsilon) {
        return Err(Error::Parameter(format!(
            "horizon {t_circ} must exceed the pulse width {}",
            pulse.epsilon
        )));
    }
    if quadrature_n < 2 {
        return Err(Error::Quadrature("need at least two Gauss points per panel".into()));
    }
    let width = pulse.epsilon.min(0.1);
    let (x, w) = gauss_legendre(quadrature_n);
    let mut outer = Vec::new();
    for (a, b) in [(0.0, pulse.epsilon), (pulse.epsilon, t_circ)] {
        let count = ((b - a) / width).ceil().max(1.0) as usize;
        let h = (b - a) / count as f64;
        for p in 0..count {
            let mid = a + h * (p as f64 + 0.5);
            for (xi, wi) in x.iter().zip(&w) {
                outer.push((mid + 0.5 * h * xi, 0.5 * h * wi));
            }
        }
    }
    let (gx, gw) = gauss_legendre(quadrature_n.max(GAUSS_ORDER));
    let phi = |a: f64| truncated_symbol(a, pulse, lambda, t_circ, &outer, &gx, &gw);
    let diff = spectral_map(&model.a_perturbed, phi) - spectral_map(&model.a_free, phi);
    if !diff.iter().all(|v| v.is_finite()) {
        return Err(Error::Quadrature("time quadrature produced non-finite values".into()));
    }
    Ok(model.masked(diff))
}

/// `1_B((λ − A_Λ)⁻¹ − (λ − A_0)⁻¹)1_B` by Cholesky solves.
pub fn assemble_f_ideal(model: &SurrogateModel, lambda: f64) -> Result<DMatrix<f64>> {
    if lambda <= model.lambda_lambda {
        return Err(Error::SpectralParameter(format!(
            "lambda = {lambda} must exceed {}",
            model.lambda_lambda
        )));
    }
    let n = model.dim();
    let eye = DMatrix::<f64>::identity(n, n);
    let inv = |a: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let c = (&eye * lambda - a)
            .cholesky()
            .ok_or_else(|| Error::SpectralParameter(format!("lambda = {lambda} lies in the spectrum")))?;
        Ok(c.inverse())
    };
    let d = inv(&model.a_perturbed)? - inv(&model.a_free)?;
    let d = (&d + d.transpose()) * 0.5;
    Ok(model.masked(d))
}

/// Constants and value of the truncation error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaBound {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub total: f64,
    pub lambda: f64,
    pub lambda_lambda: f64,
    pub lambda_circ: f64,
    pub t_circ: f64,
    pub epsilon: f64,
}

/// `sinh(x t)/x`, read as `min{t, 1}` at `x = 0`.
fn sinhc(x: f64, t: f64) -> f64 {
    if x == 0.0 {
        t.min(1.0)
    } else {
        (x * t).sinh() / x
    }
}

pub fn lemma_bound(lambda: f64, lambda_lambda: f64, lambda_circ: f64, t_circ: f64, epsilon: f64) -> Result<LemmaBound> {
    if !(lambda_lambda >= 0.0 && lambda_circ > lambda_lambda && lambda >= lambda_circ) {
        return Err(Error::Parameter(format!(
            "need lambda ({lambda}) >= lambda_circ ({lambda_circ}) > lambda_Lambda ({lambda_lambda}) >= 0"
        )));
    }
    if !(epsilon > 0.0 && t_circ > epsilon) {
        return Err(Error::Parameter(format!("need t_circ ({t_circ}) > epsilon ({epsilon}) > 0")));
    }
    let x = lambda_lambda.sqrt();
    let xc = lambda_circ.sqrt();
    let c1 = lambda_circ / (lambda_circ - lambda_lambda) * ((x * t_circ).cosh() / xc + sinhc(x, t_circ))
        + (1.0 / xc + t_circ.min(1.0));
    let c2 = (x * epsilon).cosh() + sinhc(x, epsilon) / epsilon + 2.0;
    let c3 = (x * t_circ).cosh() + 1.0;
    let k = lambda.sqrt();
    let total = (c1 * (-k * t_circ).exp() + epsilon * (c2 * (1.0 - (-k * epsilon).exp()) + c3 * (-k * epsilon).exp())) / k;
    Ok(LemmaBound {
        c1,
        c2,
        c3,
        total,
        lambda,
        lambda_lambda,
        lambda_circ,
        t_circ,
        epsilon,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCell {
    pub lambda: f64,
    pub t_circ: f64,
    pub epsilon: f64,
    pub pulse: PulseKind,
    pub measured: f64,
    pub bound: f64,
    /// `bound / measured`; absent when the measured error is zero.
    pub slack: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lambda_circ: f64,
    pub cells: Vec<BoundCell>,
    pub all_pass: bool,
}

/// Compares the measured truncation error with the bound on every
/// `(λ, t∘, pulse)` cell. `λ°` is the smallest grid value.
pub fn verify_bound(
    model: &SurrogateModel,
    pulses: &[PulseProfile],
    lambda_grid: &[f64],
    t_circ_grid: &[f64],
    quadrature_n: usize,
) -> Result<BoundReport> {
    let lambda_circ = lambda_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lambda_circ > model.lambda_lambda) {
        return Err(Error::Parameter(format!(
            "smallest lambda {lambda_circ} must exceed {}",
            model.lambda_lambda
        )));
    }
    let ideals = lambda_grid
        .iter()
        .map(|&l| Ok((l, assemble_f_ideal(model, l)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (li, &lambda) in lambda_grid.iter().enumerate() {
        for &t_circ in t_circ_grid {
            for pulse in pulses {
                jobs.push((li, lambda, t_circ, *pulse));
            }
        }
    }
    let cells = jobs
        .into_par_iter()
        .map(|(li, lambda, t_circ, pulse)| {
            let trunc = assemble_f_truncated(model, &pulse, lambda, t_circ, quadrature_n)?;
            let measured = sym_norm(&(&ideals[li].1 - trunc));
            let bound = lemma_bound(lambda, model.lambda_lambda, lambda_circ, t_circ, pulse.epsilon)?.total;
            Ok(BoundCell {
                lambda,
                t_circ,
                epsilon: pulse.epsilon,
                pulse: pulse.kind,
                measured,
                bound,
                slack: (measured > 0.0).then(|| bound / measured),
                pass: measured <= bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_pass = cells.iter().all(|c| c.pass);
    Ok(BoundReport {
        lambda_circ,
        cells,
        all_pass,
    })
}

/// Decay check over the `λ` grid for each `(t∘, ε, pulse)`: the bound
/// strictly decreases, the measured error does not increase, and both stay
/// below `max(c₁, c₂, c₃)·(e^{-√λ t∘} + ε)/√λ`.
pub fn envelope_check(model: &SurrogateModel, report: &BoundReport) -> Result<bool> {
    let mut keys: Vec<(f64, f64, PulseKind)> = Vec::new();
    for c in &report.cells {
        if !keys.iter().any(|k| k.0 == c.t_circ && k.1 == c.epsilon && k.2 == c.pulse) {
            keys.push((c.t_circ, c.epsilon, c.pulse));
        }
    }
    for (t, e, p) in keys {
        let mut row: Vec<&BoundCell> = report
            .cells
            .iter()
            .filter(|c| c.t_circ == t && c.epsilon == e && c.pulse == p)
            .collect();
        row.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        for w in row.windows(2) {
            if !(w[1].bound < w[0].bound) || w[1].measured > w[0].measured * (1.0 + 1e-9) + 1e-15 {
                return Ok(false);
            }
        }
        for c in row {
            let lb = lemma_bound(c.lambda, model.lambda_lambda, report.lambda_circ, t, e)?;
            let envelope = ((-c.lambda.sqrt() * t).exp() + e) / c.lambda.sqrt();
            let cap = lb.c1.max(lb.c2).max(lb.c3) * envelope;
            if c.bound > cap * (1.0 + 1e-12) || c.measured > cap {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
