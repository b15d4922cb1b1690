use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::assembly::assemble_gamma0_sl;
use super::potentials::{evaluate_potential, evaluate_potential_gradient, PotentialKind};
use super::{assemble_gamma1_dl, assemble_m, hat_from_nodal, nodal_from_hat, BcKind, BoundaryCondition, BoundaryOperator};
use crate::error::{Error, Result};
use crate::geometry::{dist, BoundaryGeometry, Point, ScreenGeometry};
use crate::kernels::{fundamental_solution_gradient, Dim, RadialKernel, SpectralParam};
use crate::quadrature::composite_gauss;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    DefinitePositive,
    DefiniteNegative,
    Indefinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub definiteness: Definiteness,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub tolerance: f64,
}

/// `‖A − Aᵀ‖_F / ‖A‖_F`
pub fn symmetry_residual(a: &DMatrix<f64>) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        0.0
    } else {
        (a - a.transpose()).norm() / norm
    }
}

/// Classifies the symmetric part of the operator by its extreme
/// eigenvalues, with tolerance `1e-12 ‖A‖`.
pub fn sign_check(op: &BoundaryOperator) -> SignReport {
    sign_of_matrix(&op.matrix)
}

pub(crate) fn sign_of_matrix(a: &DMatrix<f64>) -> SignReport {
    let sym = (a + a.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym).eigenvalues;
    let min = e.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * min.abs().max(max.abs());
    let definiteness = if min > tol {
        Definiteness::DefinitePositive
    } else if max < -tol {
        Definiteness::DefiniteNegative
    } else {
        Definiteness::Indefinite
    };
    SignReport {
        definiteness,
        min_eigenvalue: min,
        max_eigenvalue: max,
        tolerance: tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpKind {
    /// Jump of the normal derivative of the single layer, expected `−φ`.
    SingleLayerNormalDerivative,
    /// Jump of the double layer, expected `φ`.
    DoubleLayerValue,
}

/// Neville extrapolation of `(h_k, f_k)` to `h = 0`, returning the estimate
/// from all points and from all but the last.
fn extrapolate(h: &[f64], f: &[f64]) -> (f64, f64) {
    let tableau = |m: usize| {
        let mut p: Vec<f64> = f[..m].to_vec();
        for level in 1..m {
            for i in 0..m - level {
                p[i] = (h[i + level] * p[i] - h[i] * p[i + 1]) / (h[i + level] - h[i]);
            }
        }
        p[0]
    };
    (tableau(h.len()), tableau(h.len() - 1))
}

/// Two-sided estimate of a jump relation at sampled nodes, returned as
/// `‖jump − expected‖ / ‖expected‖`. With a screen the density is taken as
/// zero off the screen and only nodes well inside it are sampled.
pub fn jump_relation_residual(
    geom: &BoundaryGeometry,
    screen: Option<&ScreenGeometry>,
    lambda: SpectralParam,
    density: &[f64],
    kind: JumpKind,
) -> Result<f64> {
    let n = geom.len();
    if density.len() != n {
        return Err(Error::Parameter(format!("density has {} values for {n} nodes", density.len())));
    }
    let (phi, samples): (Vec<f64>, Vec<usize>) = match screen {
        None => (density.to_vec(), (0..n).step_by((n / 32).max(1)).collect()),
        Some(s) => {
            let idx = s.active_indices();
            let mask = s.active_mask();
            let phi = (0..n).map(|j| if mask[j] { density[j] } else { 0.0 }).collect();
            let skip = idx.len() / 8;
            let inner = &idx[skip..idx.len() - skip];
            let stride = (inner.len() / 16).max(1);
            (phi, inner.iter().copied().step_by(stride).collect())
        }
    };
    let base = 4.0 * geom.max_spacing();
    let steps: Vec<f64> = (0..5).map(|k| base * 2f64.powi(k)).collect();
    let b = geom.bounding_box();
    let scale = (b[1] - b[0]).min(b[3] - b[2]);
    if steps[4] > 0.25 * scale {
        return Err(Error::Extrapolation(format!(
            "{n} nodes are too coarse for two-sided extrapolation"
        )));
    }
    let phi_max = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut err = 0.0;
    let mut norm = 0.0;
    for &j in &samples {
        let x0 = geom.nodes()[j];
        let nu = geom.normals()[j];
        let side = |sign: f64| -> Result<(f64, f64)> {
            let targets: Vec<Point> = steps
                .iter()
                .map(|h| [x0[0] + sign * h * nu[0], x0[1] + sign * h * nu[1]])
                .collect();
            let values: Vec<f64> = match kind {
                JumpKind::SingleLayerNormalDerivative => {
                    evaluate_potential_gradient(geom, PotentialKind::Single, &phi, &targets, lambda)?
                        .iter()
                        .map(|g| g[0] * nu[0] + g[1] * nu[1])
                        .collect()
                }
                JumpKind::DoubleLayerValue => {
                    evaluate_potential(geom, PotentialKind::Double, &phi, &targets, lambda)?
                }
            };
            Ok(extrapolate(&steps, &values))
        };
        let (plus, plus_lo) = side(1.0)?;
        let (minus, minus_lo) = side(-1.0)?;
        let jump = plus - minus;
        let spread = (plus - plus_lo).abs() + (minus - minus_lo).abs();
        let mag = plus.abs().max(minus.abs()).max(phi_max).max(1e-300);
        if !jump.is_finite() || spread > 1e-2 * mag {
            return Err(Error::Extrapolation(format!(
                "node {j}: successive extrapolants differ by {spread:e}"
            )));
        }
        let expected = match kind {
            JumpKind::SingleLayerNormalDerivative => -phi[j],
            JumpKind::DoubleLayerValue => phi[j],
        };
        err += (jump - expected).powi(2);
        norm += expected * expected;
    }
    if norm == 0.0 {
        return Err(Error::Parameter("density vanishes at every sampled node".into()));
    }
    Ok((err / norm).sqrt())
}

/// Relative Frobenius residual of
/// `S_{λ₁} − S_{λ₂} = (λ₂ − λ₁) ∫ g_{λ₁}(·, u) g_{λ₂}(u, ·) du`
/// with the volume integral taken by the midpoint rule on a
/// `resolution × resolution` lattice over the disk of `volume_radius`
/// around the curve centre.
pub fn gram_identity_residual(
    geom: &BoundaryGeometry,
    lambda1: SpectralParam,
    lambda2: SpectralParam,
    volume_radius: f64,
    volume_resolution: usize,
) -> Result<f64> {
    let (l1, l2) = (lambda1.lambda(), lambda2.lambda());
    if l1 == l2 {
        return Err(Error::Parameter("the two spectral parameters must differ".into()));
    }
    if volume_resolution < 2 {
        return Err(Error::Parameter("volume resolution must be at least 2".into()));
    }
    let c = geom.center();
    let rho = geom.nodes().iter().map(|x| dist(*x, c)).fold(0.0, f64::max);
    if volume_radius <= rho {
        return Err(Error::Truncation(format!(
            "volume radius {volume_radius} does not enclose the curve (radius {rho})"
        )));
    }
    let k1 = RadialKernel::new(Dim::Two, lambda1);
    let k2 = RadialKernel::new(Dim::Two, lambda2);
    let n = geom.len();
    let h = 2.0 * volume_radius / volume_resolution as f64;
    let sw: Vec<f64> = geom.weights().iter().map(|w| w.sqrt()).collect();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for iy in 0..volume_resolution {
        let y = -volume_radius + h * (iy as f64 + 0.5);
        let xs: Vec<f64> = (0..volume_resolution)
            .map(|ix| -volume_radius + h * (ix as f64 + 0.5))
            .filter(|x| x * x + y * y <= volume_radius * volume_radius)
            .collect();
        if xs.is_empty() {
            continue;
        }
        let mut a = DMatrix::<f64>::zeros(xs.len(), n);
        let mut b = DMatrix::<f64>::zeros(xs.len(), n);
        for (r, x) in xs.iter().enumerate() {
            let u = [c[0] + x, c[1] + y];
            for j in 0..n {
                let d = dist(u, geom.nodes()[j]).max(0.2 * h * f64::EPSILON.sqrt());
                a[(r, j)] = h * sw[j] * k1.value(d);
                b[(r, j)] = h * sw[j] * k2.value(d);
            }
        }
        gram.gemm_tr(1.0, &a, &b, 1.0);
    }
    // Tail of the volume integral beyond the disk.
    let kmin = lambda1.kappa().min(lambda2.kappa());
    let far = volume_radius + 60.0 / kmin;
    let (s, w) = composite_gauss(volume_radius, far, 64, 8);
    let tail: f64 = s
        .iter()
        .zip(&w)
        .map(|(s, w)| w * 2.0 * std::f64::consts::PI * s * k1.value(s - rho) * k2.value(s - rho))
        .sum();
    let diag = (0..n).map(|j| gram[(j, j)] / geom.weights()[j]).fold(0.0, f64::max);
    if tail > 1e-4 * diag {
        return Err(Error::Truncation(format!(
            "estimated tail {tail:e} beyond radius {volume_radius} against Gram scale {diag:e}"
        )));
    }
    let s1 = assemble_gamma0_sl(geom, lambda1)?.matrix;
    let s2 = assemble_gamma0_sl(geom, lambda2)?.matrix;
    let lhs = s1 - s2;
    let residual = &lhs - gram * (l2 - l1);
    Ok(residual.norm() / lhs.norm())
}

/// Solves the exterior Dirichlet (single layer) or Neumann (double layer)
/// problem with the data of `g^x` and returns the relative misfit of the
/// layer potential against `g^x` at the targets.
pub fn exterior_reproduction_residual(
    geom: &BoundaryGeometry,
    kind: BcKind,
    lambda: SpectralParam,
    source: Point,
    targets: &[Point],
) -> Result<f64> {
    let k = RadialKernel::new(Dim::Two, lambda);
    let (matrix, data, pot) = match kind {
        BcKind::Dirichlet => {
            let s = assemble_gamma0_sl(geom, lambda)?.matrix;
            let data: Vec<f64> = geom.nodes().iter().map(|y| k.value(dist(*y, source))).collect();
            (s, data, PotentialKind::Single)
        }
        BcKind::Neumann => {
            let t = assemble_gamma1_dl(geom, lambda)?.matrix;
            let mut data = Vec::with_capacity(geom.len());
            for (y, nu) in geom.nodes().iter().zip(geom.normals()) {
                let g = fundamental_solution_gradient(Dim::Two, lambda, &source, y)?;
                data.push(g[0] * nu[0] + g[1] * nu[1]);
            }
            (t, data, PotentialKind::Double)
        }
        _ => return Err(Error::Parameter("reproduction check covers Dirichlet and Neumann".into())),
    };
    let rhs = DVector::from_vec(hat_from_nodal(geom, &data));
    let sol = matrix
        .lu()
        .solve(&rhs)
        .ok_or(Error::Inversion { condition: f64::INFINITY })?;
    let phi = nodal_from_hat(geom, sol.as_slice());
    let u = evaluate_potential(geom, pot, &phi, targets, lambda)?;
    let mut err = 0.0;
    let mut norm = 0.0;
    for (x, v) in targets.iter().zip(&u) {
        let g = k.value(dist(*x, source));
        err += (v - g).powi(2);
        norm += g * g;
    }
    Ok((err / norm).sqrt())
}

fn inertia(bc: &BoundaryCondition, geom: &BoundaryGeometry, lambda: f64) -> Result<usize> {
    let op = assemble_m(bc, geom, SpectralParam::free(lambda)?)?;
    let e = SymmetricEigen::new(op.matrix).eigenvalues;
    Ok(e.iter().filter(|v| **v > 0.0).count())
}

const RESOLVED_KAPPA_H: f64 = 2.0;

/// Smallest `λ` above which the inertia of `M_λ` no longer changes on a
/// logarithmic scan of `(1e-3, lambda_max]`, refined by bisection. Returns 0
/// when the inertia is constant.
pub fn estimate_lambda_bound(bc: &BoundaryCondition, geom: &BoundaryGeometry, lambda_max: f64) -> Result<f64> {
    let mut probe = bc.clone();
    probe.lambda_bound = 0.0;
    let lo = 1e-3f64;
    if !(lambda_max > lo) {
        return Err(Error::Parameter(format!("lambda_max {lambda_max} too small")));
    }
    // Beyond κh ≈ 2 the discrete spectrum no longer tracks the operator and
    // spurious inertia changes appear.
    let resolved = (RESOLVED_KAPPA_H / geom.max_spacing()).powi(2);
    let lambda_max = if lambda_max > resolved {
        log::warn!("lambda bound scan capped at {resolved:.3e} by the node spacing");
        resolved.max(2.0 * lo)
    } else {
        lambda_max
    };
    let steps = (8.0 * (lambda_max / lo).log10()).ceil() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| lo * (lambda_max / lo).powf(k as f64 / steps as f64))
        .collect();
    let counts: Vec<usize> = grid.iter().map(|l| inertia(&probe, geom, *l)).collect::<Result<_>>()?;
    let Some(k) = (0..steps).rev().find(|&k| counts[k] != counts[k + 1]) else {
        return Ok(0.0);
    };
    let (mut a, mut b) = (grid[k], grid[k + 1]);
    let top = counts[k + 1];
    for _ in 0..40 {
        let m = (a * b).sqrt();
        if inertia(&probe, geom, m)? == top {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}
