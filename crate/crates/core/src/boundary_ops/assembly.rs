use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{BcKind, BoundaryCondition, BoundaryOperator, OperatorKind, SpaceTags};
use crate::error::{Error, Result};
use crate::geometry::{dist, BoundaryGeometry};
use crate::kernels::{bessel_i0, bessel_k0, SpectralParam, EULER_GAMMA};
use crate::quadrature::{kress_log_weights, trig_diff_matrix};

/// Condition numbers above this abort inversion.
pub const CONDITION_CAP: f64 = 1e12;

fn check_curve(geom: &BoundaryGeometry) -> Result<()> {
    if !geom.closed() {
        return Err(Error::Assembly("open arcs need the screen path".into()));
    }
    if geom.len() < 8 || geom.len() % 2 != 0 {
        return Err(Error::Assembly(format!(
            "log splitting needs an even node count of at least 8, got {}",
            geom.len()
        )));
    }
    Ok(())
}

/// Largest `κ r` carried by the logarithmic part of the split.
const LOG_WINDOW_REACH: f64 = 6.0;

/// C∞ cutoff in the parameter distance. Without it the smooth remainder
/// holds `I_0(κ r) ln(..)` which grows like `e^{κ r}` and cancels against the
/// exponentially small `K_0` once `κ·diam` is large.
struct LogWindow {
    inner: f64,
    outer: f64,
}

impl LogWindow {
    fn new(kappa_speed: f64) -> Self {
        let outer = LOG_WINDOW_REACH / kappa_speed;
        if outer >= PI {
            Self { inner: PI, outer: PI }
        } else {
            Self { inner: 0.5 * outer, outer }
        }
    }

    fn weight(&self, dt: f64) -> f64 {
        let tau = dt.abs() % (2.0 * PI);
        let tau = tau.min(2.0 * PI - tau);
        if tau <= self.inner {
            return 1.0;
        }
        if tau >= self.outer {
            return 0.0;
        }
        let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
        let u = (tau - self.inner) / (self.outer - self.inner);
        f(1.0 - u) / (f(1.0 - u) + f(u))
    }
}

/// Kress product-quadrature matrix for the 2D kernel `K_0(κ r)/(2π)` in the
/// parameter variable, without the Jacobian.
fn kress_matrix(geom: &BoundaryGeometry, kappa: f64) -> DMatrix<f64> {
    let n = geom.len();
    let half = (n / 2) as f64;
    let r = kress_log_weights(n);
    let nodes = geom.nodes();
    let t = geom.params();
    let window = LogWindow::new(kappa * geom.speeds().iter().cloned().fold(0.0, f64::max));
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let diag = -((0.5 * kappa * geom.speeds()[i]).ln() + EULER_GAMMA) / (2.0 * PI);
        k[(i, i)] = r[0] * (-1.0 / (4.0 * PI)) + PI / half * diag;
        for j in 0..i {
            let z = kappa * dist(nodes[i], nodes[j]);
            let chi = window.weight(t[i] - t[j]);
            let m1 = if chi > 0.0 { -chi * bessel_i0(z) / (4.0 * PI) } else { 0.0 };
            let log = (4.0 * (0.5 * (t[i] - t[j])).sin().powi(2)).ln();
            let m2 = bessel_k0(z) / (2.0 * PI) - m1 * log;
            let v = r[i - j] * m1 + PI / half * m2;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn sl_hat(geom: &BoundaryGeometry, ktilde: &DMatrix<f64>) -> DMatrix<f64> {
    let s: Vec<f64> = geom.speeds().iter().map(|v| v.sqrt()).collect();
    DMatrix::from_fn(geom.len(), geom.len(), |i, j| ktilde[(i, j)] * s[i] * s[j])
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn operator(matrix: DMatrix<f64>, kind: OperatorKind, lambda: SpectralParam, n: usize) -> BoundaryOperator {
    BoundaryOperator {
        matrix,
        kind,
        lambda,
        screen: None,
        space_tags: SpaceTags::for_kind(kind),
        active: (0..n).collect(),
        inverted: false,
    }
}

/// Single-layer trace `γ₀SL_λ` by Nyström quadrature with logarithmic
/// splitting.
pub fn assemble_gamma0_sl(geom: &BoundaryGeometry, lambda: SpectralParam) -> Result<BoundaryOperator> {
    check_curve(geom)?;
    let k = kress_matrix(geom, lambda.kappa());
    let mut s = sl_hat(geom, &k);
    symmetrize(&mut s);
    Ok(operator(s, OperatorKind::Gamma0Sl, lambda, geom.len()))
}

/// Hypersingular trace `γ₁DL_λ` in Maue form
/// `Tφ = d/ds S(dφ/ds) − λ ν·S(νφ)`, with spectral differentiation.
pub fn assemble_gamma1_dl(geom: &BoundaryGeometry, lambda: SpectralParam) -> Result<BoundaryOperator> {
    check_curve(geom)?;
    let (_, t) = sl_and_t(geom, lambda);
    Ok(operator(t, OperatorKind::Gamma1Dl, lambda, geom.len()))
}

fn sl_and_t(geom: &BoundaryGeometry, lambda: SpectralParam) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = geom.len();
    let k = kress_matrix(geom, lambda.kappa());
    let s = sl_hat(geom, &k);
    let d = trig_diff_matrix(n);
    let inv_sqrt: Vec<f64> = geom.speeds().iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut dkd = &d * &k * &d;
    // D annihilates the alternating mode z, whose interpolant still has
    // derivative -(n/2) sin(n t / 2). Restore it with the Rayleigh value of K
    // on z standing in for its action on that sine.
    let z = DVector::from_fn(n, |j, _| if j % 2 == 0 { 1.0 } else { -1.0 });
    let rho = z.dot(&(&k * &z)) / n as f64;
    let half = (n / 2) as f64;
    dkd -= &z * z.transpose() * (half * half * rho / n as f64);
    let normals = geom.normals();
    let mut t = DMatrix::from_fn(n, n, |i, j| {
        let nn = normals[i][0] * normals[j][0] + normals[i][1] * normals[j][1];
        inv_sqrt[i] * dkd[(i, j)] * inv_sqrt[j] - lambda.lambda() * nn * s[(i, j)]
    });
    symmetrize(&mut t);
    let mut s = s;
    symmetrize(&mut s);
    (s, t)
}

/// The operator `M_λ` of a boundary condition, compressed to the screen
/// nodes when the condition carries a screen.
pub fn assemble_m(bc: &BoundaryCondition, geom: &BoundaryGeometry, lambda: SpectralParam) -> Result<BoundaryOperator> {
    if lambda.lambda() <= bc.lambda_bound {
        return Err(Error::SpectralParameter(format!(
            "lambda = {} must exceed the condition's bound {}",
            lambda.lambda(),
            bc.lambda_bound
        )));
    }
    check_curve(geom)?;
    if let Some(s) = &bc.screen {
        if s.parent().len() != geom.len() || s.parent().shape() != geom.shape() {
            return Err(Error::Screen("screen belongs to a different curve".into()));
        }
    }
    let coef = bc.coefficient_values(geom)?;
    let n = geom.len();
    let (matrix, kind) = match bc.kind {
        BcKind::Dirichlet => (-sl_hat(geom, &kress_matrix(geom, lambda.kappa())), OperatorKind::MDirichlet),
        BcKind::Neumann => (-sl_and_t(geom, lambda).1, OperatorKind::MNeumann),
        BcKind::Alpha => {
            let a = coef.expect("alpha values");
            let mut m = -sl_hat(geom, &kress_matrix(geom, lambda.kappa()));
            for j in 0..n {
                m[(j, j)] -= 1.0 / a[j];
            }
            (m, OperatorKind::MAlpha)
        }
        BcKind::Theta => {
            let th = coef.expect("theta values");
            let mut m = -sl_and_t(geom, lambda).1;
            for j in 0..n {
                m[(j, j)] += th[j];
            }
            (m, OperatorKind::MTheta)
        }
    };
    let mut matrix = matrix;
    symmetrize(&mut matrix);
    let mut op = operator(matrix, kind, lambda, n);
    if let Some(screen) = &bc.screen {
        let idx = screen.active_indices();
        op.matrix = DMatrix::from_fn(idx.len(), idx.len(), |i, j| op.matrix[(idx[i], idx[j])]);
        op.active = idx;
        op.screen = Some(screen.clone());
    }
    Ok(op)
}

/// Dense inverse through the symmetric eigendecomposition.
pub fn invert_m(op: &BoundaryOperator) -> Result<BoundaryOperator> {
    let eig = SymmetricEigen::new(op.matrix.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= CONDITION_CAP) {
        return Err(Error::Inversion { condition });
    }
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] / eig.eigenvalues[j]);
    let mut inv = scaled * v.transpose();
    symmetrize(&mut inv);
    Ok(BoundaryOperator {
        matrix: inv,
        kind: op.kind,
        lambda: op.lambda,
        screen: op.screen.clone(),
        space_tags: op.space_tags.swapped(),
        active: op.active.clone(),
        inverted: !op.inverted,
    })
}
