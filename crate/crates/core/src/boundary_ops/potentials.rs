use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryGeometry, Point};
use crate::kernels::{Dim, RadialKernel, SpectralParam};
use crate::quadrature::trig_upsample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Single,
    Double,
}

const MAX_UPSAMPLE: usize = 64;

/// Curve and density used for a target: the original ones, or a refined
/// copy when the target sits within two node spacings of the curve.
fn resolved<'a>(
    geom: &'a BoundaryGeometry,
    density: &'a [f64],
    targets: &[Point],
) -> Result<(std::borrow::Cow<'a, BoundaryGeometry>, std::borrow::Cow<'a, [f64]>)> {
    use std::borrow::Cow;
    if density.len() != geom.len() {
        return Err(Error::Parameter(format!(
            "density has {} values for {} nodes",
            density.len(),
            geom.len()
        )));
    }
    let spacing = geom.max_spacing();
    let closest = targets
        .iter()
        .map(|x| geom.distance_to(*x))
        .fold(f64::INFINITY, f64::min);
    if closest == 0.0 || closest < crate::geometry::BOUNDARY_TOLERANCE {
        return Err(Error::Singularity(format!("target on the boundary (distance {closest:e})")));
    }
    if closest >= 2.0 * spacing {
        return Ok((Cow::Borrowed(geom), Cow::Borrowed(density)));
    }
    let factor = ((2.0 * spacing / closest).ceil() as usize).clamp(2, MAX_UPSAMPLE);
    warn!(
        "target at distance {closest:.3e} is within two node spacings; upsampling the density by {factor}"
    );
    let fine = geom.refined(geom.len() * factor)?;
    let values = trig_upsample(density, factor);
    Ok((Cow::Owned(fine), Cow::Owned(values)))
}

/// Single- or double-layer potential of a nodal density at off-curve
/// targets. The double-layer kernel is `∂_ν(y) g(x, y)`.
pub fn evaluate_potential(
    geom: &BoundaryGeometry,
    kind: PotentialKind,
    density: &[f64],
    targets: &[Point],
    lambda: SpectralParam,
) -> Result<Vec<f64>> {
    let (g, phi) = resolved(geom, density, targets)?;
    let k = RadialKernel::new(Dim::Two, lambda);
    Ok(targets
        .iter()
        .map(|x| {
            let mut sum = 0.0;
            for j in 0..g.len() {
                let y = g.nodes()[j];
                let d = [y[0] - x[0], y[1] - x[1]];
                let r = d[0].hypot(d[1]);
                let kern = match kind {
                    PotentialKind::Single => k.value(r),
                    PotentialKind::Double => {
                        let nu = g.normals()[j];
                        k.derivative(r) * (d[0] * nu[0] + d[1] * nu[1]) / r
                    }
                };
                sum += kern * phi[j] * g.weights()[j];
            }
            sum
        })
        .collect())
}

/// Gradient in the target variable of [`evaluate_potential`].
pub fn evaluate_potential_gradient(
    geom: &BoundaryGeometry,
    kind: PotentialKind,
    density: &[f64],
    targets: &[Point],
    lambda: SpectralParam,
) -> Result<Vec<Point>> {
    let (g, phi) = resolved(geom, density, targets)?;
    let k = RadialKernel::new(Dim::Two, lambda);
    Ok(targets
        .iter()
        .map(|x| {
            let mut sum = [0.0, 0.0];
            for j in 0..g.len() {
                let y = g.nodes()[j];
                // d = x - y
                let d = [x[0] - y[0], x[1] - y[1]];
                let r = d[0].hypot(d[1]);
                let c = phi[j] * g.weights()[j];
                let g1 = k.derivative(r);
                match kind {
                    PotentialKind::Single => {
                        sum[0] += c * g1 * d[0] / r;
                        sum[1] += c * g1 * d[1] / r;
                    }
                    PotentialKind::Double => {
                        // kernel = -g'(r) (d·ν)/r
                        let nu = g.normals()[j];
                        let dn = d[0] * nu[0] + d[1] * nu[1];
                        let g2 = k.second_derivative(r);
                        let radial = (g2 / r - g1 / (r * r)) * dn / r;
                        for a in 0..2 {
                            sum[a] -= c * (radial * d[a] + g1 * nu[a] / r);
                        }
                    }
                }
            }
            sum
        })
        .collect())
}
