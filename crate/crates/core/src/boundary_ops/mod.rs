//! Boundary integral operators on closed curves and screens.
//!
//! Matrices act on orthonormal nodal coordinates `φ̂_j = √w_j φ(x_j)`, where
//! `w_j` are the trapezoid weights of the curve. In these coordinates the
//! Euclidean inner product is the discrete `L²(Γ)` product, so symmetric
//! operators have symmetric matrices and their eigenvalues approximate the
//! spectrum of the continuous operator.

mod assembly;
mod diagnostics;
mod potentials;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryGeometry, ScreenGeometry};
use crate::kernels::SpectralParam;

pub use assembly::{assemble_gamma0_sl, assemble_gamma1_dl, assemble_m, invert_m};
pub use diagnostics::{
    estimate_lambda_bound, exterior_reproduction_residual, gram_identity_residual,
    jump_relation_residual, sign_check, symmetry_residual, Definiteness, JumpKind, SignReport,
};
pub use potentials::{evaluate_potential, evaluate_potential_gradient, PotentialKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Gamma0Sl,
    Gamma1Dl,
    MDirichlet,
    MNeumann,
    MAlpha,
    MTheta,
}

/// Sobolev-space labels carried as metadata only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceTags {
    pub domain: String,
    pub codomain: String,
}

impl SpaceTags {
    fn for_kind(kind: OperatorKind) -> Self {
        let (d, c) = match kind {
            OperatorKind::Gamma0Sl | OperatorKind::MDirichlet | OperatorKind::MAlpha => {
                ("H^{-1/2}(Γ)", "H^{1/2}(Γ)")
            }
            OperatorKind::Gamma1Dl | OperatorKind::MNeumann | OperatorKind::MTheta => {
                ("H^{1/2}(Γ)", "H^{-1/2}(Γ)")
            }
        };
        Self {
            domain: d.into(),
            codomain: c.into(),
        }
    }

    fn swapped(&self) -> Self {
        Self {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
        }
    }
}

/// Dense operator on the active boundary nodes.
#[derive(Clone, Debug)]
pub struct BoundaryOperator {
    pub matrix: DMatrix<f64>,
    pub kind: OperatorKind,
    pub lambda: SpectralParam,
    pub screen: Option<ScreenGeometry>,
    pub space_tags: SpaceTags,
    /// Indices of the parent-curve nodes the rows refer to.
    pub active: Vec<usize>,
    pub inverted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Alpha,
    Theta,
}

/// Coefficient function on the curve, evaluated at the node parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant {
        value: f64,
    },
    /// `mean + Σ cos[k-1] cos(k t) + Σ sin[k-1] sin(k t)`
    Fourier {
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    Nodal {
        values: Vec<f64>,
    },
}

impl Coefficient {
    pub fn evaluate(&self, geom: &BoundaryGeometry) -> Result<Vec<f64>> {
        let v: Vec<f64> = match self {
            Coefficient::Constant { value } => vec![*value; geom.len()],
            Coefficient::Fourier { mean, cos, sin } => geom
                .params()
                .iter()
                .map(|t| {
                    let c: f64 = cos.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * t).cos()).sum();
                    let s: f64 = sin.iter().enumerate().map(|(k, b)| b * ((k + 1) as f64 * t).sin()).sum();
                    mean + c + s
                })
                .collect(),
            Coefficient::Nodal { values } => {
                if values.len() != geom.len() {
                    return Err(Error::Coefficient(format!(
                        "{} nodal values for {} nodes",
                        values.len(),
                        geom.len()
                    )));
                }
                values.clone()
            }
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Coefficient("coefficient has non-finite values".into()));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryCondition {
    pub kind: BcKind,
    pub coefficient: Option<Coefficient>,
    pub screen: Option<ScreenGeometry>,
    pub lambda_bound: f64,
}

impl BoundaryCondition {
    pub fn dirichlet() -> Self {
        Self::plain(BcKind::Dirichlet, None)
    }

    pub fn neumann() -> Self {
        Self::plain(BcKind::Neumann, None)
    }

    pub fn alpha(coefficient: Coefficient) -> Self {
        Self::plain(BcKind::Alpha, Some(coefficient))
    }

    pub fn theta(coefficient: Coefficient) -> Self {
        Self::plain(BcKind::Theta, Some(coefficient))
    }

    fn plain(kind: BcKind, coefficient: Option<Coefficient>) -> Self {
        Self {
            kind,
            coefficient,
            screen: None,
            lambda_bound: 0.0,
        }
    }

    pub fn with_screen(mut self, screen: ScreenGeometry) -> Self {
        self.screen = Some(screen);
        self
    }

    pub fn with_lambda_bound(mut self, bound: f64) -> Self {
        self.lambda_bound = bound;
        self
    }

    /// Checks the coefficient against the curve and returns its nodal
    /// values, or `None` for the Dirichlet and Neumann kinds.
    pub fn coefficient_values(&self, geom: &BoundaryGeometry) -> Result<Option<Vec<f64>>> {
        match self.kind {
            BcKind::Dirichlet | BcKind::Neumann => Ok(None),
            BcKind::Alpha | BcKind::Theta => {
                let c = self
                    .coefficient
                    .as_ref()
                    .ok_or_else(|| Error::Coefficient(format!("{:?} condition needs a coefficient", self.kind)))?;
                let v = c.evaluate(geom)?;
                if self.kind == BcKind::Alpha {
                    if let Some(j) = v.iter().position(|a| *a == 0.0 || !(1.0 / a).is_finite()) {
                        return Err(Error::Coefficient(format!("alpha vanishes at node {j}")));
                    }
                    if let Some(s) = &self.screen {
                        let idx = s.active_indices();
                        let first = v[idx[0]].signum();
                        if idx.iter().any(|&j| v[j].signum() != first) {
                            return Err(Error::Coefficient(
                                "alpha must have constant sign on a screen".into(),
                            ));
                        }
                    }
                }
                Ok(Some(v))
            }
        }
    }
}

/// `√w_j φ_j`
pub fn hat_from_nodal(geom: &BoundaryGeometry, values: &[f64]) -> Vec<f64> {
    values.iter().zip(geom.weights()).map(|(v, w)| v * w.sqrt()).collect()
}

/// `φ̂_j / √w_j`
pub fn nodal_from_hat(geom: &BoundaryGeometry, values: &[f64]) -> Vec<f64> {
    values.iter().zip(geom.weights()).map(|(v, w)| v / w.sqrt()).collect()
}
