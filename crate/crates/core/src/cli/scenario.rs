//! Scenario files: TOML with a `schema_version` field.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary_ops::{estimate_lambda_bound, BcKind, BoundaryCondition, Coefficient};
use crate::error::{Error, Result};
use crate::geometry::{
    make_curve_at, make_probe, make_screen, BoundaryGeometry, CurveShape, EvaluationGrid, Point, ProbeLayout,
    ProbeRegion,
};
use crate::kernels::SpectralParam;
use crate::reconstruction::{SegmentRule, TestArc, DEFAULT_TRUNCATION_FLOOR};

pub const SCHEMA_VERSION: u32 = 1;

fn default_floor() -> f64 {
    DEFAULT_TRUNCATION_FLOOR
}

fn default_margin() -> f64 {
    0.1
}

fn default_quad() -> usize {
    32
}

fn default_out() -> String {
    "out".into()
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometrySection,
    pub boundary_condition: BcSection,
    pub probe: ProbeSection,
    pub spectral: SpectralSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screen_sweep: Option<ScreenSweepSection>,
    #[serde(default)]
    pub outputs: OutputsSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub shape: CurveShape,
    #[serde(default)]
    pub center: Point,
    pub nodes: usize,
    /// Parameter interval `[a, b)` of a screen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screen: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSection {
    pub kind: BcKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<Coefficient>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub layout: ProbeLayout,
    #[serde(default)]
    pub center: Point,
    pub radius: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub lambda: f64,
    #[serde(default = "default_floor")]
    pub truncation_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_level: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// `[xmin, xmax, ymin, ymax]`
    pub bounds: [f64; 4],
    pub resolution: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub segmentation: SegmentRule,
}

/// Test arcs of equal parameter length with equispaced starts along a test
/// curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenSweepSection {
    pub curve: CurveShape,
    #[serde(default)]
    pub center: Point,
    pub arc_length: f64,
    pub count: usize,
    #[serde(default = "default_quad")]
    pub n_quad: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "default_out")]
    pub dir: String,
    #[serde(default = "default_true")]
    pub operator_dump: bool,
    #[serde(default = "default_true")]
    pub heatmap: bool,
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self {
            dir: default_out(),
            operator_dump: true,
            heatmap: true,
        }
    }
}

fn invalid(e: Error) -> Error {
    match e {
        Error::Validation(_) => e,
        other => Error::Validation(other.to_string()),
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| e.context(format!("scenario {}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks every section and the cross references between them.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let geom = self.build_geometry()?;
        self.build_probe()?;
        if let Some(g) = &self.grid {
            EvaluationGrid::covering(&geom, g.bounds, g.resolution).map_err(invalid)?;
            if !(g.margin >= 0.0) {
                return Err(Error::Validation("grid margin must be non-negative".into()));
            }
        }
        let s = &self.spectral;
        if !(s.truncation_floor > 0.0 && s.truncation_floor < 1.0) {
            return Err(Error::Validation("truncation_floor must lie in (0, 1)".into()));
        }
        if let Some(n) = s.noise_level {
            if !(n >= 0.0) {
                return Err(Error::Validation("noise_level must be non-negative".into()));
            }
        }
        let bound = self.boundary_condition.lambda_bound.unwrap_or(0.0);
        SpectralParam::new(s.lambda, bound).map_err(invalid)?;
        if let Some(sw) = &self.screen_sweep {
            sw.curve.validate().map_err(invalid)?;
            if !(sw.arc_length > 0.0 && sw.arc_length < 2.0 * PI) || sw.count == 0 || sw.n_quad == 0 {
                return Err(Error::Validation("screen_sweep needs 0 < arc_length < 2π and positive counts".into()));
            }
        }
        let bc = &self.boundary_condition;
        match (bc.kind, &bc.coefficient) {
            (BcKind::Alpha | BcKind::Theta, None) => {
                return Err(Error::Validation(format!("{:?} condition needs a coefficient", bc.kind)))
            }
            (BcKind::Dirichlet | BcKind::Neumann, Some(_)) => {
                return Err(Error::Validation(format!("{:?} condition takes no coefficient", bc.kind)))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn build_geometry(&self) -> Result<BoundaryGeometry> {
        let g = &self.geometry;
        let geom = make_curve_at(&g.shape, g.center, g.nodes).map_err(invalid)?;
        if let Some([a, b]) = g.screen {
            make_screen(&geom, (a, b)).map_err(invalid)?;
        }
        Ok(geom)
    }

    pub fn build_probe(&self) -> Result<ProbeRegion> {
        let p = &self.probe;
        make_probe(p.center, p.radius, p.count, p.layout).map_err(invalid)
    }

    /// Boundary condition with its screen and spectral bound. Without an
    /// override, the bound of α and θ conditions is estimated.
    pub fn build_bc(&self, geom: &BoundaryGeometry) -> Result<BoundaryCondition> {
        let b = &self.boundary_condition;
        let mut bc = match b.kind {
            BcKind::Dirichlet => BoundaryCondition::dirichlet(),
            BcKind::Neumann => BoundaryCondition::neumann(),
            BcKind::Alpha => BoundaryCondition::alpha(b.coefficient.clone().expect("validated")),
            BcKind::Theta => BoundaryCondition::theta(b.coefficient.clone().expect("validated")),
        };
        if let Some([a, c]) = self.geometry.screen {
            bc = bc.with_screen(make_screen(geom, (a, c)).map_err(invalid)?);
        }
        let bound = match (b.lambda_bound, b.kind) {
            (Some(v), _) => v,
            (None, BcKind::Dirichlet | BcKind::Neumann) => 0.0,
            (None, _) => estimate_lambda_bound(&bc, geom, 1e3)?,
        };
        Ok(bc.with_lambda_bound(bound))
    }

    pub fn lambda(&self, bc: &BoundaryCondition) -> Result<SpectralParam> {
        SpectralParam::new(self.spectral.lambda, bc.lambda_bound)
    }

    pub fn build_grid(&self, geom: &BoundaryGeometry) -> Result<Option<EvaluationGrid>> {
        self.grid
            .as_ref()
            .map(|g| EvaluationGrid::covering(geom, g.bounds, g.resolution).map_err(invalid))
            .transpose()
    }

    /// Arcs of the screen sweep, centred at equispaced parameters.
    pub fn build_arcs(&self) -> Option<Vec<TestArc>> {
        self.screen_sweep.as_ref().map(|s| {
            (0..s.count)
                .map(|k| {
                    let mid = 2.0 * PI * (k as f64 + 0.5) / s.count as f64;
                    TestArc {
                        shape: s.curve.clone(),
                        center: s.center,
                        start: mid - 0.5 * s.arc_length,
                        end: mid + 0.5 * s.arc_length,
                    }
                })
                .collect()
        })
    }
}
