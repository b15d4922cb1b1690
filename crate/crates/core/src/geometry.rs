//! Parametrized boundary curves, screens, probe regions and sampling grids.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

const TAU: f64 = 2.0 * PI;
/// Points closer than this to the boundary are not classified.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;
const DENSE_POLYGON: usize = 2048;

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn one() -> f64 {
    1.0
}

fn quarter() -> f64 {
    0.25
}

/// Built-in closed curves, all traversed counter-clockwise for `t ∈ [0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveShape {
    Circle {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `scale · (cos t + 0.65 cos 2t − 0.65, 1.5 sin t)`
    Kite {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `√(a cos² t + b sin² t) · (cos t, sin t)`
    Peanut {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "quarter")]
        b: f64,
    },
}

impl CurveShape {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let good = match *self {
            CurveShape::Circle { radius } => ok(radius),
            CurveShape::Ellipse { a, b } => ok(a) && ok(b),
            CurveShape::Kite { scale } => ok(scale),
            CurveShape::Peanut { a, b } => ok(a) && ok(b),
        };
        if good {
            Ok(())
        } else {
            Err(Error::Geometry(format!("degenerate shape parameters {self:?}")))
        }
    }

    /// Point and derivative at parameter `t`.
    pub fn eval(&self, t: f64) -> (Point, Point) {
        let (s, c) = t.sin_cos();
        match *self {
            CurveShape::Circle { radius } => ([radius * c, radius * s], [-radius * s, radius * c]),
            CurveShape::Ellipse { a, b } => ([a * c, b * s], [-a * s, b * c]),
            CurveShape::Kite { scale } => {
                let (s2, c2) = (2.0 * t).sin_cos();
                (
                    [scale * (c + 0.65 * c2 - 0.65), scale * 1.5 * s],
                    [scale * (-s - 1.3 * s2), scale * 1.5 * c],
                )
            }
            CurveShape::Peanut { a, b } => {
                let r = (a * c * c + b * s * s).sqrt();
                let dr = (b - a) * s * c / r;
                ([r * c, r * s], [dr * c - r * s, dr * s + r * c])
            }
        }
    }
}

/// Closed curve sampled at equispaced parameters.
#[derive(Clone, Debug)]
pub struct BoundaryGeometry {
    shape: CurveShape,
    center: Point,
    params: Vec<f64>,
    nodes: Vec<Point>,
    tangents: Vec<Point>,
    normals: Vec<Point>,
    speeds: Vec<f64>,
    weights: Vec<f64>,
    closed: bool,
    param_range: (f64, f64),
    polygon: Vec<Point>,
}

/// Discretizes `shape` with `n_nodes` equispaced parameters.
pub fn make_curve(shape: &CurveShape, n_nodes: usize) -> Result<BoundaryGeometry> {
    make_curve_at(shape, [0.0, 0.0], n_nodes)
}

/// As [`make_curve`], translated by `center`.
pub fn make_curve_at(shape: &CurveShape, center: Point, n_nodes: usize) -> Result<BoundaryGeometry> {
    shape.validate()?;
    if n_nodes < 8 || n_nodes % 2 != 0 {
        return Err(Error::Geometry(format!("node count must be even and at least 8, got {n_nodes}")));
    }
    if !center.iter().all(|c| c.is_finite()) {
        return Err(Error::Geometry("non-finite center".into()));
    }
    let h = TAU / n_nodes as f64;
    let mut g = BoundaryGeometry {
        shape: shape.clone(),
        center,
        params: Vec::with_capacity(n_nodes),
        nodes: Vec::with_capacity(n_nodes),
        tangents: Vec::with_capacity(n_nodes),
        normals: Vec::with_capacity(n_nodes),
        speeds: Vec::with_capacity(n_nodes),
        weights: Vec::with_capacity(n_nodes),
        closed: true,
        param_range: (0.0, TAU),
        polygon: Vec::new(),
    };
    for j in 0..n_nodes {
        let t = h * j as f64;
        let (q, dq) = shape.eval(t);
        let speed = dq[0].hypot(dq[1]);
        if !(speed > 0.0) {
            return Err(Error::Geometry(format!("vanishing tangent at t = {t}")));
        }
        g.params.push(t);
        g.nodes.push([q[0] + center[0], q[1] + center[1]]);
        g.tangents.push(dq);
        g.normals.push([dq[1] / speed, -dq[0] / speed]);
        g.speeds.push(speed);
        g.weights.push(h * speed);
    }
    g.polygon = (0..DENSE_POLYGON)
        .map(|j| g.point_at(TAU * j as f64 / DENSE_POLYGON as f64).0)
        .collect();
    Ok(g)
}

impl BoundaryGeometry {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// `q'(t_j)`, not normalized.
    pub fn tangents(&self) -> &[Point] {
        &self.tangents
    }

    /// Unit outward normals.
    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    /// `|q'(t_j)|`.
    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    /// Trapezoid weights `(2π/N)|q'(t_j)|`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn param_range(&self) -> (f64, f64) {
        self.param_range
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest distance between consecutive nodes.
    pub fn max_spacing(&self) -> f64 {
        let n = self.nodes.len();
        (0..n)
            .map(|j| dist(self.nodes[j], self.nodes[(j + 1) % n]))
            .fold(0.0, f64::max)
    }

    /// Same curve with a different node count.
    pub fn refined(&self, n_nodes: usize) -> Result<BoundaryGeometry> {
        make_curve_at(&self.shape, self.center, n_nodes)
    }

    /// Translated point and derivative at parameter `t`.
    pub fn point_at(&self, t: f64) -> (Point, Point) {
        let (q, dq) = self.shape.eval(t);
        ([q[0] + self.center[0], q[1] + self.center[1]], dq)
    }

    /// Bounding box `[xmin, xmax, ymin, ymax]` of the curve.
    pub fn bounding_box(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in &self.polygon {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].max(p[0]);
            b[2] = b[2].min(p[1]);
            b[3] = b[3].max(p[1]);
        }
        b
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.polygon.iter().enumerate().step_by(8) {
            for b in self.polygon[i..].iter().step_by(8) {
                d = d.max(dist(*a, *b));
            }
        }
        d
    }

    /// Closest point on the exact curve: `(t, q(t), distance)`.
    pub fn closest_point(&self, x: Point) -> (f64, Point, f64) {
        let (j, _) = self
            .polygon
            .iter()
            .enumerate()
            .map(|(j, p)| (j, dist(*p, x)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let h = TAU / DENSE_POLYGON as f64;
        let f = |t: f64| dist(self.point_at(t).0, x);
        let (mut a, mut b) = (h * j as f64 - h, h * j as f64 + h);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d);
            }
        }
        let t = 0.5 * (a + b);
        let q = self.point_at(t).0;
        (t.rem_euclid(TAU), q, dist(q, x))
    }

    /// Distance from `x` to the exact curve.
    pub fn distance_to(&self, x: Point) -> f64 {
        self.closest_point(x).2
    }

    /// Whether `x` lies inside the curve.
    pub fn contains(&self, x: Point) -> Result<bool> {
        contains(self, x)
    }
}

/// Containment test. Near the curve the side is read off the outward normal
/// at the closest point; elsewhere a winding number on a dense polygon
/// decides.
pub fn contains(geom: &BoundaryGeometry, x: Point) -> Result<bool> {
    if !x.iter().all(|c| c.is_finite()) {
        return Err(Error::Geometry(format!("non-finite point {x:?}")));
    }
    let (t, q, d) = geom.closest_point(x);
    if d < BOUNDARY_TOLERANCE {
        return Err(Error::BoundaryAmbiguity { point: x, distance: d });
    }
    let near = 8.0 * TAU / DENSE_POLYGON as f64 * geom.bounding_box_scale();
    if d < near {
        let (_, dq) = geom.point_at(t);
        let side = (x[0] - q[0]) * dq[1] - (x[1] - q[1]) * dq[0];
        return Ok(side < 0.0);
    }
    Ok(winding_number(&geom.polygon, x) != 0)
}

impl BoundaryGeometry {
    fn bounding_box_scale(&self) -> f64 {
        let b = self.bounding_box();
        (b[1] - b[0]).max(b[3] - b[2])
    }
}

fn winding_number(poly: &[Point], x: Point) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= x[1] {
            if b[1] > x[1] && cross > 0.0 {
                w += 1;
            }
        } else if b[1] <= x[1] && cross < 0.0 {
            w -= 1;
        }
    }
    w
}

/// A relatively open piece `Σ` of a closed curve: the nodes whose parameter
/// lies in `[start, start + length)` modulo `2π`.
#[derive(Clone, Debug)]
pub struct ScreenGeometry {
    parent: BoundaryGeometry,
    active_mask: Vec<bool>,
    endpoint_params: (f64, f64),
}

/// Screen on `parent` over the parameter interval `[a, b)`.
pub fn make_screen(parent: &BoundaryGeometry, interval: (f64, f64)) -> Result<ScreenGeometry> {
    let (a, b) = interval;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Screen("non-finite interval".into()));
    }
    let length = b - a;
    if length <= 0.0 {
        return Err(Error::Screen(format!("empty interval [{a}, {b}]")));
    }
    if length >= TAU - 1e-12 {
        return Err(Error::Screen(format!(
            "interval [{a}, {b}] covers the whole curve; a screen must be a proper subset"
        )));
    }
    let active_mask: Vec<bool> = parent
        .params()
        .iter()
        .map(|t| (t - a).rem_euclid(TAU) < length)
        .collect();
    let count = active_mask.iter().filter(|m| **m).count();
    if count < 4 {
        return Err(Error::Screen(format!(
            "interval [{a}, {b}] holds {count} nodes, at least 4 are required"
        )));
    }
    if count == parent.len() {
        return Err(Error::Screen("every node is active; the screen is not proper".into()));
    }
    Ok(ScreenGeometry {
        parent: parent.clone(),
        active_mask,
        endpoint_params: (a.rem_euclid(TAU), b.rem_euclid(TAU)),
    })
}

impl ScreenGeometry {
    pub fn parent(&self) -> &BoundaryGeometry {
        &self.parent
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active_mask
    }

    pub fn endpoint_params(&self) -> (f64, f64) {
        self.endpoint_params
    }

    /// Active node indices in parameter order starting at the first endpoint.
    pub fn active_indices(&self) -> Vec<usize> {
        let n = self.active_mask.len();
        let start = (0..n)
            .find(|&j| self.active_mask[j] && !self.active_mask[(j + n - 1) % n])
            .unwrap_or(0);
        (0..n)
            .map(|k| (start + k) % n)
            .filter(|&j| self.active_mask[j])
            .collect()
    }

    pub fn n_active(&self) -> usize {
        self.active_mask.iter().filter(|m| **m).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeLayout {
    Ring,
    DiskGrid,
}

/// Measurement region `B` as weighted sample points.
#[derive(Clone, Debug)]
pub struct ProbeRegion {
    points: Vec<Point>,
    weights: Vec<f64>,
}

/// Probe on a circle (`Ring`) or on the lattice cells of a disk
/// (`DiskGrid`). For the disk the lattice has `⌈√n_points⌉` cells per side;
/// cells whose centre lies in the disk are kept, weighted by the area of the
/// cell inside the disk.
pub fn make_probe(center: Point, radius: f64, n_points: usize, layout: ProbeLayout) -> Result<ProbeRegion> {
    if n_points < 8 {
        return Err(Error::Geometry(format!("probe needs at least 8 points, got {n_points}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Geometry(format!("probe radius {radius} must be positive")));
    }
    match layout {
        ProbeLayout::Ring => {
            let w = TAU * radius / n_points as f64;
            let points = (0..n_points)
                .map(|j| {
                    let (s, c) = (TAU * j as f64 / n_points as f64).sin_cos();
                    [center[0] + radius * c, center[1] + radius * s]
                })
                .collect();
            Ok(ProbeRegion {
                points,
                weights: vec![w; n_points],
            })
        }
        ProbeLayout::DiskGrid => {
            let m = (n_points as f64).sqrt().ceil() as usize;
            let h = 2.0 * radius / m as f64;
            let sub = 16;
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for iy in 0..m {
                for ix in 0..m {
                    let x = -radius + h * (ix as f64 + 0.5);
                    let y = -radius + h * (iy as f64 + 0.5);
                    if x * x + y * y > radius * radius {
                        continue;
                    }
                    let mut inside = 0usize;
                    for sy in 0..sub {
                        for sx in 0..sub {
                            let u = x + h * ((sx as f64 + 0.5) / sub as f64 - 0.5);
                            let v = y + h * ((sy as f64 + 0.5) / sub as f64 - 0.5);
                            if u * u + v * v <= radius * radius {
                                inside += 1;
                            }
                        }
                    }
                    points.push([center[0] + x, center[1] + y]);
                    weights.push(h * h * inside as f64 / (sub * sub) as f64);
                }
            }
            Ok(ProbeRegion { points, weights })
        }
    }
}

impl ProbeRegion {
    /// Probe from explicit points and weights.
    pub fn from_points(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::Geometry("probe points and weights must match and be nonempty".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Geometry("probe weights must be positive".into()));
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// True iff every probe point is outside the curve and farther than
/// `margin` from every boundary node.
pub fn validate_separation(geom: &BoundaryGeometry, probe: &ProbeRegion, margin: f64) -> Result<bool> {
    if !(margin > 0.0) {
        return Err(Error::Parameter(format!("margin {margin} must be positive")));
    }
    for p in probe.points() {
        if geom.nodes().iter().any(|q| dist(*p, *q) <= margin) {
            return Ok(false);
        }
        match contains(geom, *p) {
            Ok(false) => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Rectangular lattice including the bounding box edges. Points are stored
/// row by row, `x` varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationGrid {
    bounds: [f64; 4],
    resolution: usize,
    points: Vec<Point>,
}

impl EvaluationGrid {
    /// `bounds = [xmin, xmax, ymin, ymax]`.
    pub fn new(bounds: [f64; 4], resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Geometry(format!("grid resolution must be at least 2, got {resolution}")));
        }
        if !bounds.iter().all(|b| b.is_finite()) || bounds[1] <= bounds[0] || bounds[3] <= bounds[2] {
            return Err(Error::Geometry(format!("degenerate grid bounds {bounds:?}")));
        }
        let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
        let mut points = Vec::with_capacity(resolution * resolution);
        for iy in 0..resolution {
            for ix in 0..resolution {
                points.push([step(bounds[0], bounds[1], ix), step(bounds[2], bounds[3], iy)]);
            }
        }
        Ok(Self {
            bounds,
            resolution,
            points,
        })
    }

    /// Grid whose box strictly contains the curve, checked.
    pub fn covering(geom: &BoundaryGeometry, bounds: [f64; 4], resolution: usize) -> Result<Self> {
        let g = Self::new(bounds, resolution)?;
        let b = geom.bounding_box();
        if !(bounds[0] < b[0] && bounds[1] > b[1] && bounds[2] < b[2] && bounds[3] > b[3]) {
            return Err(Error::Geometry(format!(
                "grid bounds {bounds:?} do not strictly contain the obstacle box {b:?}"
            )));
        }
        Ok(g)
    }

    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_perimeter() {
        let g = make_curve(&CurveShape::Circle { radius: 1.0 }, 64).unwrap();
        assert!((g.perimeter() - TAU).abs() < 1e-10);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(make_curve(&CurveShape::Circle { radius: 0.0 }, 64).is_err());
        assert!(make_curve(&CurveShape::Circle { radius: 1.0 }, 63).is_err());
        assert!(make_curve(&CurveShape::Circle { radius: 1.0 }, 6).is_err());
    }

    #[test]
    fn half_circle_screen() {
        let g = make_curve(&CurveShape::Circle { radius: 1.0 }, 64).unwrap();
        let s = make_screen(&g, (0.0, PI)).unwrap();
        assert_eq!(s.n_active(), 32);
        assert!(make_screen(&g, (0.0, TAU)).is_err());
        assert!(make_screen(&g, (0.3, 0.35)).is_err());
    }

    #[test]
    fn wrapped_screen_is_contiguous() {
        let g = make_curve(&CurveShape::Circle { radius: 1.0 }, 32).unwrap();
        let s = make_screen(&g, (5.0, 7.0)).unwrap();
        let idx = s.active_indices();
        let n = g.len();
        for w in idx.windows(2) {
            assert_eq!((w[0] + 1) % n, w[1]);
        }
    }

    #[test]
    fn unit_circle_containment() {
        let g = make_curve(&CurveShape::Circle { radius: 1.0 }, 64).unwrap();
        assert!(g.contains([0.0, 0.0]).unwrap());
        assert!(!g.contains([2.0, 0.0]).unwrap());
        assert!(g.contains([0.9999, 0.0]).unwrap());
        assert!(!g.contains([1.0001, 0.0]).unwrap());
        assert!(matches!(g.contains([1.0, 0.0]), Err(Error::BoundaryAmbiguity { .. })));
    }

    #[test]
    fn grid_resolution_one_rejected() {
        assert!(EvaluationGrid::new([-1.0, 1.0, -1.0, 1.0], 1).is_err());
    }
}
