//! Convex planar domains, their normalized arc-length parameterization, and
//! casting of characteristic chords with slopes `±√(1−λ²)/λ`.
//!
//! Every domain boundary is stored as a counterclockwise chain of line
//! segments and circular arcs. Arc length is measured from the
//! lexicographically smallest segment junction, so `s = 0` is the origin
//! corner for the unit square.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Accepted distance from the boundary for user supplied points.
pub const INPUT_TOL: f64 = 1e-6;
/// Internal consistency tolerance (vertex proximity, round trips).
pub const CONSISTENCY_TOL: f64 = 1e-9;
/// Angular tolerance (sine of the angle) for a chord running along an edge.
pub const PARALLEL_TOL: f64 = 1e-12;

// Slack for accepting an intersection parameter just outside a segment.
const SEGMENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point ({x}, {y}) is {distance:e} away from the boundary")]
    PointNotOnBoundary { x: f64, y: f64, distance: f64 },
    #[error("chord meets the boundary at a corner near ({x}, {y})")]
    VertexHit { x: f64, y: f64 },
    #[error("chord direction is parallel to boundary edge {edge}")]
    EdgeParallel { edge: usize },
    #[error("lambda = {0} is outside (0, 1)")]
    DegenerateLambda(f64),
}

/// Serializable description of a domain, matching the domain JSON file
/// format (`{"type":"unit_square"}`, `{"type":"polygon","vertices":...}`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainSpec {
    UnitSquare,
    Polygon { vertices: Vec<[f64; 2]> },
    /// The unit square rotated by `angle` radians about its center.
    TiltedSquare { angle: f64 },
    /// Isosceles trapezoid with its bottom edge on `y = 0` starting at the
    /// origin and the top edge centered above it.
    Trapezoid { bottom_width: f64, top_width: f64, height: f64 },
    /// Unit square with each corner replaced by a quarter circle.
    RoundedSquare { corner_radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Segment {
    Line { start: Vec2, end: Vec2 },
    /// Counterclockwise arc from `start_angle` through `sweep` radians.
    Arc { center: Vec2, radius: f64, start_angle: f64, sweep: f64 },
}

impl Segment {
    fn length(&self) -> f64 {
        match *self {
            Segment::Line { start, end } => (end - start).norm(),
            Segment::Arc { radius, sweep, .. } => radius * sweep,
        }
    }

    fn start_point(&self) -> Vec2 {
        self.point_at(0.0)
    }

    fn point_at(&self, local: f64) -> Vec2 {
        match *self {
            Segment::Line { start, end } => {
                let len = (end - start).norm();
                start + (end - start) * (local / len)
            }
            Segment::Arc { center, radius, start_angle, .. } => {
                let phi = start_angle + local / radius;
                center + Vec2::new(radius * phi.cos(), radius * phi.sin())
            }
        }
    }

    /// Closest point on the segment: (local arc length, distance).
    fn project(&self, p: Vec2) -> (f64, f64) {
        match *self {
            Segment::Line { start, end } => {
                let e = end - start;
                let len = e.norm();
                let u = ((p - start).dot(&e) / (len * len)).clamp(0.0, 1.0);
                let local = u * len;
                (local, (self.point_at(local) - p).norm())
            }
            Segment::Arc { center, radius, start_angle, sweep } => {
                let w = p - center;
                let rel = (w.y.atan2(w.x) - start_angle).rem_euclid(TAU);
                let rel = if rel <= sweep {
                    rel
                } else if rel - sweep < TAU - rel {
                    sweep
                } else {
                    0.0
                };
                let local = rel * radius;
                (local, (self.point_at(local) - p).norm())
            }
        }
    }

    /// Intersections of `origin + t·dir` (unit `dir`) with this segment,
    /// pushed as `(t, local arc length)`.
    fn intersect_line(&self, origin: Vec2, dir: Vec2, out: &mut Vec<(f64, f64)>) {
        match *self {
            Segment::Line { start, end } => {
                let e = end - start;
                let denom = dir.perp(&e);
                if denom == 0.0 {
                    return;
                }
                let w = start - origin;
                let t = w.perp(&e) / denom;
                let u = w.perp(&dir) / denom;
                if (-SEGMENT_SLACK..=1.0 + SEGMENT_SLACK).contains(&u) {
                    out.push((t, u.clamp(0.0, 1.0) * e.norm()));
                }
            }
            Segment::Arc { center, radius, start_angle, sweep } => {
                let w = origin - center;
                let b = dir.dot(&w);
                let c = w.dot(&w) - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return;
                }
                let root = disc.sqrt();
                for t in [-b - root, -b + root] {
                    let q = origin + dir * t - center;
                    let rel = (q.y.atan2(q.x) - start_angle).rem_euclid(TAU);
                    let rel = if rel <= sweep + SEGMENT_SLACK {
                        rel.min(sweep)
                    } else if rel >= TAU - SEGMENT_SLACK {
                        0.0
                    } else {
                        continue;
                    };
                    out.push((t, rel * radius));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Interior {
    Polygon,
    RoundedSquare { corner_radius: f64 },
}

/// A validated convex domain with its boundary chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    spec: DomainSpec,
    segments: Vec<Segment>,
    offsets: Vec<f64>,
    perimeter: f64,
    corners: Vec<Vec2>,
    interior: Interior,
}

/// A point on the boundary carrying both its normalized parameter and
/// Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
}

impl BoundaryPoint {
    pub fn xy(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn distance(&self, other: &BoundaryPoint) -> f64 {
        (self.xy() - other.xy()).norm()
    }
}

/// Chord orientation: `Positive` travels along slope `+ρ`, `Negative` along `−ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChordSign {
    Positive,
    Negative,
}

impl ChordSign {
    pub fn value(self) -> f64 {
        match self {
            ChordSign::Positive => 1.0,
            ChordSign::Negative => -1.0,
        }
    }
}

/// Forcing frequency `λ ∈ (0,1)` and the derived chord slope magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChessParams {
    lambda: f64,
    rho: f64,
}

impl ChessParams {
    pub fn new(lambda: f64) -> Result<Self, GeometryError> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(GeometryError::DegenerateLambda(lambda));
        }
        let rho = (1.0 - lambda * lambda).sqrt() / lambda;
        Ok(Self { lambda, rho })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Unit vector along `(1, ±ρ)`, i.e. `(λ, ±√(1−λ²))`.
    pub fn direction(&self, sign: ChordSign) -> Vec2 {
        let l = self.lambda;
        Vec2::new(l, sign.value() * (1.0 - l * l).sqrt())
    }
}

fn wrap_unit(s: f64) -> f64 {
    let w = s.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

fn lexicographic_lt(a: Vec2, b: Vec2) -> bool {
    a.x < b.x || (a.x == b.x && a.y < b.y)
}

fn validate_convex_ccw(vertices: &[Vec2]) -> Result<(), GeometryError> {
    let n = vertices.len();
    if n < 3 {
        return Err(GeometryError::InvalidDomain(format!(
            "polygon needs at least 3 vertices, got {n}"
        )));
    }
    if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
        return Err(GeometryError::InvalidDomain("non-finite vertex".into()));
    }
    let mut turning = 0.0;
    for i in 0..n {
        let prev = vertices[(i + n - 1) % n];
        let cur = vertices[i];
        let next = vertices[(i + 1) % n];
        let a = cur - prev;
        let b = next - cur;
        if a.norm() == 0.0 || b.norm() == 0.0 {
            return Err(GeometryError::InvalidDomain(format!("repeated vertex {i}")));
        }
        let cross = a.perp(&b);
        if cross <= 0.0 {
            return Err(GeometryError::InvalidDomain(format!(
                "vertex {i} is not a strictly convex counterclockwise turn"
            )));
        }
        turning += cross.atan2(a.dot(&b));
    }
    // A star polygon turns left everywhere but winds more than once.
    if (turning - TAU).abs() > 1e-6 {
        return Err(GeometryError::InvalidDomain(
            "polygon boundary is not simple".into(),
        ));
    }
    Ok(())
}

impl Domain {
    pub fn unit_square() -> Self {
        Self::from_spec(&DomainSpec::UnitSquare).expect("unit square is valid")
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self, GeometryError> {
        match *spec {
            DomainSpec::UnitSquare => Self::polygon_domain(spec, unit_square_vertices()),
            DomainSpec::Polygon { ref vertices } => Self::polygon_domain(
                spec,
                vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect(),
            ),
            DomainSpec::TiltedSquare { angle } => {
                if !angle.is_finite() {
                    return Err(GeometryError::InvalidDomain("non-finite tilt angle".into()));
                }
                let center = Vec2::new(0.5, 0.5);
                let (sin, cos) = angle.sin_cos();
                let rotated = unit_square_vertices()
                    .into_iter()
                    .map(|v| {
                        let w = v - center;
                        center + Vec2::new(cos * w.x - sin * w.y, sin * w.x + cos * w.y)
                    })
                    .collect();
                Self::polygon_domain(spec, rotated)
            }
            DomainSpec::Trapezoid { bottom_width, top_width, height } => {
                let ok = |v: f64| v.is_finite() && v > 0.0;
                if !(ok(bottom_width) && ok(top_width) && ok(height)) {
                    return Err(GeometryError::InvalidDomain(
                        "trapezoid widths and height must be positive".into(),
                    ));
                }
                let inset = (bottom_width - top_width) / 2.0;
                Self::polygon_domain(
                    spec,
                    vec![
                        Vec2::new(0.0, 0.0),
                        Vec2::new(bottom_width, 0.0),
                        Vec2::new(inset + top_width, height),
                        Vec2::new(inset, height),
                    ],
                )
            }
            DomainSpec::RoundedSquare { corner_radius } => {
                if !(corner_radius > 0.0 && corner_radius < 0.5) {
                    return Err(GeometryError::InvalidDomain(format!(
                        "corner radius {corner_radius} outside (0, 1/2)"
                    )));
                }
                let c = corner_radius;
                let line = |a: (f64, f64), b: (f64, f64)| Segment::Line {
                    start: Vec2::new(a.0, a.1),
                    end: Vec2::new(b.0, b.1),
                };
                let arc = |cx: f64, cy: f64, start_angle: f64| Segment::Arc {
                    center: Vec2::new(cx, cy),
                    radius: c,
                    start_angle,
                    sweep: FRAC_PI_2,
                };
                let segments = vec![
                    line((c, 0.0), (1.0 - c, 0.0)),
                    arc(1.0 - c, c, -FRAC_PI_2),
                    line((1.0, c), (1.0, 1.0 - c)),
                    arc(1.0 - c, 1.0 - c, 0.0),
                    line((1.0 - c, 1.0), (c, 1.0)),
                    arc(c, 1.0 - c, FRAC_PI_2),
                    line((0.0, 1.0 - c), (0.0, c)),
                    arc(c, c, PI),
                ];
                Ok(Self::assemble(
                    spec.clone(),
                    segments,
                    Vec::new(),
                    Interior::RoundedSquare { corner_radius: c },
                ))
            }
        }
    }

    fn polygon_domain(spec: &DomainSpec, vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        validate_convex_ccw(&vertices)?;
        let n = vertices.len();
        let segments = (0..n)
            .map(|i| Segment::Line { start: vertices[i], end: vertices[(i + 1) % n] })
            .collect();
        Ok(Self::assemble(spec.clone(), segments, vertices, Interior::Polygon))
    }

    fn assemble(
        spec: DomainSpec,
        mut segments: Vec<Segment>,
        corners: Vec<Vec2>,
        interior: Interior,
    ) -> Self {
        let anchor = (0..segments.len())
            .reduce(|best, i| {
                if lexicographic_lt(segments[i].start_point(), segments[best].start_point()) {
                    i
                } else {
                    best
                }
            })
            .unwrap_or(0);
        segments.rotate_left(anchor);
        let mut offsets = Vec::with_capacity(segments.len());
        let mut acc = 0.0;
        for seg in &segments {
            offsets.push(acc);
            acc += seg.length();
        }
        Self { spec, segments, offsets, perimeter: acc, corners, interior }
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Corner points where the chess billiard map is undefined. Empty for
    /// boundaries without corners (rounded square).
    pub fn corners(&self) -> &[Vec2] {
        &self.corners
    }

    /// Signed distance to the boundary, positive strictly inside.
    pub fn interior_margin(&self, p: Vec2) -> f64 {
        match self.interior {
            Interior::Polygon => self
                .segments
                .iter()
                .map(|seg| match *seg {
                    Segment::Line { start, end } => {
                        let e = end - start;
                        e.perp(&(p - start)) / e.norm()
                    }
                    Segment::Arc { .. } => unreachable!("polygons have no arcs"),
                })
                .fold(f64::INFINITY, f64::min),
            Interior::RoundedSquare { corner_radius } => {
                let half = 0.5 - corner_radius;
                let q = Vec2::new((p.x - 0.5).abs() - half, (p.y - 0.5).abs() - half);
                let outside = Vec2::new(q.x.max(0.0), q.y.max(0.0)).norm();
                let inside = q.x.max(q.y).min(0.0);
                corner_radius - (outside + inside)
            }
        }
    }

    fn point_from_local(&self, index: usize, local: f64) -> BoundaryPoint {
        let xy = self.segments[index].point_at(local);
        BoundaryPoint {
            s: wrap_unit((self.offsets[index] + local) / self.perimeter),
            x: xy.x,
            y: xy.y,
        }
    }

    /// The point at fraction `s` of the perimeter, counterclockwise from the
    /// anchor. `s` is wrapped modulo 1.
    pub fn boundary_point(&self, s: f64) -> BoundaryPoint {
        let s = wrap_unit(s);
        let arc = s * self.perimeter;
        let index = self.offsets.partition_point(|&o| o <= arc).saturating_sub(1);
        let local = (arc - self.offsets[index]).clamp(0.0, self.segments[index].length());
        let xy = self.segments[index].point_at(local);
        BoundaryPoint { s, x: xy.x, y: xy.y }
    }

    /// Inverse of [`Domain::boundary_point`].
    pub fn arc_parameter(&self, x: f64, y: f64) -> Result<f64, GeometryError> {
        let p = Vec2::new(x, y);
        let (index, local, distance) = self
            .segments
            .iter()
            .enumerate()
            .map(|(i, seg)| {
                let (local, d) = seg.project(p);
                (i, local, d)
            })
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .expect("domain has segments");
        if !(distance <= INPUT_TOL) {
            return Err(GeometryError::PointNotOnBoundary { x, y, distance });
        }
        Ok(wrap_unit((self.offsets[index] + local) / self.perimeter))
    }

    /// Snaps a Cartesian point onto the boundary.
    pub fn locate(&self, x: f64, y: f64) -> Result<BoundaryPoint, GeometryError> {
        let s = self.arc_parameter(x, y)?;
        Ok(self.boundary_point(s))
    }

    /// Travels from `p` along the line of slope `sign·ρ` to the other
    /// intersection with the boundary.
    pub fn cast_chord(
        &self,
        p: &BoundaryPoint,
        sign: ChordSign,
        params: &ChessParams,
    ) -> Result<BoundaryPoint, GeometryError> {
        let dir = params.direction(sign);
        for (edge, seg) in self.segments.iter().enumerate() {
            if let Segment::Line { start, end } = *seg {
                let e = end - start;
                if dir.perp(&e).abs() <= PARALLEL_TOL * e.norm() {
                    return Err(GeometryError::EdgeParallel { edge });
                }
            }
        }

        let origin = p.xy();
        let mut hits = Vec::with_capacity(4);
        let mut best: Option<(f64, usize, f64)> = None;
        for (index, seg) in self.segments.iter().enumerate() {
            hits.clear();
            seg.intersect_line(origin, dir, &mut hits);
            for &(t, local) in &hits {
                if best.is_none_or(|(bt, _, _)| t.abs() > bt.abs()) {
                    best = Some((t, index, local));
                }
            }
        }

        match best {
            Some((t, index, local)) if t.abs() >= CONSISTENCY_TOL => {
                let q = self.point_from_local(index, local);
                if self.corners.iter().any(|c| (q.xy() - c).norm() < CONSISTENCY_TOL) {
                    return Err(GeometryError::VertexHit { x: q.x, y: q.y });
                }
                Ok(q)
            }
            // The line only touches the boundary at `p`: a supporting line
            // through a corner.
            _ => Err(GeometryError::VertexHit { x: p.x, y: p.y }),
        }
    }
}

fn unit_square_vertices() -> Vec<Vec2> {
    vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ]
}
