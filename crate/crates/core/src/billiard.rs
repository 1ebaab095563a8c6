//! The chess billiard map `b(·, λ)`: a `+ρ` chord followed by a `−ρ` chord.
//!
//! `b` is an orientation preserving circle homeomorphism of the boundary
//! without fixed points (a point cannot lie on two distinct lines through
//! itself and end up back where it started), so the counterclockwise
//! displacement `(s' − s) mod 1` of one mapping is a consistent lift
//! increment in `(0, 1)`.

use thiserror::Error;

use crate::geometry::{BoundaryPoint, ChessParams, ChordSign, Domain, GeometryError};

/// Orbits longer than this are not stored point by point; use
/// [`Trajectory`] to stream them.
pub const MAX_STORED_ORBIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BilliardError {
    #[error("orbit needs at least one iteration")]
    ZeroIterations,
    #[error("orbit of {0} steps exceeds the stored-orbit limit; stream it instead")]
    TooLong(usize),
    #[error("step {index} failed: {source}")]
    Step {
        index: usize,
        partial: Box<Orbit>,
        #[source]
        source: GeometryError,
    },
}

impl BilliardError {
    pub fn geometry(&self) -> Option<&GeometryError> {
        match self {
            BilliardError::Step { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Sequence `bᵏ(p₀)` together with its monotone lift.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Orbit {
    pub points: Vec<BoundaryPoint>,
    pub lift: Vec<f64>,
}

impl Orbit {
    pub fn steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }
}

pub fn half_step(
    domain: &Domain,
    params: &ChessParams,
    p: &BoundaryPoint,
    sign: ChordSign,
) -> Result<BoundaryPoint, GeometryError> {
    domain.cast_chord(p, sign, params)
}

pub fn step(
    domain: &Domain,
    params: &ChessParams,
    p: &BoundaryPoint,
) -> Result<BoundaryPoint, GeometryError> {
    let mid = half_step(domain, params, p, ChordSign::Positive)?;
    half_step(domain, params, &mid, ChordSign::Negative)
}

/// Counterclockwise boundary fraction from `from` to `to`.
pub fn lift_increment(from: &BoundaryPoint, to: &BoundaryPoint) -> f64 {
    (to.s - from.s).rem_euclid(1.0)
}

/// Streams `(bᵏ(p₀), lift increment)` pairs. Stops after the first error.
pub struct Trajectory<'a> {
    domain: &'a Domain,
    params: ChessParams,
    current: BoundaryPoint,
    failed: bool,
}

impl<'a> Trajectory<'a> {
    pub fn new(domain: &'a Domain, params: ChessParams, start: BoundaryPoint) -> Self {
        Self { domain, params, current: start, failed: false }
    }
}

impl Iterator for Trajectory<'_> {
    type Item = Result<(BoundaryPoint, f64), GeometryError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match step(self.domain, &self.params, &self.current) {
            Ok(next) => {
                let inc = lift_increment(&self.current, &next);
                self.current = next;
                Some(Ok((next, inc)))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// `n` mappings from `p0`, keeping every point. On failure the orbit up to
/// the failing step is returned inside the error.
pub fn orbit(
    domain: &Domain,
    params: &ChessParams,
    p0: BoundaryPoint,
    n: usize,
) -> Result<Orbit, BilliardError> {
    if n == 0 {
        return Err(BilliardError::ZeroIterations);
    }
    if n > MAX_STORED_ORBIT {
        return Err(BilliardError::TooLong(n));
    }
    let mut out = Orbit {
        points: Vec::with_capacity(n + 1),
        lift: Vec::with_capacity(n + 1),
    };
    out.points.push(p0);
    out.lift.push(p0.s);
    for (index, item) in Trajectory::new(domain, *params, p0).take(n).enumerate() {
        match item {
            Ok((p, inc)) => {
                let last = *out.lift.last().expect("lift starts non-empty");
                out.points.push(p);
                out.lift.push(last + inc);
            }
            Err(source) => {
                return Err(BilliardError::Step { index, partial: Box::new(out), source });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn assert_xy(p: &BoundaryPoint, x: f64, y: f64) {
        assert!((p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12, "{p:?} vs ({x}, {y})");
    }

    #[test]
    fn half_step_examples() {
        let sq = Domain::unit_square();
        let diag = ChessParams::new(FRAC_1_SQRT_2).unwrap();
        let p = sq.locate(0.0, 0.25).unwrap();
        assert_xy(&half_step(&sq, &diag, &p, ChordSign::Positive).unwrap(), 0.75, 1.0);
        let p = sq.locate(0.75, 1.0).unwrap();
        assert_xy(&half_step(&sq, &diag, &p, ChordSign::Negative).unwrap(), 1.0, 0.75);
        let p = sq.locate(0.0, 0.0).unwrap();
        let steep = ChessParams::new(0.6).unwrap();
        assert_xy(&half_step(&sq, &steep, &p, ChordSign::Positive).unwrap(), 0.75, 1.0);
    }

    #[test]
    fn step_examples() {
        let sq = Domain::unit_square();
        let diag = ChessParams::new(FRAC_1_SQRT_2).unwrap();
        let a = sq.locate(0.0, 0.25).unwrap();
        let b = step(&sq, &diag, &a).unwrap();
        assert_xy(&b, 1.0, 0.75);
        assert_xy(&step(&sq, &diag, &b).unwrap(), 0.0, 0.25);

        let steep = ChessParams::new(0.6).unwrap();
        let c = step(&sq, &steep, &sq.locate(0.0, 0.0).unwrap()).unwrap();
        assert_xy(&c, 1.0, 2.0 / 3.0);
    }

    #[test]
    fn period_two_orbit_lift() {
        let sq = Domain::unit_square();
        let diag = ChessParams::new(FRAC_1_SQRT_2).unwrap();
        let o = orbit(&sq, &diag, sq.locate(0.0, 0.25).unwrap(), 2).unwrap();
        assert_eq!(o.points.len(), 3);
        assert!((o.lift[2] - o.lift[0] - 1.0).abs() < 1e-12);
        assert!((o.lift[1] - o.lift[0] - 0.5).abs() < 1e-12);
        assert!(o.points[2].distance(&o.points[0]) < 1e-12);
    }

    #[test]
    fn zero_iterations_rejected() {
        let sq = Domain::unit_square();
        let p = ChessParams::new(0.6).unwrap();
        assert_eq!(
            orbit(&sq, &p, sq.boundary_point(0.1), 0),
            Err(BilliardError::ZeroIterations)
        );
    }

    #[test]
    fn failing_step_keeps_prefix() {
        let sq = Domain::unit_square();
        let diag = ChessParams::new(FRAC_1_SQRT_2).unwrap();
        // the diagonal from the origin corner ends in the opposite corner
        let start = sq.boundary_point(0.0);
        let err = orbit(&sq, &diag, start, 5).unwrap_err();
        match err {
            BilliardError::Step { index, partial, source } => {
                assert_eq!(index, 0);
                assert_eq!(partial.points.len(), 1);
                assert!(matches!(source, GeometryError::VertexHit { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rounded_square_orbit_is_monotone() {
        let d = Domain::from_spec(&DomainSpec::RoundedSquare { corner_radius: 0.1 }).unwrap();
        let p = ChessParams::new(0.63).unwrap();
        let o = orbit(&d, &p, d.boundary_point(0.3), 500).unwrap();
        for w in o.lift.windows(2) {
            let inc = w[1] - w[0];
            assert!(inc > 0.0 && inc < 1.0);
        }
        for (pt, l) in o.points.iter().zip(&o.lift) {
            let m = l.rem_euclid(1.0);
            let gap = (m - pt.s).abs();
            assert!(gap.min(1.0 - gap) < 1e-9);
        }
    }
}
