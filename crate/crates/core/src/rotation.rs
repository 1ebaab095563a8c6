//! Rotation numbers: Birkhoff averages of the orbit lift, the closed form on
//! the unit square, λ sweeps, and plateau (mode locking) detection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::{nearby_rational, Convergent};
use crate::billiard::Trajectory;
use crate::geometry::{ChessParams, Domain, GeometryError};

/// Minimum iteration count accepted by [`estimate_rotation`].
pub const MIN_ITERATIONS: usize = 100;
pub const DEFAULT_SWEEP_ITERATIONS: usize = 10_000;
pub const DEFAULT_SINGLE_ITERATIONS: usize = 100_000;
/// Plateau flatness tolerance matched to the default sweep iteration count:
/// two estimates of the same locked value differ by less than `2/n`.
pub const DEFAULT_PLATEAU_TOL: f64 = 2.5e-4;
pub const DEFAULT_MIN_RUN: usize = 3;
pub const DEFAULT_Q_MAX: u64 = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RotationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("lambda = {0} is outside (0, 1)")]
    DegenerateLambda(f64),
    #[error("rotation number {0} is outside (0, 1)")]
    OutOfRange(f64),
    #[error("need at least {min} iterations, got {n}")]
    TooFewIterations { n: usize, min: usize },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("invalid plateau parameters: {0}")]
    InvalidPlateauParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Converged,
    VertexHitTruncated,
}

impl EstimateStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateStatus::Converged => "converged",
            EstimateStatus::VertexHitTruncated => "vertex_hit_truncated",
        }
    }
}

/// Finite-`n` rotation number with its a-priori error bound `2/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    pub r: f64,
    pub n: usize,
    pub error_bound: f64,
    pub status: EstimateStatus,
}

/// `(lift[n] − lift[0]) / n` along the orbit of `s0`. A vertex hit truncates
/// the orbit and the estimate uses the completed prefix.
pub fn estimate_rotation(
    domain: &Domain,
    lambda: f64,
    s0: f64,
    n: usize,
) -> Result<RotationEstimate, RotationError> {
    if n < MIN_ITERATIONS {
        return Err(RotationError::TooFewIterations { n, min: MIN_ITERATIONS });
    }
    let params = ChessParams::new(lambda)?;
    let start = domain.boundary_point(s0);
    let mut travelled = 0.0;
    let mut done = 0usize;
    let mut status = EstimateStatus::Converged;
    for item in Trajectory::new(domain, params, start).take(n) {
        match item {
            Ok((_, inc)) => {
                travelled += inc;
                done += 1;
            }
            Err(GeometryError::VertexHit { x, y }) => {
                if done == 0 {
                    return Err(GeometryError::VertexHit { x, y }.into());
                }
                status = EstimateStatus::VertexHitTruncated;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(RotationEstimate {
        r: travelled / done as f64,
        n: done,
        error_bound: 2.0 / done as f64,
        status,
    })
}

/// Closed-form rotation number on the square, `λ / (√(1−λ²) + λ)`.
pub fn r_square_exact(lambda: f64) -> Result<f64, RotationError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(RotationError::DegenerateLambda(lambda));
    }
    Ok(lambda / ((1.0 - lambda * lambda).sqrt() + lambda))
}

/// Inverse of [`r_square_exact`]: `λ = r / √(r² + (1−r)²)`.
pub fn lambda_for_rotation(r: f64) -> Result<f64, RotationError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(RotationError::OutOfRange(r));
    }
    Ok(r / (r * r + (1.0 - r) * (1.0 - r)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingReason {
    EdgeParallel,
    VertexHit,
}

impl MissingReason {
    pub fn as_str(self) -> &'static str {
        match self {
            MissingReason::EdgeParallel => "edge_parallel",
            MissingReason::VertexHit => "vertex_hit",
        }
    }
}

/// One sweep grid point: an estimate, or the reason none exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepSample {
    Estimated(RotationEstimate),
    Missing(MissingReason),
}

impl SweepSample {
    pub fn estimate(&self) -> Option<&RotationEstimate> {
        match self {
            SweepSample::Estimated(e) => Some(e),
            SweepSample::Missing(_) => None,
        }
    }

    pub fn r(&self) -> Option<f64> {
        self.estimate().map(|e| e.r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub lambdas: Vec<f64>,
    pub estimates: Vec<SweepSample>,
}

impl SweepResult {
    /// Builds a sweep from precomputed values, checking the grid invariants.
    pub fn from_parts(lambdas: Vec<f64>, estimates: Vec<SweepSample>) -> Result<Self, RotationError> {
        if lambdas.len() != estimates.len() {
            return Err(RotationError::InvalidSweep(format!(
                "{} lambdas but {} estimates",
                lambdas.len(),
                estimates.len()
            )));
        }
        if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(RotationError::InvalidSweep("lambdas must be strictly increasing".into()));
        }
        Ok(Self { lambdas, estimates })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `(λ, r)` pairs for grid points that have an estimate.
    pub fn present(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lambdas
            .iter()
            .zip(&self.estimates)
            .filter_map(|(&l, e)| e.r().map(|r| (l, r)))
    }
}

/// The open grid `λ_i = i/(grid_size+1)`, `i = 1..=grid_size`.
pub fn sweep_grid(grid_size: usize) -> Vec<f64> {
    let m = (grid_size + 1) as f64;
    (1..=grid_size).map(|i| i as f64 / m).collect()
}

/// Rotation estimates over the open λ grid, evaluated in parallel and
/// assembled in λ order.
pub fn sweep(
    domain: &Domain,
    grid_size: usize,
    n_per_point: usize,
    s0: f64,
) -> Result<SweepResult, RotationError> {
    if grid_size < 2 {
        return Err(RotationError::InvalidSweep(format!(
            "grid_size must be at least 2, got {grid_size}"
        )));
    }
    if n_per_point < MIN_ITERATIONS {
        return Err(RotationError::TooFewIterations { n: n_per_point, min: MIN_ITERATIONS });
    }
    let lambdas = sweep_grid(grid_size);
    let estimates = lambdas
        .par_iter()
        .map(|&lambda| match estimate_rotation(domain, lambda, s0, n_per_point) {
            Ok(e) => SweepSample::Estimated(e),
            Err(RotationError::Geometry(GeometryError::EdgeParallel { .. })) => {
                SweepSample::Missing(MissingReason::EdgeParallel)
            }
            Err(_) => SweepSample::Missing(MissingReason::VertexHit),
        })
        .collect();
    Ok(SweepResult { lambdas, estimates })
}

/// A maximal flat run of the staircase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub locked_r: f64,
    pub locked_rational: Option<Convergent>,
    /// Index of the first grid point of the run.
    pub start: usize,
    /// Number of grid points in the run.
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauDetection {
    pub plateaus: Vec<Plateau>,
    /// Fraction of grid points lying on a plateau.
    pub fraction: f64,
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Greedy maximal runs of at least `min_run` consecutive grid points whose
/// values all lie within `tol` of the run median. Missing points break runs.
pub fn detect_plateaus(
    sweep: &SweepResult,
    tol: f64,
    min_run: usize,
    q_max: u64,
) -> Result<PlateauDetection, RotationError> {
    if !(tol > 0.0) {
        return Err(RotationError::InvalidPlateauParams(format!("tol must be positive, got {tol}")));
    }
    if min_run < 3 {
        return Err(RotationError::InvalidPlateauParams(format!(
            "min_run must be at least 3, got {min_run}"
        )));
    }
    let values: Vec<Option<f64>> = sweep.estimates.iter().map(SweepSample::r).collect();
    let total = values.len();
    let mut plateaus = Vec::new();
    let mut covered = 0usize;
    let mut i = 0;
    while i < total {
        let Some(first) = values[i] else {
            i += 1;
            continue;
        };
        let mut sorted = vec![first];
        let mut end = i + 1;
        while end < total {
            let Some(v) = values[end] else { break };
            let pos = sorted.partition_point(|&x| x < v);
            sorted.insert(pos, v);
            let med = median_of_sorted(&sorted);
            let lo = sorted[0];
            let hi = sorted[sorted.len() - 1];
            if (med - lo) > tol || (hi - med) > tol {
                sorted.remove(pos);
                break;
            }
            end += 1;
        }
        let len = end - i;
        if len >= min_run {
            let locked_r = median_of_sorted(&sorted);
            plateaus.push(Plateau {
                lambda_lo: sweep.lambdas[i],
                lambda_hi: sweep.lambdas[end - 1],
                locked_r,
                locked_rational: nearby_rational(locked_r, tol, q_max),
                start: i,
                len,
            });
            covered += len;
            i = end;
        } else {
            i += 1;
        }
    }
    let fraction = if total == 0 { 0.0 } else { covered as f64 / total as f64 };
    Ok(PlateauDetection { plateaus, fraction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn synthetic(values: &[f64]) -> SweepResult {
        let lambdas = sweep_grid(values.len());
        let estimates = values
            .iter()
            .map(|&r| {
                SweepSample::Estimated(RotationEstimate {
                    r,
                    n: 10_000,
                    error_bound: 2e-4,
                    status: EstimateStatus::Converged,
                })
            })
            .collect();
        SweepResult::from_parts(lambdas, estimates).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert!((r_square_exact(FRAC_1_SQRT_2).unwrap() - 0.5).abs() < 1e-15);
        assert!((r_square_exact(0.6).unwrap() - 3.0 / 7.0).abs() < 1e-15);
        assert!(r_square_exact(1e-12).unwrap() < 1e-11);
        for bad in [0.0, 1.0, -1.0, f64::NAN] {
            assert!(r_square_exact(bad).is_err());
        }
    }

    #[test]
    fn inverse_examples() {
        assert!((lambda_for_rotation(0.5).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((lambda_for_rotation(3.0 / 7.0).unwrap() - 0.6).abs() < 1e-15);
        assert!(lambda_for_rotation(1e-9).unwrap() < 1e-8);
        assert!(matches!(lambda_for_rotation(1.0), Err(RotationError::OutOfRange(_))));
    }

    #[test]
    fn too_few_iterations() {
        let sq = Domain::unit_square();
        assert!(matches!(
            estimate_rotation(&sq, 0.6, 0.1, 99),
            Err(RotationError::TooFewIterations { .. })
        ));
    }

    #[test]
    fn diagonal_rotation_is_one_half() {
        let sq = Domain::unit_square();
        let e = estimate_rotation(&sq, FRAC_1_SQRT_2, 0.95, 1000).unwrap();
        assert!((e.r - 0.5).abs() < 1e-12);
        assert_eq!(e.error_bound, 2.0 / 1000.0);
        assert_eq!(e.status, EstimateStatus::Converged);
    }

    #[test]
    fn vertex_hit_truncates() {
        // slope 4/3 from the origin: (0,0) → (1, 2/3) → (0, 2/3) → corner (1, 0)
        let sq = Domain::unit_square();
        let e = estimate_rotation(&sq, 0.6, 0.0, 100).unwrap();
        assert_eq!(e.status, EstimateStatus::VertexHitTruncated);
        assert_eq!(e.n, 2);
        assert_eq!(e.error_bound, 1.0);
        // no completed mapping at all
        assert!(estimate_rotation(&sq, FRAC_1_SQRT_2, 0.0, 100).is_err());
    }

    #[test]
    fn small_sweep_is_increasing() {
        let sq = Domain::unit_square();
        let s = sweep(&sq, 2, 100, 0.5).unwrap();
        assert_eq!(s.len(), 2);
        let r: Vec<f64> = s.present().map(|(_, r)| r).collect();
        assert!(r[0] < r[1]);
        assert!(matches!(sweep(&sq, 1, 100, 0.5), Err(RotationError::InvalidSweep(_))));
    }

    #[test]
    fn constant_sweep_is_one_plateau() {
        let s = synthetic(&[0.5; 50]);
        let d = detect_plateaus(&s, 1e-4, 3, 10).unwrap();
        assert_eq!(d.plateaus.len(), 1);
        assert_eq!(d.fraction, 1.0);
        assert_eq!(d.plateaus[0].locked_rational, Some(Convergent { p: 1, q: 2 }));
        assert_eq!(d.plateaus[0].len, 50);
    }

    #[test]
    fn plateau_runs_are_maximal() {
        let mut v: Vec<f64> = (0..30).map(|i| i as f64 * 0.01).collect();
        for x in v.iter_mut().skip(10).take(5) {
            *x = 0.25;
        }
        let d = detect_plateaus(&synthetic(&v), 1e-6, 3, 10).unwrap();
        assert_eq!(d.plateaus.len(), 1);
        let p = &d.plateaus[0];
        assert_eq!((p.start, p.len), (10, 5));
        assert_eq!(p.locked_rational, Some(Convergent { p: 1, q: 4 }));
        assert!((d.fraction - 5.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn missing_points_break_runs() {
        let mut s = synthetic(&[0.5; 7]);
        s.estimates[3] = SweepSample::Missing(MissingReason::EdgeParallel);
        let d = detect_plateaus(&s, 1e-4, 3, 10).unwrap();
        assert_eq!(d.plateaus.len(), 2);
        assert!((d.fraction - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn plateau_params_validated() {
        let s = synthetic(&[0.5; 5]);
        assert!(detect_plateaus(&s, 0.0, 3, 10).is_err());
        assert!(detect_plateaus(&s, 1e-4, 2, 10).is_err());
    }
}
