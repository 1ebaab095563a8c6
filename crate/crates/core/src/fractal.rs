//! Box-counting dimension of the non-plateau part of a rotation-number sweep.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Domain, DomainSpec};
use crate::rotation::{detect_plateaus, sweep, Plateau, RotationError, SweepResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FractalError {
    #[error("sweep contains no usable points")]
    EmptySweep,
    #[error("invalid epsilon list: {0}")]
    InvalidEpsilons(String),
    #[error("least-squares system is rank deficient ({points} points, degree {degree})")]
    RankDeficient { points: usize, degree: usize },
    #[error("invalid tilt angles: {0}")]
    InvalidAngles(String),
    #[error(transparent)]
    Rotation(#[from] RotationError),
}

/// Number of tiles `[jε, (j+1)ε)` holding at least one point.
pub fn box_count(points: &[f64], epsilon: f64) -> usize {
    let mut tiles: Vec<i64> = points.iter().map(|&x| (x / epsilon).floor() as i64).collect();
    tiles.sort_unstable();
    tiles.dedup();
    tiles.len()
}

/// `0.5·2⁻ᵏ` for `k = 0..8`.
pub fn default_epsilons() -> Vec<f64> {
    (0..8).map(|k| 0.5 * 0.5f64.powi(k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRecord {
    pub eps: f64,
    /// Tiles hit by points between plateaus.
    pub q: usize,
    /// `(1 − S)/q`.
    #[serde(rename = "N")]
    pub n: Option<f64>,
    /// `ln N / ln(1/q)`; undefined for `q ≤ 1`.
    #[serde(rename = "D")]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseAnalysis {
    #[serde(rename = "S")]
    pub s: f64,
    pub per_epsilon: Vec<EpsilonRecord>,
    /// Slope of `ln((1 − S(ε))/ε)` against `ln(1/ε)`, where `S(ε)` counts
    /// only plateaus at least `ε` long.
    #[serde(rename = "D_summary")]
    pub d_summary: f64,
    /// Slope of `ln q(ε)` against `ln(1/ε)`.
    #[serde(rename = "D_minkowski")]
    pub d_minkowski: f64,
    /// Every usable point lies on a plateau; dimensions are set to 0.
    #[serde(default)]
    pub all_plateau: bool,
}

pub fn validate_epsilons(eps: &[f64]) -> Result<(), FractalError> {
    if eps.len() < 2 {
        return Err(FractalError::InvalidEpsilons(format!("need at least 2 values, got {}", eps.len())));
    }
    if let Some(bad) = eps.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(FractalError::InvalidEpsilons(format!("{bad} is not a positive tile size")));
    }
    let lo = eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(FractalError::InvalidEpsilons(format!(
            "range [{lo}, {hi}] spans less than a decade"
        )));
    }
    Ok(())
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    polyfit(xs, ys, 1).ok().map(|c| c[1])
}

/// Dimension estimates for a sweep and its detected plateaus.
///
/// "Between plateaus" means the present grid points that lie in no plateau;
/// missing points are ignored entirely.
pub fn staircase_dimension(
    sweep: &SweepResult,
    plateaus: &[Plateau],
    epsilons: &[f64],
) -> Result<StaircaseAnalysis, FractalError> {
    validate_epsilons(epsilons)?;
    let present: Vec<bool> = sweep.estimates.iter().map(|e| e.r().is_some()).collect();
    let total = present.iter().filter(|&&p| p).count();
    if total == 0 {
        return Err(FractalError::EmptySweep);
    }
    let mut on_plateau = vec![false; sweep.len()];
    for p in plateaus {
        for flag in on_plateau.iter_mut().skip(p.start).take(p.len) {
            *flag = true;
        }
    }
    let between: Vec<f64> = sweep
        .lambdas
        .iter()
        .zip(present.iter().zip(&on_plateau))
        .filter(|(_, (&pres, &flat))| pres && !flat)
        .map(|(&l, _)| l)
        .collect();
    let plateau_points = |p: &Plateau| {
        (p.start..p.start + p.len).filter(|&i| i < present.len() && present[i]).count()
    };
    let covered: usize = plateaus.iter().map(plateau_points).sum();
    let s = covered as f64 / total as f64;

    if between.is_empty() {
        return Ok(StaircaseAnalysis {
            s,
            per_epsilon: epsilons
                .iter()
                .map(|&eps| EpsilonRecord { eps, q: 0, n: None, d: None })
                .collect(),
            d_summary: 0.0,
            d_minkowski: 0.0,
            all_plateau: true,
        });
    }

    let per_epsilon: Vec<EpsilonRecord> = epsilons
        .iter()
        .map(|&eps| {
            let q = box_count(&between, eps);
            let n = (q >= 1).then(|| (1.0 - s) / q as f64);
            let d = match n {
                Some(n) if q > 1 => Some(n.ln() / (1.0 / q as f64).ln()),
                _ => None,
            };
            EpsilonRecord { eps, q, n, d }
        })
        .collect();

    let (mut cx, mut cy) = (Vec::new(), Vec::new());
    for &eps in epsilons {
        let resolved: usize = plateaus
            .iter()
            .filter(|p| p.len as f64 / sweep.len() as f64 >= eps * (1.0 - 1e-9))
            .map(plateau_points)
            .sum();
        let uncovered = 1.0 - resolved as f64 / total as f64;
        if uncovered > 0.0 {
            cx.push((1.0 / eps).ln());
            cy.push((uncovered / eps).ln());
        }
    }
    let (mut mx, mut my) = (Vec::new(), Vec::new());
    for r in &per_epsilon {
        if r.q >= 1 {
            mx.push((1.0 / r.eps).ln());
            my.push((r.q as f64).ln());
        }
    }
    Ok(StaircaseAnalysis {
        s,
        per_epsilon,
        d_summary: slope(&cx, &cy).unwrap_or(0.0),
        d_minkowski: slope(&mx, &my).unwrap_or(0.0),
        all_plateau: false,
    })
}

/// Least-squares polynomial coefficients, constant term first.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>, FractalError> {
    let m = xs.len().min(ys.len());
    let cols = degree + 1;
    let rank_err = FractalError::RankDeficient { points: m, degree };
    if m < cols {
        return Err(rank_err);
    }
    // centre and scale x so the normal equations stay well conditioned
    let mean = xs[..m].iter().sum::<f64>() / m as f64;
    let spread = xs[..m].iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    let scale = if spread > 0.0 { spread } else { 1.0 };
    let a = DMatrix::from_fn(m, cols, |i, j| ((xs[i] - mean) / scale).powi(j as i32));
    let b = DVector::from_column_slice(&ys[..m]);
    let ata = a.transpose() * &a;
    let chol = nalgebra::Cholesky::new(ata.clone()).ok_or(rank_err.clone())?;
    let diag_min = chol.l().diagonal().iter().cloned().fold(f64::INFINITY, f64::min);
    let diag_max = chol.l().diagonal().iter().cloned().fold(0.0, f64::max);
    if !(diag_min > 1e-7 * diag_max) {
        return Err(rank_err);
    }
    let t = chol.solve(&(a.transpose() * b));
    // expand Σ tⱼ ((x − mean)/scale)ʲ into powers of x
    let mut coeffs = vec![0.0; cols];
    for (j, &tj) in t.iter().enumerate() {
        let c = tj / scale.powi(j as i32);
        let mut binom = 1.0;
        for (i, out) in coeffs.iter_mut().enumerate().take(j + 1) {
            *out += c * binom * (-mean).powi((j - i) as i32);
            binom = binom * (j - i) as f64 / (i + 1) as f64;
        }
    }
    Ok(coeffs)
}

pub fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltConfig {
    pub grid_size: usize,
    pub n_per_point: usize,
    pub s0: f64,
    pub plateau_tol: f64,
    pub min_run: usize,
    pub q_max: u64,
    pub epsilons: Vec<f64>,
}

impl Default for TiltConfig {
    fn default() -> Self {
        use crate::rotation::{DEFAULT_MIN_RUN, DEFAULT_PLATEAU_TOL, DEFAULT_Q_MAX, DEFAULT_SWEEP_ITERATIONS};
        Self {
            grid_size: 999,
            n_per_point: DEFAULT_SWEEP_ITERATIONS,
            s0: 0.1,
            plateau_tol: DEFAULT_PLATEAU_TOL,
            min_run: DEFAULT_MIN_RUN,
            q_max: DEFAULT_Q_MAX,
            epsilons: default_epsilons(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltPoint {
    pub angle: f64,
    pub analysis: Option<StaircaseAnalysis>,
    /// Error text when the sweep for this angle failed.
    pub error: Option<String>,
}

impl TiltPoint {
    pub fn dimension(&self) -> Option<f64> {
        self.analysis.as_ref().map(|a| a.d_summary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltStudy {
    pub points: Vec<TiltPoint>,
    /// Quadratic `c₀ + c₁θ + c₂θ²` through the available `D(θ)`.
    pub fit: Option<Vec<f64>>,
}

impl TiltStudy {
    /// `D(θ) − fit(θ)` per point.
    pub fn residual(&self, i: usize) -> Option<f64> {
        let fit = self.fit.as_ref()?;
        let p = &self.points[i];
        p.dimension().map(|d| d - polyval(fit, p.angle))
    }
}

fn dimension_at(angle: f64, config: &TiltConfig) -> Result<StaircaseAnalysis, FractalError> {
    let domain = Domain::from_spec(&DomainSpec::TiltedSquare { angle })
        .map_err(|e| FractalError::Rotation(RotationError::Geometry(e)))?;
    let sw = sweep(&domain, config.grid_size, config.n_per_point, config.s0)?;
    let det = detect_plateaus(&sw, config.plateau_tol, config.min_run, config.q_max)?;
    staircase_dimension(&sw, &det.plateaus, &config.epsilons)
}

/// Per-angle staircase dimensions, in input order. Failures are recorded on
/// the point rather than aborting the study.
pub fn tilt_dimensions(angles: &[f64], config: &TiltConfig) -> Result<Vec<TiltPoint>, FractalError> {
    if angles.is_empty() {
        return Err(FractalError::InvalidAngles("no angles given".into()));
    }
    validate_epsilons(&config.epsilons)?;
    Ok(angles
        .par_iter()
        .map(|&angle| match dimension_at(angle, config) {
            Ok(a) => TiltPoint { angle, analysis: Some(a), error: None },
            Err(e) => TiltPoint { angle, analysis: None, error: Some(e.to_string()) },
        })
        .collect())
}

/// Tilt study with a quadratic fit; needs at least three angles, one of
/// them zero.
pub fn dimension_vs_tilt(angles: &[f64], config: &TiltConfig) -> Result<TiltStudy, FractalError> {
    if angles.len() < 3 || !angles.contains(&0.0) {
        return Err(FractalError::InvalidAngles(format!(
            "need at least 3 angles including 0, got {angles:?}"
        )));
    }
    let points = tilt_dimensions(angles, config)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        points.iter().filter_map(|p| p.dimension().map(|d| (p.angle, d))).unzip();
    let fit = polyfit(&xs, &ys, 2).ok();
    Ok(TiltStudy { points, fit })
}
