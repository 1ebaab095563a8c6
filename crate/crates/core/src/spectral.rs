//! Fourier analysis on the unit square and the closed-form mode-by-mode
//! solution of the forced Poincaré problem
//! `(∂ₜ²Δ + ∂²ₓ₂) u = f(x) cos(λt)`.
//!
//! In the periodic basis `e^{2πi(k₁x₁ + k₂x₂)}` each mode obeys
//! `−4π² ((k₁²+k₂²) ∂ₜ² + k₂²) û = f̂ cos(λt)`, whose forced response has
//! the small denominator `D(k, λ) = −k₂² + (k₁²+k₂²) λ²`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_RESONANCE_TOL: f64 = 1e-10;
/// Largest `|f̂(0,0)|` accepted as mean-zero forcing.
pub const MEAN_TOL: f64 = 1e-10;
/// `|D| ≤ EXACT_RESONANCE_TOL·(k₁²+k₂²)` counts as an exact resonance.
pub const EXACT_RESONANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantMode {
    pub k1: i64,
    pub k2: i64,
    pub denominator: f64,
    /// `k₂²/(k₁²+k₂²)`, the rational that `λ²` nearly equals.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("grid of size {n} cannot resolve truncation K = {k} (need n >= {need})")]
    GridTooCoarse { n: usize, k: usize, need: usize },
    #[error("sample grid must be square, got {rows}x{cols}")]
    NonSquareGrid { rows: usize, cols: usize },
    #[error("{} resonant mode(s), first ({}, {})", modes.len(), modes[0].k1, modes[0].k2)]
    Resonance { modes: Vec<ResonantMode> },
    #[error("mode ({k1}, {k2}) is exactly resonant at lambda = {lambda}")]
    ExactResonance { k1: i64, k2: i64, lambda: f64 },
    #[error("forcing has nonzero mean coefficient {0:e}")]
    NonZeroMean(f64),
    #[error("invalid time grid: {0}")]
    InvalidTimes(String),
    #[error("invalid solver parameter: {0}")]
    InvalidParameter(String),
}

/// Truncated coefficient table `(k₁, k₂) ↦ ĉ` for `|k₁|, |k₂| ≤ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    k: usize,
    coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn zeros(k: usize) -> Self {
        let side = 2 * k + 1;
        Self { k, coeffs: vec![Complex64::new(0.0, 0.0); side * side] }
    }

    /// Field with a coefficient computed for every retained mode.
    pub fn from_fn(k: usize, mut f: impl FnMut(i64, i64) -> Complex64) -> Self {
        let mut out = Self::zeros(k);
        let kk = k as i64;
        for k1 in -kk..=kk {
            for k2 in -kk..=kk {
                out.set(k1, k2, f(k1, k2));
            }
        }
        out
    }

    pub fn truncation(&self) -> usize {
        self.k
    }

    fn index(&self, k1: i64, k2: i64) -> Option<usize> {
        let kk = self.k as i64;
        if k1.abs() > kk || k2.abs() > kk {
            return None;
        }
        let side = 2 * kk + 1;
        Some(((k1 + kk) * side + (k2 + kk)) as usize)
    }

    pub fn contains(&self, k1: i64, k2: i64) -> bool {
        self.index(k1, k2).is_some()
    }

    /// Coefficient of mode `(k₁, k₂)`; zero outside the truncation.
    pub fn get(&self, k1: i64, k2: i64) -> Complex64 {
        self.index(k1, k2).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// # Panics
    /// If the mode lies outside the truncation.
    pub fn set(&mut self, k1: i64, k2: i64, value: Complex64) {
        let i = self
            .index(k1, k2)
            .unwrap_or_else(|| panic!("mode ({k1}, {k2}) outside truncation {}", self.k));
        self.coeffs[i] = value;
    }

    /// Iterates `(k₁, k₂, ĉ)` in lexicographic mode order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let kk = self.k as i64;
        let side = 2 * kk + 1;
        self.coeffs.iter().enumerate().map(move |(i, &c)| {
            let i = i as i64;
            (i / side - kk, i % side - kk, c)
        })
    }

    /// Copy restricted (or zero-extended) to truncation `k`.
    pub fn truncated(&self, k: usize) -> Self {
        Self::from_fn(k, |k1, k2| self.get(k1, k2))
    }

    pub fn max_abs_diff(&self, other: &FourierField) -> f64 {
        let k = self.k.max(other.k);
        let kk = k as i64;
        let mut worst: f64 = 0.0;
        for k1 in -kk..=kk {
            for k2 in -kk..=kk {
                worst = worst.max((self.get(k1, k2) - other.get(k1, k2)).norm());
            }
        }
        worst
    }

    /// `ĉ(−k) = conj(ĉ(k))` for every retained mode, i.e. the field is real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.iter()
            .all(|(k1, k2, c)| (self.get(-k1, -k2) - c.conj()).norm() <= tol)
    }

    /// Value of the trigonometric series at a point.
    pub fn evaluate(&self, x1: f64, x2: f64) -> Complex64 {
        self.iter()
            .filter(|(_, _, c)| c.norm_sqr() > 0.0)
            .map(|(k1, k2, c)| c * Complex64::from_polar(1.0, 2.0 * PI * (k1 as f64 * x1 + k2 as f64 * x2)))
            .sum()
    }
}

fn fft_2d(grid: &mut Array2<Complex64>, inverse: bool) {
    let n = grid.nrows();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..2 {
        for mut lane in grid.lanes_mut(ndarray::Axis(axis)) {
            for (b, v) in buf.iter_mut().zip(lane.iter()) {
                *b = *v;
            }
            fft.process(&mut buf);
            for (v, b) in lane.iter_mut().zip(&buf) {
                *v = *b;
            }
        }
    }
}

fn bin(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Discrete approximation of `f̂(k) = ∫∫ f e^{−2πi k·x} dx` from samples
/// `samples[[i₁, i₂]] = f(i₁/N, i₂/N)`.
pub fn analyze(samples: &Array2<f64>, k: usize) -> Result<FourierField, SpectralError> {
    let (rows, cols) = samples.dim();
    if rows != cols {
        return Err(SpectralError::NonSquareGrid { rows, cols });
    }
    let n = rows;
    if n < 2 * k + 2 {
        return Err(SpectralError::GridTooCoarse { n, k, need: 2 * k + 2 });
    }
    let mut grid = samples.mapv(|v| Complex64::new(v, 0.0));
    fft_2d(&mut grid, false);
    let scale = 1.0 / (n * n) as f64;
    Ok(FourierField::from_fn(k, |k1, k2| grid[[bin(k1, n), bin(k2, n)]] * scale))
}

/// Samples the real part of the series on the `N×N` grid `(i₁/N, i₂/N)`.
/// Modes beyond the Nyquist range fold onto their aliases.
pub fn synthesize(field: &FourierField, n: usize) -> Array2<f64> {
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    let mut grid = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
    for (k1, k2, c) in field.iter() {
        grid[[bin(k1, n), bin(k2, n)]] += c;
    }
    fft_2d(&mut grid, true);
    grid.mapv(|c| c.re)
}

/// Spectral derivative along `axis` (1 or 2): multiplies by `2πi k_axis`.
pub fn derivative_field(field: &FourierField, axis: u8) -> Result<FourierField, SpectralError> {
    if axis != 1 && axis != 2 {
        return Err(SpectralError::InvalidParameter(format!("axis must be 1 or 2, got {axis}")));
    }
    Ok(FourierField::from_fn(field.truncation(), |k1, k2| {
        let k = if axis == 1 { k1 } else { k2 };
        field.get(k1, k2) * Complex64::new(0.0, 2.0 * PI * k as f64)
    }))
}

/// Sine coefficients `b(k₁,k₂)`, `k ≥ 1`, of samples taken at the cell
/// midpoints `((i₁+½)/N, (i₂+½)/N)`, so that
/// `f = Σ b sin(πk₁x₁) sin(πk₂x₂)`.
pub fn analyze_sine(samples: &Array2<f64>, k: usize) -> Result<FourierField, SpectralError> {
    let (rows, cols) = samples.dim();
    if rows != cols {
        return Err(SpectralError::NonSquareGrid { rows, cols });
    }
    let n = rows;
    if n < k + 1 {
        return Err(SpectralError::GridTooCoarse { n, k, need: k + 1 });
    }
    let table = sine_table(n, k);
    // contract over x₂ first, then x₁
    let mut partial = Array2::<f64>::zeros((n, k + 1));
    for i1 in 0..n {
        for k2 in 1..=k {
            partial[[i1, k2]] = (0..n).map(|i2| samples[[i1, i2]] * table[[k2, i2]]).sum();
        }
    }
    let scale = 4.0 / (n * n) as f64;
    Ok(FourierField::from_fn(k, |k1, k2| {
        if k1 < 1 || k2 < 1 {
            return Complex64::new(0.0, 0.0);
        }
        let v: f64 = (0..n).map(|i1| partial[[i1, k2 as usize]] * table[[k1 as usize, i1]]).sum();
        Complex64::new(v * scale, 0.0)
    }))
}

/// Evaluates a sine series (real parts of the `k ≥ 1` coefficients) at the
/// cell midpoints of an `N×N` grid.
pub fn synthesize_sine(field: &FourierField, n: usize) -> Array2<f64> {
    let k = field.truncation();
    let table = sine_table(n, k);
    let mut out = Array2::<f64>::zeros((n, n));
    for (k1, k2, c) in field.iter() {
        if k1 < 1 || k2 < 1 || c.re == 0.0 {
            continue;
        }
        let (k1, k2) = (k1 as usize, k2 as usize);
        for i1 in 0..n {
            let a = c.re * table[[k1, i1]];
            for i2 in 0..n {
                out[[i1, i2]] += a * table[[k2, i2]];
            }
        }
    }
    out
}

fn sine_table(n: usize, k: usize) -> Array2<f64> {
    Array2::from_shape_fn((k + 1, n), |(m, i)| (PI * m as f64 * (i as f64 + 0.5) / n as f64).sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// The forced response `f̂ cos(λt) / (4π² D)` alone.
    Forced,
    /// Forced response minus the homogeneous mode `cos(ω_k t)`, so that
    /// `û(0) = ∂ₜû(0) = 0`.
    IcCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `e^{2πi k·x}` on the periodic unit square.
    Periodic,
    /// `sin(πk₁x₁) sin(πk₂x₂)`, vanishing on the boundary.
    Sine,
}

impl Basis {
    /// Magnitude of the Laplacian symbol per unit `|k|²`.
    fn operator_scale(self) -> f64 {
        match self {
            Basis::Periodic => 4.0 * PI * PI,
            Basis::Sine => PI * PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub mode: SolverMode,
    pub basis: Basis,
    pub resonance_tol: f64,
}

impl SolverConfig {
    pub fn new(lambda: f64, mode: SolverMode) -> Result<Self, SpectralError> {
        let cfg = Self { lambda, mode, basis: Basis::Periodic, resonance_tol: DEFAULT_RESONANCE_TOL };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }

    pub fn with_resonance_tol(mut self, tol: f64) -> Self {
        self.resonance_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(SpectralError::InvalidParameter(format!(
                "lambda = {} is outside (0, 1)",
                self.lambda
            )));
        }
        if !(self.resonance_tol > 0.0) {
            return Err(SpectralError::InvalidParameter(format!(
                "resonance_tol must be positive, got {}",
                self.resonance_tol
            )));
        }
        Ok(())
    }
}

/// The small denominator `−k₂² + (k₁²+k₂²) λ²`.
pub fn denominator(k1: i64, k2: i64, lambda: f64) -> f64 {
    let (a, b) = ((k1 * k1) as f64, (k2 * k2) as f64);
    -b + (a + b) * lambda * lambda
}

fn resonant_mode(k1: i64, k2: i64, d: f64) -> ResonantMode {
    let (a, b) = ((k1 * k1) as f64, (k2 * k2) as f64);
    ResonantMode { k1, k2, denominator: d, ratio: b / (a + b) }
}

/// Homogeneous frequency `ω_k = |k₂| / |k|` of mode `k`.
pub fn homogeneous_frequency(k1: i64, k2: i64) -> f64 {
    let norm = ((k1 * k1 + k2 * k2) as f64).sqrt();
    k2.unsigned_abs() as f64 / norm
}

/// Closed-form coefficient of `u` at time `t` for one mode. The `(0,0)`
/// mode is set to zero.
pub fn u_hat(
    f_coeff: Complex64,
    k1: i64,
    k2: i64,
    config: &SolverConfig,
    t: f64,
) -> Result<Complex64, SpectralError> {
    if k1 == 0 && k2 == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let d = denominator(k1, k2, config.lambda);
    if d.abs() < config.resonance_tol {
        return Err(SpectralError::Resonance { modes: vec![resonant_mode(k1, k2, d)] });
    }
    let forced = (config.lambda * t).cos();
    let time = match config.mode {
        SolverMode::Forced => forced,
        SolverMode::IcCorrected => forced - (homogeneous_frequency(k1, k2) * t).cos(),
    };
    Ok(f_coeff * (time / (config.basis.operator_scale() * d)))
}

fn resonant_modes(k: usize, config: &SolverConfig) -> Vec<ResonantMode> {
    let kk = k as i64;
    let mut out = Vec::new();
    for k1 in -kk..=kk {
        for k2 in -kk..=kk {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let d = denominator(k1, k2, config.lambda);
            if d.abs() < config.resonance_tol {
                out.push(resonant_mode(k1, k2, d));
            }
        }
    }
    out
}

fn check_solvable(f: &FourierField, config: &SolverConfig) -> Result<(), SpectralError> {
    config.validate()?;
    let mean = f.get(0, 0).norm();
    if mean >= MEAN_TOL {
        return Err(SpectralError::NonZeroMean(mean));
    }
    let modes = resonant_modes(f.truncation(), config);
    if modes.is_empty() {
        Ok(())
    } else {
        Err(SpectralError::Resonance { modes })
    }
}

/// Coefficient fields of `u` at each requested time. Every retained mode of
/// the truncation is checked for resonance before any work is done.
pub fn solve(
    f: &FourierField,
    config: &SolverConfig,
    times: &[f64],
) -> Result<Vec<FourierField>, SpectralError> {
    check_solvable(f, config)?;
    times
        .iter()
        .map(|&t| {
            let mut out = FourierField::zeros(f.truncation());
            for (k1, k2, c) in f.iter() {
                out.set(k1, k2, u_hat(c, k1, k2, config, t)?);
            }
            Ok(out)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Largest absolute residual over modes and interior times.
    pub max_abs: f64,
    /// Largest residual divided by `|f̂|`, over modes with nonzero forcing.
    pub max_relative: f64,
}

/// Substitutes a solution time series back into the per-mode ODE, using the
/// second central difference for `∂ₜ²`.
pub fn residual_check(
    u_t: &[FourierField],
    f: &FourierField,
    config: &SolverConfig,
    times: &[f64],
) -> Result<ResidualReport, SpectralError> {
    if times.len() < 3 || u_t.len() != times.len() {
        return Err(SpectralError::InvalidTimes(format!(
            "need >= 3 times matching the series, got {} times and {} fields",
            times.len(),
            u_t.len()
        )));
    }
    let h = times[1] - times[0];
    if !(h > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(SpectralError::InvalidTimes("times must be uniformly increasing".into()));
    }
    let scale = config.basis.operator_scale();
    let mut report = ResidualReport { max_abs: 0.0, max_relative: 0.0 };
    for j in 1..times.len() - 1 {
        let forcing = (config.lambda * times[j]).cos();
        for (k1, k2, fc) in f.iter() {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let (a, b) = ((k1 * k1) as f64, (k2 * k2) as f64);
            let (prev, cur, next) = (u_t[j - 1].get(k1, k2), u_t[j].get(k1, k2), u_t[j + 1].get(k1, k2));
            let second = (next - cur * 2.0 + prev) / (h * h);
            let lhs = -(second * (a + b) + cur * b) * scale;
            let res = (lhs - fc * forcing).norm();
            report.max_abs = report.max_abs.max(res);
            if fc.norm() > 0.0 {
                report.max_relative = report.max_relative.max(res / fc.norm());
            }
        }
    }
    Ok(report)
}

/// Partial `H^s` sum `Σ (1 + k₁² + k₂²)^s |ĉ|²` over the retained modes.
pub fn sobolev_weighted_sum(field: &FourierField, s: f64) -> f64 {
    field
        .iter()
        .map(|(k1, k2, c)| (1.0 + (k1 * k1 + k2 * k2) as f64).powf(s) * c.norm_sqr())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenominatorMargin {
    /// `min |D(k,λ)|·(1+|k|²)^((1+β)/2)` over `1 ≤ |k₁|,|k₂| ≤ K`.
    pub margin: f64,
    pub k1: i64,
    pub k2: i64,
}

/// Empirical small-denominator constant at truncation `K`.
pub fn denominator_margin(lambda: f64, beta: f64, k: usize) -> Result<DenominatorMargin, SpectralError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(SpectralError::InvalidParameter(format!("lambda = {lambda} is outside (0, 1)")));
    }
    if k < 1 {
        return Err(SpectralError::InvalidParameter("K must be at least 1".into()));
    }
    let kk = k as i64;
    let mut best = DenominatorMargin { margin: f64::INFINITY, k1: 0, k2: 0 };
    // D and the weight depend on |k₁|, |k₂| only
    for k1 in 1..=kk {
        for k2 in 1..=kk {
            let d = denominator(k1, k2, lambda);
            let norm_sq = (k1 * k1 + k2 * k2) as f64;
            if d.abs() <= EXACT_RESONANCE_TOL * norm_sq {
                return Err(SpectralError::ExactResonance { k1, k2, lambda });
            }
            let m = d.abs() * (1.0 + norm_sq).powf(0.5 * (1.0 + beta));
            if m < best.margin {
                best = DenominatorMargin { margin: m, k1, k2 };
            }
        }
    }
    Ok(best)
}

pub const DEFAULT_STABILITY_SLACK: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub lambda: f64,
    pub s: f64,
    pub beta: f64,
    /// Exponent `s − 1 − β` applied to `u`.
    pub u_exponent: f64,
    pub truncations: Vec<usize>,
    pub f_sums: Vec<f64>,
    pub u_sums: Vec<f64>,
    /// Ratios of successive `u` partial sums.
    pub u_ratios: Vec<f64>,
    pub slack: f64,
    /// `|u_K / u_{K/2} − 1| ≤ slack`.
    pub stabilized: bool,
    /// Mode carrying the largest share of the full `u` sum.
    pub dominant_mode: (i64, i64),
    pub dominant_share: f64,
}

/// Compares `H^s` partial sums of `f` with `H^(s−1−β)` partial sums of `u` at
/// truncations `K/4`, `K/2`, `K`. The `u` amplitude of each mode is the
/// time-uniform envelope `|f̂| / (c |D|)` of the forced response.
pub fn regularity_report(
    f: &FourierField,
    config: &SolverConfig,
    s: f64,
    beta: f64,
    slack: f64,
) -> Result<RegularityReport, SpectralError> {
    let k = f.truncation();
    if k < 4 {
        return Err(SpectralError::InvalidParameter(format!(
            "regularity report needs K >= 4, got {k}"
        )));
    }
    check_solvable(f, config)?;
    let scale = config.basis.operator_scale();
    let envelope = FourierField::from_fn(k, |k1, k2| {
        if k1 == 0 && k2 == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let d = denominator(k1, k2, config.lambda);
        Complex64::new(f.get(k1, k2).norm() / (scale * d.abs()), 0.0)
    });
    let u_exponent = s - 1.0 - beta;
    let truncations = vec![k / 4, k / 2, k];
    let f_sums: Vec<f64> = truncations.iter().map(|&t| sobolev_weighted_sum(&f.truncated(t), s)).collect();
    let u_sums: Vec<f64> = truncations
        .iter()
        .map(|&t| sobolev_weighted_sum(&envelope.truncated(t), u_exponent))
        .collect();
    let u_ratios: Vec<f64> = u_sums.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else if w[1] > 0.0 { f64::INFINITY } else { 1.0 }).collect();
    let stabilized = (u_ratios[1] - 1.0).abs() <= slack;

    let total = u_sums[2];
    let (dominant_mode, dominant) = envelope
        .iter()
        .map(|(k1, k2, c)| ((k1, k2), (1.0 + (k1 * k1 + k2 * k2) as f64).powf(u_exponent) * c.norm_sqr()))
        .fold(((0, 0), 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(RegularityReport {
        lambda: config.lambda,
        s,
        beta,
        u_exponent,
        truncations,
        f_sums,
        u_sums,
        u_ratios,
        slack,
        stabilized,
        dominant_mode,
        dominant_share: if total > 0.0 { dominant / total } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn grid(n: usize, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn((n, n), |(i, j)| f(i as f64 / n as f64, j as f64 / n as f64))
    }

    #[test]
    fn constant_and_cosine_analysis() {
        let one = analyze(&grid(16, |_, _| 1.0), 4).unwrap();
        for (k1, k2, v) in one.iter() {
            let expect = if (k1, k2) == (0, 0) { 1.0 } else { 0.0 };
            assert!((v - c(expect)).norm() < 1e-12);
        }
        let cos = analyze(&grid(16, |x, _| (2.0 * PI * x).cos()), 4).unwrap();
        for (k1, k2, v) in cos.iter() {
            let expect = if k2 == 0 && k1.abs() == 1 { 0.5 } else { 0.0 };
            assert!((v - c(expect)).norm() < 1e-12, "({k1},{k2}) {v}");
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(
            analyze(&grid(9, |_, _| 0.0), 4),
            Err(SpectralError::GridTooCoarse { need: 10, .. })
        ));
        assert!(matches!(
            analyze(&Array2::zeros((4, 6)), 1),
            Err(SpectralError::NonSquareGrid { .. })
        ));
    }

    #[test]
    fn synthesize_cosine_and_zero() {
        let mut f = FourierField::zeros(2);
        f.set(1, 0, c(0.5));
        f.set(-1, 0, c(0.5));
        let g = synthesize(&f, 8);
        for ((i, _), v) in g.indexed_iter() {
            assert!((v - (2.0 * PI * i as f64 / 8.0).cos()).abs() < 1e-14);
        }
        let z = synthesize(&FourierField::zeros(3), 8);
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derivative_examples() {
        let mut f = FourierField::zeros(2);
        f.set(0, 0, c(3.0));
        let d = derivative_field(&f, 1).unwrap();
        assert!(d.iter().all(|(_, _, v)| v.norm() == 0.0));
        let mut m = FourierField::zeros(2);
        m.set(1, 0, c(1.0));
        let d = derivative_field(&m, 1).unwrap();
        assert!((d.get(1, 0) - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-15);
        assert_eq!(derivative_field(&m, 2).unwrap().get(1, 0).norm(), 0.0);
        assert!(derivative_field(&m, 3).is_err());
    }

    #[test]
    fn u_hat_examples() {
        let diag = SolverConfig::new(FRAC_1_SQRT_2, SolverMode::Forced).unwrap();
        // λ² = 1/2 up to rounding, far below the resonance tolerance
        match u_hat(c(1.0), 1, 1, &diag, 0.0) {
            Err(SpectralError::Resonance { modes }) => {
                assert_eq!((modes[0].k1, modes[0].k2), (1, 1));
                assert!((modes[0].ratio - 0.5).abs() < 1e-15);
            }
            other => panic!("expected resonance, got {other:?}"),
        }
        let cfg = SolverConfig::new(0.6, SolverMode::Forced).unwrap();
        assert_eq!(u_hat(c(0.0), 2, 1, &cfg, 0.3).unwrap(), c(0.0));
        let v = u_hat(c(1.0), 1, 0, &cfg, 0.0).unwrap();
        assert!((v.re - 1.0 / (4.0 * PI * PI * 0.36)).abs() < 1e-15);
        assert_eq!(u_hat(c(1.0), 0, 0, &cfg, 0.0).unwrap(), c(0.0));
    }

    #[test]
    fn ic_corrected_starts_at_rest() {
        let cfg = SolverConfig::new(0.6, SolverMode::IcCorrected).unwrap();
        let h = 1e-4;
        for (k1, k2) in [(1, 2), (3, -1), (0, 4), (5, 0)] {
            let at = |t| u_hat(c(1.0), k1, k2, &cfg, t).unwrap();
            assert_eq!(at(0.0), c(0.0));
            assert!(((at(h) - at(-h)) / (2.0 * h)).norm() < 1e-8);
        }
        let forced = SolverConfig::new(0.6, SolverMode::Forced).unwrap();
        let u0 = u_hat(c(1.0), 1, 2, &forced, 0.0).unwrap();
        let d = denominator(1, 2, 0.6);
        assert!((u0.re - 1.0 / (4.0 * PI * PI * d)).abs() < 1e-15);
    }

    #[test]
    fn solve_rejects_mean_and_lists_resonances() {
        let cfg = SolverConfig::new(FRAC_1_SQRT_2, SolverMode::Forced).unwrap();
        let mut f = FourierField::zeros(2);
        f.set(1, 0, c(1.0));
        match solve(&f, &cfg, &[0.0]) {
            Err(SpectralError::Resonance { modes }) => {
                let mut ks: Vec<_> = modes.iter().map(|m| (m.k1, m.k2)).collect();
                ks.sort();
                assert_eq!(ks, vec![(-2, -2), (-2, 2), (-1, -1), (-1, 1), (1, -1), (1, 1), (2, -2), (2, 2)]);
            }
            other => panic!("{other:?}"),
        }
        let ok = SolverConfig::new(0.6, SolverMode::Forced).unwrap();
        f.set(0, 0, c(1e-3));
        assert!(matches!(solve(&f, &ok, &[0.0]), Err(SpectralError::NonZeroMean(_))));
    }

    #[test]
    fn zero_forcing_gives_zero_solution() {
        let cfg = SolverConfig::new(0.6, SolverMode::IcCorrected).unwrap();
        let f = FourierField::zeros(3);
        let times = [0.0, 0.1, 0.2];
        let u = solve(&f, &cfg, &times).unwrap();
        assert!(u.iter().all(|fld| fld.iter().all(|(_, _, v)| v.norm() == 0.0)));
        let r = residual_check(&u, &f, &cfg, &times).unwrap();
        assert_eq!(r.max_abs, 0.0);
    }

    #[test]
    fn residual_requires_uniform_times() {
        let cfg = SolverConfig::new(0.6, SolverMode::Forced).unwrap();
        let f = FourierField::zeros(1);
        let u = vec![FourierField::zeros(1); 3];
        assert!(residual_check(&u, &f, &cfg, &[0.0, 0.1, 0.3]).is_err());
        assert!(residual_check(&u[..2], &f, &cfg, &[0.0, 0.1]).is_err());
    }

    #[test]
    fn sobolev_examples() {
        assert_eq!(sobolev_weighted_sum(&FourierField::zeros(3), 2.0), 0.0);
        let mut m = FourierField::zeros(2);
        m.set(1, 0, c(1.0));
        assert!((sobolev_weighted_sum(&m, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn margin_resonances() {
        assert!(matches!(
            denominator_margin(FRAC_1_SQRT_2, 0.3, 1),
            Err(SpectralError::ExactResonance { k1: 1, k2: 1, .. })
        ));
        // r = 3/7 ⇔ λ = 0.6: D(4, 3) = 0.36·25 − 9 = 0
        assert!(denominator_margin(0.6, 0.1, 3).unwrap().margin > 0.0);
        assert!(matches!(
            denominator_margin(0.6, 0.1, 7),
            Err(SpectralError::ExactResonance { k1: 4, k2: 3, .. })
        ));
    }

    #[test]
    fn sine_round_trip() {
        let mut b = FourierField::zeros(5);
        b.set(1, 1, c(1.0));
        b.set(3, 2, c(-0.25));
        b.set(5, 4, c(0.125));
        let g = synthesize_sine(&b, 16);
        let back = analyze_sine(&g, 5).unwrap();
        assert!(back.max_abs_diff(&b) < 1e-12);
    }
}
