//! Continued fractions and finite-scale Diophantine diagnostics.
//!
//! All diagnostics are restricted to convergents: for `q` below the next
//! convergent denominator no fraction approximates better, so the minimum of
//! `|r − p/q|·q^(2+β)` over all `q ≤ q_max` is attained on a convergent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Remainder below which a continued fraction expansion is treated as
/// terminated.
pub const DEFAULT_RATIONAL_TOL: f64 = 1e-12;

const MAX_EXPANSION_TERMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArithmeticError {
    #[error("{value} is rational at scale q_max: {p}/{q}")]
    RationalInput { value: f64, p: i64, q: u64 },
    #[error("only {found} convergents with q <= {q_max}; need at least {needed}")]
    InsufficientConvergents { found: usize, needed: usize, q_max: u64 },
    #[error("input must be finite, got {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub a0: i64,
    pub terms: Vec<u64>,
    /// The expansion terminated on a vanishing remainder.
    pub exact: bool,
}

impl ContinuedFraction {
    /// Evaluates `[a0; a1, ..., an]` back to a real number.
    pub fn value(&self) -> f64 {
        let tail = self
            .terms
            .iter()
            .rev()
            .fold(None, |acc: Option<f64>, &a| {
                let a = a as f64;
                Some(match acc {
                    None => a,
                    Some(t) => a + 1.0 / t,
                })
            });
        match tail {
            None => self.a0 as f64,
            Some(t) => self.a0 as f64 + 1.0 / t,
        }
    }

    /// Builds the continued fraction with the given partial quotients.
    pub fn from_terms(a0: i64, terms: Vec<u64>) -> Self {
        Self { a0, terms, exact: true }
    }
}

/// A convergent `p/q` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub p: i64,
    pub q: u64,
}

impl Convergent {
    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// Convergent together with its approximation error, as listed in a
/// [`DiophantineReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergentError {
    pub p: i64,
    pub q: u64,
    pub err: f64,
}

/// Empirical Diophantine fit at scale `q_max`:
/// `|r − p/q| ≈ c_hat / q^(2 + beta_hat)` along the convergents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub r: f64,
    pub convergents: Vec<ConvergentError>,
    pub beta_hat: f64,
    pub c_hat: f64,
    pub q_max: u64,
}

/// Euclidean expansion of `x`. Stops early (with `exact = true`) when a
/// remainder falls below `rational_tol`; a trailing partial quotient of 1 is
/// folded into its predecessor.
pub fn continued_fraction(x: f64, max_terms: usize, rational_tol: f64) -> ContinuedFraction {
    let max_terms = max_terms.max(1);
    let a0 = x.floor();
    let mut frac = x - a0;
    let mut a0 = a0 as i64;
    let mut terms: Vec<u64> = Vec::new();
    let mut exact = false;

    if frac < rational_tol {
        exact = true;
    } else if 1.0 - frac < rational_tol {
        a0 += 1;
        exact = true;
    }

    while !exact && terms.len() < max_terms {
        let y = 1.0 / frac;
        if !y.is_finite() || y >= u64::MAX as f64 {
            exact = true;
            break;
        }
        let a = y.floor();
        frac = y - a;
        let mut a = a as u64;
        if frac < rational_tol {
            exact = true;
        } else if 1.0 - frac < rational_tol {
            a += 1;
            exact = true;
        }
        terms.push(a);
    }

    if exact && terms.len() > 1 && terms.last() == Some(&1) {
        terms.pop();
        *terms.last_mut().expect("more than one term") += 1;
    }
    ContinuedFraction { a0, terms, exact }
}

/// Convergents `p_k/q_k` from `p_k = a_k p_{k−1} + p_{k−2}`. Stops early if
/// the recurrence leaves the `i64` range.
pub fn convergents(cf: &ContinuedFraction) -> Vec<Convergent> {
    let mut out = Vec::with_capacity(cf.terms.len() + 1);
    let (mut p_prev, mut q_prev): (i128, i128) = (1, 0);
    let (mut p, mut q): (i128, i128) = (cf.a0 as i128, 1);
    out.push(Convergent { p: cf.a0, q: 1 });
    for &a in &cf.terms {
        let a = a as i128;
        let (Some(np), Some(nq)) = (
            a.checked_mul(p).and_then(|v| v.checked_add(p_prev)),
            a.checked_mul(q).and_then(|v| v.checked_add(q_prev)),
        ) else {
            break;
        };
        if np.abs() > i64::MAX as i128 || nq > i64::MAX as i128 {
            break;
        }
        (p_prev, q_prev, p, q) = (p, q, np, nq);
        out.push(Convergent { p: p as i64, q: q as u64 });
    }
    out
}

/// Convergents of `r` with `q ≤ q_max`, deduplicated by denominator (keeping
/// the closer one) and checked for rationality.
fn scaled_convergents(r: f64, q_max: u64) -> Result<Vec<ConvergentError>, ArithmeticError> {
    if !r.is_finite() {
        return Err(ArithmeticError::NonFinite(r));
    }
    let cf = continued_fraction(r, MAX_EXPANSION_TERMS, DEFAULT_RATIONAL_TOL);
    let all = convergents(&cf);
    let mut out: Vec<ConvergentError> = Vec::new();
    for (i, c) in all.iter().enumerate() {
        if c.q > q_max {
            break;
        }
        let err = (r - c.value()).abs();
        let terminal = cf.exact && i + 1 == all.len();
        if terminal || err < DEFAULT_RATIONAL_TOL {
            return Err(ArithmeticError::RationalInput { value: r, p: c.p, q: c.q });
        }
        let entry = ConvergentError { p: c.p, q: c.q, err };
        match out.last_mut() {
            Some(last) if last.q == c.q => {
                if err < last.err {
                    *last = entry;
                }
            }
            _ => out.push(entry),
        }
    }
    Ok(out)
}

/// Best empirical constant `min |r − p/q|·q^(2+β)` over convergents with
/// `q ≤ q_max`.
pub fn diophantine_margin(r: f64, beta: f64, q_max: u64) -> Result<f64, ArithmeticError> {
    let list = scaled_convergents(r, q_max)?;
    Ok(list
        .iter()
        .map(|c| c.err * (c.q as f64).powf(2.0 + beta))
        .fold(f64::INFINITY, f64::min))
}

/// Least-squares fit of `log|r − p_k/q_k|` against `log q_k`; the slope is
/// `−(2 + β̂)` with `β̂` clamped at zero.
pub fn beta_estimate(r: f64, q_max: u64) -> Result<DiophantineReport, ArithmeticError> {
    const NEEDED: usize = 4;
    let list = scaled_convergents(r, q_max)?;
    if list.len() < NEEDED {
        return Err(ArithmeticError::InsufficientConvergents {
            found: list.len(),
            needed: NEEDED,
            q_max,
        });
    }
    let xs: Vec<f64> = list.iter().map(|c| (c.q as f64).ln()).collect();
    let ys: Vec<f64> = list.iter().map(|c| c.err.ln()).collect();
    let (slope, intercept) = linear_fit(&xs, &ys);
    Ok(DiophantineReport {
        r,
        convergents: list,
        beta_hat: (-slope - 2.0).max(0.0),
        c_hat: intercept.exp(),
        q_max,
    })
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// First convergent of `x` with denominator at most `q_max` lying within
/// `tol` of `x`.
pub fn nearby_rational(x: f64, tol: f64, q_max: u64) -> Option<Convergent> {
    if !x.is_finite() {
        return None;
    }
    let cf = continued_fraction(x, MAX_EXPANSION_TERMS, DEFAULT_RATIONAL_TOL);
    convergents(&cf)
        .into_iter()
        .take_while(|c| c.q <= q_max)
        .find(|c| (x - c.value()).abs() <= tol)
}
