//! CSV and JSON artifact formats.

use std::io::{BufRead, Write};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billiard::Orbit;
use crate::fractal::TiltStudy;
use crate::rotation::{
    EstimateStatus, MissingReason, Plateau, RotationEstimate, SweepResult, SweepSample,
};
use crate::spectral::{Basis, FourierField};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// `%g`-style formatting with 12 significant digits.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let fixed = format!("{v:.decimals$}");
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

pub fn write_orbit_csv<W: Write>(mut w: W, orbit: &Orbit) -> std::io::Result<()> {
    writeln!(w, "step,s,x,y,lift")?;
    for (i, (p, l)) in orbit.points.iter().zip(&orbit.lift).enumerate() {
        writeln!(w, "{i},{},{},{},{}", fmt_sig(p.s), fmt_sig(p.x), fmt_sig(p.y), fmt_sig(*l))?;
    }
    Ok(())
}

fn status_str(sample: &SweepSample) -> &'static str {
    match sample {
        SweepSample::Estimated(e) => e.status.as_str(),
        SweepSample::Missing(m) => m.as_str(),
    }
}

pub fn write_sweep_csv<W: Write>(mut w: W, sweep: &SweepResult) -> std::io::Result<()> {
    writeln!(w, "lambda,r,n,err_bound,status")?;
    for (l, s) in sweep.lambdas.iter().zip(&sweep.estimates) {
        match s {
            SweepSample::Estimated(e) => writeln!(
                w,
                "{},{},{},{},{}",
                fmt_sig(*l),
                fmt_sig(e.r),
                e.n,
                fmt_sig(e.error_bound),
                status_str(s)
            )?,
            SweepSample::Missing(_) => writeln!(w, "{},,,,{}", fmt_sig(*l), status_str(s))?,
        }
    }
    Ok(())
}

pub fn read_sweep_csv<R: BufRead>(r: R) -> Result<SweepResult, IoError> {
    let mut lambdas = Vec::new();
    let mut estimates = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if lineno == 1 && trimmed.starts_with("lambda") {
            continue;
        }
        let perr = |msg: String| IoError::Parse { line: lineno, msg };
        let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(perr(format!("expected 5 columns, got {}", cols.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| perr(format!("bad {what} value {s:?}")))
        };
        let lambda = num(cols[0], "lambda")?;
        let sample = match cols[4] {
            "converged" | "vertex_hit_truncated" => {
                let status = if cols[4] == "converged" {
                    EstimateStatus::Converged
                } else {
                    EstimateStatus::VertexHitTruncated
                };
                let n = cols[2]
                    .parse::<usize>()
                    .map_err(|_| perr(format!("bad n value {:?}", cols[2])))?;
                SweepSample::Estimated(RotationEstimate {
                    r: num(cols[1], "r")?,
                    n,
                    error_bound: num(cols[3], "err_bound")?,
                    status,
                })
            }
            "edge_parallel" => SweepSample::Missing(MissingReason::EdgeParallel),
            "vertex_hit" => SweepSample::Missing(MissingReason::VertexHit),
            other => return Err(perr(format!("unknown status {other:?}"))),
        };
        lambdas.push(lambda);
        estimates.push(sample);
    }
    SweepResult::from_parts(lambdas, estimates).map_err(|e| IoError::Parse { line: 0, msg: e.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauRecord {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub locked_r: f64,
    pub p: Option<i64>,
    pub q: Option<u64>,
}

impl From<&Plateau> for PlateauRecord {
    fn from(p: &Plateau) -> Self {
        Self {
            lambda_lo: p.lambda_lo,
            lambda_hi: p.lambda_hi,
            locked_r: p.locked_r,
            p: p.locked_rational.map(|c| c.p),
            q: p.locked_rational.map(|c| c.q),
        }
    }
}

pub fn plateaus_json(plateaus: &[Plateau]) -> Result<String, IoError> {
    let records: Vec<PlateauRecord> = plateaus.iter().map(PlateauRecord::from).collect();
    Ok(serde_json::to_string_pretty(&records)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FieldEntry {
    k1: i64,
    k2: i64,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FieldFile {
    #[serde(rename = "K", default)]
    k: Option<usize>,
    #[serde(default)]
    entries: Vec<FieldEntry>,
}

/// Parses a field file. Blank input is the empty field; a missing `K` is
/// inferred from the largest listed mode.
pub fn read_field_json(text: &str) -> Result<FourierField, IoError> {
    if text.trim().is_empty() {
        return Ok(FourierField::zeros(0));
    }
    let file: FieldFile = serde_json::from_str(text)?;
    let inferred = file
        .entries
        .iter()
        .map(|e| e.k1.unsigned_abs().max(e.k2.unsigned_abs()) as usize)
        .max()
        .unwrap_or(0);
    let k = file.k.unwrap_or(inferred);
    let mut field = FourierField::zeros(k);
    for (i, e) in file.entries.iter().enumerate() {
        if !field.contains(e.k1, e.k2) {
            return Err(IoError::Parse {
                line: i + 1,
                msg: format!("entry ({}, {}) lies outside K = {k}", e.k1, e.k2),
            });
        }
        if !(e.re.is_finite() && e.im.is_finite()) {
            return Err(IoError::Parse { line: i + 1, msg: "non-finite coefficient".into() });
        }
        field.set(e.k1, e.k2, field.get(e.k1, e.k2) + Complex64::new(e.re, e.im));
    }
    Ok(field)
}

/// Serializes the nonzero coefficients of a field.
pub fn field_json(field: &FourierField) -> Result<String, IoError> {
    let file = FieldFile {
        k: Some(field.truncation()),
        entries: field
            .iter()
            .filter(|(_, _, c)| c.norm_sqr() > 0.0)
            .map(|(k1, k2, c)| FieldEntry { k1, k2, re: c.re, im: c.im })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn write_solution_csv<W: Write>(mut w: W, field: &FourierField) -> std::io::Result<()> {
    writeln!(w, "k1,k2,re,im")?;
    for (k1, k2, c) in field.iter() {
        writeln!(w, "{k1},{k2},{},{}", fmt_sig(c.re), fmt_sig(c.im))?;
    }
    Ok(())
}

/// Grid values with their sample coordinates: `i/N` for the periodic basis,
/// cell midpoints for the sine basis.
pub fn write_grid_csv<W: Write>(mut w: W, grid: &Array2<f64>, basis: Basis) -> std::io::Result<()> {
    let n = grid.nrows();
    let coord = |i: usize| match basis {
        Basis::Periodic => i as f64 / n as f64,
        Basis::Sine => (i as f64 + 0.5) / n as f64,
    };
    writeln!(w, "# grid {n}")?;
    writeln!(w, "x1,x2,u")?;
    for ((i1, i2), v) in grid.indexed_iter() {
        writeln!(w, "{},{},{}", fmt_sig(coord(i1)), fmt_sig(coord(i2)), fmt_sig(*v))?;
    }
    Ok(())
}

/// `angle,D,quadratic_fit_residual`; unavailable values are left blank.
pub fn write_tilt_csv<W: Write>(mut w: W, study: &TiltStudy) -> std::io::Result<()> {
    writeln!(w, "angle,D,quadratic_fit_residual")?;
    let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
    for (i, p) in study.points.iter().enumerate() {
        writeln!(w, "{},{},{}", fmt_sig(p.angle), opt(p.dimension()), opt(study.residual(i)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(12345.0), "12345");
        assert_eq!(fmt_sig(-2.5e-8), "-2.5e-8");
        assert_eq!(fmt_sig(1e15), "1e15");
        assert_eq!(fmt_sig(f64::NAN), "nan");
        let x = 0.123456789012345;
        assert!((fmt_sig(x).parse::<f64>().unwrap() - x).abs() < 1e-12);
    }

    #[test]
    fn sweep_csv_round_trip() {
        let sw = SweepResult::from_parts(
            vec![0.25, 0.5, 0.75],
            vec![
                SweepSample::Estimated(RotationEstimate {
                    r: 0.3,
                    n: 100,
                    error_bound: 0.02,
                    status: EstimateStatus::Converged,
                }),
                SweepSample::Missing(MissingReason::VertexHit),
                SweepSample::Estimated(RotationEstimate {
                    r: 0.7,
                    n: 4,
                    error_bound: 0.5,
                    status: EstimateStatus::VertexHitTruncated,
                }),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &sw).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("0.5,,,,vertex_hit"));
        let back = read_sweep_csv(text.as_bytes()).unwrap();
        assert_eq!(back, sw);
    }

    #[test]
    fn sweep_csv_rejects_garbage() {
        let bad = "lambda,r,n,err_bound,status\n0.5,x,10,0.1,converged\n";
        assert!(matches!(read_sweep_csv(bad.as_bytes()), Err(IoError::Parse { line: 2, .. })));
        let bad = "0.5,0.1,10,0.1,weird\n";
        assert!(read_sweep_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn field_json_round_trip() {
        let mut f = FourierField::zeros(3);
        f.set(1, -2, Complex64::new(0.5, -0.25));
        f.set(-1, 2, Complex64::new(0.5, 0.25));
        let text = field_json(&f).unwrap();
        assert_eq!(read_field_json(&text).unwrap(), f);
        assert_eq!(read_field_json("  \n").unwrap(), FourierField::zeros(0));
        let inferred = read_field_json(r#"{"entries":[{"k1":2,"k2":0,"re":1.0}]}"#).unwrap();
        assert_eq!(inferred.truncation(), 2);
        assert!(read_field_json(r#"{"K":1,"entries":[{"k1":2,"k2":0,"re":1.0}]}"#).is_err());
    }
}
