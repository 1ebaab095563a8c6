use std::fs;
use std::io::BufReader;
use std::path::Path;

use chess_billiard::billiard::MAX_STORED_ORBIT;
use chess_billiard::fractal::{default_epsilons, validate_epsilons, TiltConfig, TiltStudy};
use chess_billiard::io::{
    plateaus_json, read_field_json, read_sweep_csv, write_grid_csv, write_orbit_csv,
    write_solution_csv, write_sweep_csv, write_tilt_csv,
};
use chess_billiard::rotation::{
    DEFAULT_MIN_RUN, DEFAULT_PLATEAU_TOL, DEFAULT_Q_MAX, DEFAULT_SWEEP_ITERATIONS, MIN_ITERATIONS,
};
use chess_billiard::spectral::{synthesize_sine, ResidualReport, ResonantMode};
use chess_billiard::*;
use serde::Serialize;

use crate::error::CliError;
use crate::presets::{self, Preset};
use crate::{
    BasisArg, DiophantineArgs, Globals, ModeArg, OrbitArgs, PlateauArgs, SolveArgs, StaircaseArgs,
    SweepArgs, TiltArgs,
};

const FULL_GRID: usize = 10_000;
const DESK_GRID: usize = 999;
/// Time step of the residual check around each requested time.
const RESIDUAL_STEP: f64 = 1e-3;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require_finite(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be finite, got {v}")))
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn load_domain(path: &Path) -> Result<Domain, CliError> {
    let spec: DomainSpec = serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Domain::from_spec(&spec).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Buffers output files so nothing is written unless the whole command succeeds.
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn commit(self, g: &Globals) -> Result<(), CliError> {
        fs::create_dir_all(&g.out)?;
        for (name, bytes) in self.files {
            let path = g.out.join(&name);
            fs::write(&path, bytes)
                .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Data(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

pub fn orbit(g: &Globals, a: OrbitArgs) -> Result<(), CliError> {
    require_finite("lambda", a.lambda)?;
    require_finite("s0", a.s0)?;
    if a.n == 0 || a.n > MAX_STORED_ORBIT {
        return Err(usage(format!("--n must be in 1..={MAX_STORED_ORBIT}, got {}", a.n)));
    }
    let domain = match &a.domain {
        Some(p) => load_domain(p)?,
        None => Domain::unit_square(),
    };
    let params = ChessParams::new(a.lambda).map_err(|e| CliError::Data(e.to_string()))?;
    let o = chess_billiard::orbit(&domain, &params, domain.boundary_point(a.s0), a.n).map_err(|e| match e {
        BilliardError::Step { index, source, .. } => CliError::Data(format!("step {index} failed: {source}")),
        other => CliError::Usage(other.to_string()),
    })?;
    let mut buf = Vec::new();
    write_orbit_csv(&mut buf, &o)?;
    let mut out = Outputs::new();
    out.add("orbit.csv", buf);
    out.commit(g)?;
    let last = o.lift.last().copied().unwrap_or(0.0) - o.lift[0];
    println!("{} mappings, mean lift per mapping {}", o.steps(), last / o.steps() as f64);
    Ok(())
}

struct PlateauParams {
    tol: f64,
    min_run: usize,
    q_max: u64,
}

fn plateau_params(a: &PlateauArgs, preset: Option<&Preset>) -> Result<PlateauParams, CliError> {
    let p = PlateauParams {
        tol: a.plateau_tol.or(preset.and_then(|p| p.plateau_tol)).unwrap_or(DEFAULT_PLATEAU_TOL),
        min_run: a.min_run.or(preset.and_then(|p| p.min_run)).unwrap_or(DEFAULT_MIN_RUN),
        q_max: a.plateau_q_max.or(preset.and_then(|p| p.q_max)).unwrap_or(DEFAULT_Q_MAX),
    };
    if !(p.tol > 0.0 && p.tol.is_finite()) {
        return Err(usage(format!("--plateau-tol must be positive, got {}", p.tol)));
    }
    if p.min_run < 3 {
        return Err(usage(format!("--min-run must be at least 3, got {}", p.min_run)));
    }
    if p.q_max < 1 {
        return Err(usage("--plateau-q-max must be at least 1"));
    }
    Ok(p)
}

fn grid_size(explicit: Option<usize>, preset: Option<&Preset>, full: bool) -> usize {
    explicit.unwrap_or(match (preset, full) {
        (Some(p), true) => p.full_grid_size,
        (Some(p), false) => p.grid_size,
        (None, true) => FULL_GRID,
        (None, false) => DESK_GRID,
    })
}

fn check_sweep_size(grid: usize, n: usize, s0: f64) -> Result<(), CliError> {
    if grid < 2 {
        return Err(usage(format!("--grid-size must be at least 2, got {grid}")));
    }
    if n < MIN_ITERATIONS {
        return Err(usage(format!("--n must be at least {MIN_ITERATIONS}, got {n}")));
    }
    require_finite("s0", s0)
}

pub fn sweep(g: &Globals, a: SweepArgs) -> Result<(), CliError> {
    let preset = a.preset.as_deref().map(|n| presets::load(n, "sweep")).transpose()?;
    let grid = grid_size(a.grid_size, preset.as_ref(), g.full);
    let n = a.n.or(preset.as_ref().map(|p| p.n)).unwrap_or(DEFAULT_SWEEP_ITERATIONS);
    let s0 = a.s0.or(preset.as_ref().map(|p| p.s0)).unwrap_or(0.1);
    check_sweep_size(grid, n, s0)?;
    let pp = plateau_params(&a.plateau, preset.as_ref())?;
    let domain = match (&a.domain, preset.as_ref().and_then(|p| p.domain.clone())) {
        (Some(path), _) => load_domain(path)?,
        (None, Some(spec)) => Domain::from_spec(&spec).map_err(|e| CliError::Data(e.to_string()))?,
        (None, None) => Domain::unit_square(),
    };

    let sw = chess_billiard::sweep(&domain, grid, n, s0).map_err(|e| usage(e.to_string()))?;
    let present = sw.present().count();
    if present == 0 {
        return Err(CliError::Data(format!("all {grid} sweep points failed")));
    }
    let det = detect_plateaus(&sw, pp.tol, pp.min_run, pp.q_max).map_err(|e| usage(e.to_string()))?;

    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &sw)?;
    let mut out = Outputs::new();
    out.add("sweep.csv", csv);
    let mut json = plateaus_json(&det.plateaus)?.into_bytes();
    json.push(b'\n');
    out.add("plateaus.json", json);
    out.commit(g)?;
    println!(
        "{grid} points ({} missing), {} plateaus, plateau fraction {}",
        grid - present,
        det.plateaus.len(),
        det.fraction
    );
    Ok(())
}

fn describe_modes(modes: &[ResonantMode]) -> String {
    modes
        .iter()
        .map(|m| format!("({}, {}) D = {:e}, k2^2/|k|^2 = {}", m.k1, m.k2, m.denominator, m.ratio))
        .collect::<Vec<_>>()
        .join("; ")
}

fn spectral_error(e: SpectralError) -> CliError {
    match e {
        SpectralError::Resonance { ref modes } => CliError::Resonance(format!(
            "{} resonant mode(s): {}",
            modes.len(),
            describe_modes(modes)
        )),
        SpectralError::ExactResonance { .. } => CliError::Resonance(e.to_string()),
        SpectralError::InvalidParameter(_) | SpectralError::InvalidTimes(_) => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    }
}

#[derive(Serialize)]
struct SolveReport {
    lambda: f64,
    mode: SolverMode,
    basis: Basis,
    #[serde(rename = "K")]
    k: usize,
    times: Vec<f64>,
    residual_step: f64,
    residual: ResidualReport,
    regularity: Option<spectral::RegularityReport>,
}

pub fn solve(g: &Globals, a: SolveArgs) -> Result<(), CliError> {
    require_finite("lambda", a.lambda)?;
    if !(a.lambda > 0.0 && a.lambda < 1.0) {
        return Err(usage(format!("--lambda must lie in (0, 1), got {}", a.lambda)));
    }
    if a.times.is_empty() {
        return Err(usage("--times needs at least one value"));
    }
    for &t in &a.times {
        require_finite("times", t)?;
    }
    if a.grid == 0 {
        return Err(usage("--grid must be positive"));
    }
    for (name, v) in [("s", a.s), ("beta", a.beta), ("slack", a.slack)] {
        require_finite(name, v)?;
    }
    if a.beta < 0.0 || a.slack <= 0.0 {
        return Err(usage("--beta must be non-negative and --slack positive"));
    }
    let mode = match a.mode {
        ModeArg::Forced => SolverMode::Forced,
        ModeArg::IcCorrected => SolverMode::IcCorrected,
    };
    let basis = match a.basis {
        BasisArg::Periodic => Basis::Periodic,
        BasisArg::Sine => Basis::Sine,
    };
    let cfg = SolverConfig::new(a.lambda, mode).map_err(spectral_error)?.with_basis(basis);

    let mut f = read_field_json(&read_text(&a.field)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.field.display())))?;
    if let Some(k) = a.k {
        f = f.truncated(k);
    }
    let fields = chess_billiard::solve(&f, &cfg, &a.times).map_err(spectral_error)?;

    let mut residual = ResidualReport { max_abs: 0.0, max_relative: 0.0 };
    for &t in &a.times {
        let times = [t - RESIDUAL_STEP, t, t + RESIDUAL_STEP];
        let u = chess_billiard::solve(&f, &cfg, &times).map_err(spectral_error)?;
        let r = residual_check(&u, &f, &cfg, &times).map_err(spectral_error)?;
        residual.max_abs = residual.max_abs.max(r.max_abs);
        residual.max_relative = residual.max_relative.max(r.max_relative);
    }
    let regularity = if f.truncation() >= 4 {
        Some(regularity_report(&f, &cfg, a.s, a.beta, a.slack).map_err(spectral_error)?)
    } else {
        None
    };

    let mut out = Outputs::new();
    for (i, u) in fields.iter().enumerate() {
        let mut buf = Vec::new();
        write_solution_csv(&mut buf, u)?;
        out.add(format!("solution_t{i}.csv"), buf);
        let grid = match basis {
            Basis::Periodic => synthesize(u, a.grid),
            Basis::Sine => synthesize_sine(u, a.grid),
        };
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &grid, basis)?;
        out.add(format!("grid_t{i}.csv"), buf);
    }
    let report = SolveReport {
        lambda: a.lambda,
        mode,
        basis,
        k: f.truncation(),
        times: a.times.clone(),
        residual_step: RESIDUAL_STEP,
        residual,
        regularity,
    };
    let stabilized = report.regularity.as_ref().map(|r| r.stabilized);
    out.add("regularity.json", json_bytes(&report)?);
    out.commit(g)?;
    println!(
        "{} time(s), K = {}, max relative residual {:e}, stabilized {}",
        a.times.len(),
        f.truncation(),
        residual.max_relative,
        stabilized.map_or("n/a".to_string(), |s| s.to_string())
    );
    Ok(())
}

pub fn diophantine(g: &Globals, a: DiophantineArgs) -> Result<(), CliError> {
    if a.q_max < 1 {
        return Err(usage("--q-max must be at least 1"));
    }
    let r = match (a.r, a.lambda) {
        (Some(r), None) => {
            require_finite("r", r)?;
            r
        }
        (None, Some(l)) => {
            require_finite("lambda", l)?;
            r_square_exact(l).map_err(|e| usage(e.to_string()))?
        }
        _ => return Err(usage("give exactly one of --r and --lambda")),
    };
    let report = beta_estimate(r, a.q_max).map_err(|e| CliError::Arithmetic(e.to_string()))?;
    let mut out = Outputs::new();
    out.add("diophantine.json", json_bytes(&report)?);
    out.commit(g)?;
    println!(
        "r = {}, {} convergents, beta_hat = {}, c_hat = {}",
        report.r,
        report.convergents.len(),
        report.beta_hat,
        report.c_hat
    );
    Ok(())
}

pub fn staircase(g: &Globals, a: StaircaseArgs) -> Result<(), CliError> {
    let eps = a.epsilons.clone().unwrap_or_else(default_epsilons);
    validate_epsilons(&eps).map_err(|e| usage(e.to_string()))?;
    let pp = plateau_params(&a.plateau, None)?;
    let file = fs::File::open(&a.sweep)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", a.sweep.display())))?;
    let sw = read_sweep_csv(BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", a.sweep.display())))?;
    let det = detect_plateaus(&sw, pp.tol, pp.min_run, pp.q_max).map_err(|e| usage(e.to_string()))?;
    let analysis = staircase_dimension(&sw, &det.plateaus, &eps).map_err(|e| match e {
        FractalError::InvalidEpsilons(_) => usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    let mut out = Outputs::new();
    out.add("staircase.json", json_bytes(&analysis)?);
    out.commit(g)?;
    println!(
        "S = {}, D_summary = {}, D_minkowski = {}{}",
        analysis.s,
        analysis.d_summary,
        analysis.d_minkowski,
        if analysis.all_plateau { " (all points on plateaus)" } else { "" }
    );
    Ok(())
}

pub fn tilt(g: &Globals, a: TiltArgs) -> Result<(), CliError> {
    let preset = presets::load(a.preset.as_deref().unwrap_or("fig8"), "tilt")?;
    let angles = a.angles.clone().or(preset.angles.clone()).unwrap_or_default();
    if angles.is_empty() {
        return Err(usage("--angles needs at least one value"));
    }
    for &t in &angles {
        require_finite("angles", t)?;
    }
    let grid = grid_size(a.grid_size, Some(&preset), g.full);
    let n = a.n.unwrap_or(preset.n);
    let s0 = a.s0.unwrap_or(preset.s0);
    check_sweep_size(grid, n, s0)?;
    let pp = plateau_params(&a.plateau, Some(&preset))?;
    let epsilons = a.epsilons.clone().or(preset.epsilons.clone()).unwrap_or_else(default_epsilons);
    validate_epsilons(&epsilons).map_err(|e| usage(e.to_string()))?;
    let config = TiltConfig {
        grid_size: grid,
        n_per_point: n,
        s0,
        plateau_tol: pp.tol,
        min_run: pp.min_run,
        q_max: pp.q_max,
        epsilons,
    };

    let study = if angles.len() >= 3 && angles.contains(&0.0) {
        dimension_vs_tilt(&angles, &config)
    } else {
        tilt_dimensions(&angles, &config).map(|points| TiltStudy { points, fit: None })
    }
    .map_err(|e| usage(e.to_string()))?;
    if study.points.iter().all(|p| p.analysis.is_none()) {
        let reasons: Vec<String> = study.points.iter().filter_map(|p| p.error.clone()).collect();
        return Err(CliError::Data(format!("every angle failed: {}", reasons.join("; "))));
    }
    let mut buf = Vec::new();
    write_tilt_csv(&mut buf, &study)?;
    let mut out = Outputs::new();
    out.add("tilt.csv", buf);
    out.commit(g)?;
    for p in &study.points {
        match (p.dimension(), &p.error) {
            (Some(d), _) => println!("angle {}: D = {d}", p.angle),
            (None, Some(e)) => println!("angle {}: failed ({e})", p.angle),
            (None, None) => println!("angle {}: no result", p.angle),
        }
    }
    if let Some(fit) = &study.fit {
        println!("quadratic fit coefficients {fit:?}");
    }
    Ok(())
}

