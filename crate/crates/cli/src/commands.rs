use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use magtorus::ansatz::{
    conservation_residuals, constraint_residual, omega_raw, omega_rescaled, rescale, residual_all_harmonics,
    residual_stationarity,
};
use magtorus::flow::{closed_form_constant, integrate, monitor, DriftStats, IntegrateOptions, Observable, Termination};
use magtorus::quasilinear::{
    assemble as assemble_at, egorov_certificate, geodesic_matrix, matrix_spectrum, spectrum, Classification,
    SpectrumDiagnostics, SpectrumOptions, SpectrumReport, StateVector,
};
use magtorus::report::ResidualReport;
use magtorus::{Ansatz, MagneticSystem, SamplingGrid, ScalarMap, Trajectory};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{columns, csv, float, to_json, write_atomic};
use crate::scenario::{Built, Check, Scenario, TrajectorySpec};
use crate::{CliError, CommonFlags, StepFlags};

#[derive(Debug, Serialize)]
struct CheckOutcome {
    name: &'static str,
    passed: bool,
    tolerance: f64,
    max_sup: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    residuals: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certified: Option<bool>,
}

#[derive(Debug, Serialize)]
struct TrajectoryOutcome {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    samples: usize,
    steps: usize,
    rejected_steps: usize,
    termination: Termination,
    /// Final `(t, x, y, φ)` with `φ` in `[0, 2π)`.
    #[serde(rename = "final")]
    last: [f64; 4],
    drift: Vec<DriftStats>,
    /// Largest deviation from the exact circular motion (constant `Λ`, `Ω`).
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_error: Option<f64>,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct RunReport {
    command: &'static str,
    scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    degree: Option<usize>,
    grid: [usize; 2],
    tolerance: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    checks: Vec<CheckOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trajectories: Vec<TrajectoryOutcome>,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_s: Option<BTreeMap<String, f64>>,
}

fn emit(report_json: &str, out: Option<&Path>, file: &str) -> Result<(), CliError> {
    if let Some(dir) = out {
        write_atomic(&dir.join(file), report_json)?;
    }
    print!("{report_json}");
    Ok(())
}

fn require_ansatz(built: &Built) -> Result<&Ansatz, CliError> {
    built
        .ansatz
        .as_ref()
        .ok_or_else(|| CliError::Input("this check needs an ansatz (`family` or `coefficients`)".into()))
}

fn require_system(built: &Built) -> Result<&MagneticSystem, CliError> {
    built
        .system
        .as_ref()
        .ok_or_else(|| CliError::Input("this check needs a magnetic field (`omega`)".into()))
}

fn residual_outcome(name: &'static str, report: ResidualReport, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: report.passes(tol),
        tolerance: tol,
        max_sup: report.max_sup(),
        residuals: Some(report),
        certified: None,
    }
}

fn run_check(check: Check, built: &Built, tol: f64) -> Result<CheckOutcome, CliError> {
    let grid = &built.grid;
    Ok(match check {
        Check::Stationarity => {
            let a = require_ansatz(built)?;
            residual_outcome(check.name(), residual_stationarity(a, require_system(built)?.omega(), grid, None), tol)
        }
        Check::Harmonics => {
            let a = require_ansatz(built)?;
            residual_outcome(check.name(), residual_all_harmonics(a, require_system(built)?.omega(), grid), tol)
        }
        Check::Constraint => residual_outcome(check.name(), constraint_residual(require_ansatz(built)?, grid)?, tol),
        Check::Conservation => {
            residual_outcome(check.name(), conservation_residuals(&rescale(require_ansatz(built)?)?, grid), tol)
        }
        Check::Certificate => {
            let cert = egorov_certificate(&rescale(require_ansatz(built)?)?, grid, tol);
            CheckOutcome {
                name: check.name(),
                passed: cert.certified,
                tolerance: tol,
                max_sup: cert.residuals.max_sup(),
                residuals: Some(cert.residuals),
                certified: Some(cert.certified),
            }
        }
        Check::OmegaEquivalence => {
            let a = require_ansatz(built)?;
            let raw = omega_raw(a)?;
            let resc = omega_rescaled(&rescale(a)?);
            let worst = grid
                .points(built.geometry)
                .map(|(x, y)| (raw.value(x, y) - resc.value(x, y)).abs())
                .fold(0.0f64, |m, d| if d.is_nan() { f64::NAN } else { m.max(d) });
            CheckOutcome {
                name: check.name(),
                passed: worst < tol,
                tolerance: tol,
                max_sup: worst,
                residuals: None,
                certified: None,
            }
        }
        Check::Drift => unreachable!("drift is run with the trajectories"),
    })
}

fn flux_columns(built: &Built, tol: f64) -> Result<String, CliError> {
    let cert = egorov_certificate(&rescale(require_ansatz(built)?)?, &built.grid, tol);
    let f = &cert.fluxes;
    let mut out = String::from("# x y R G H\n");
    for j in 0..f.ny {
        for i in 0..f.nx {
            let k = j * f.nx + i;
            let row = [f.x[i], f.y[j], f.r[k], f.g[k], f.h[k]].map(float);
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn verify(path: &Path, flags: &CommonFlags, timings: bool) -> Result<bool, CliError> {
    let scenario = Scenario::load(path)?;
    let built = scenario.build(flags.seed, flags.grid()?)?;
    let tol = flags.tol.unwrap_or(scenario.tolerances.residual);
    let mut requested = scenario.checks.clone().unwrap_or_else(|| {
        let mut all = Check::RESIDUAL_CHECKS.to_vec();
        if !scenario.trajectories.is_empty() {
            all.push(Check::Drift);
        }
        all
    });
    requested.sort();
    requested.dedup();

    let started = Instant::now();
    let residual_checks: Vec<Check> = requested.iter().copied().filter(|c| *c != Check::Drift).collect();
    let results: Vec<(Check, Result<CheckOutcome, CliError>, f64)> = residual_checks
        .par_iter()
        .map(|&c| {
            let t = Instant::now();
            let r = run_check(c, &built, tol);
            (c, r, t.elapsed().as_secs_f64())
        })
        .collect();
    let mut checks = Vec::new();
    let mut clock = BTreeMap::new();
    for (c, r, secs) in results {
        checks.push(r?);
        clock.insert(c.name().to_string(), secs);
    }

    let mut trajectories = Vec::new();
    if requested.contains(&Check::Drift) {
        let t = Instant::now();
        trajectories = run_trajectories(&scenario, &built, None, scenario.tolerances.drift, None, false)?;
        clock.insert("drift".into(), t.elapsed().as_secs_f64());
    }
    clock.insert("total".into(), started.elapsed().as_secs_f64());

    if flags.plot_data {
        let dir = flags.out.clone().unwrap_or_else(|| PathBuf::from("."));
        if built.ansatz.is_some() {
            write_atomic(&dir.join("fluxes.dat"), &flux_columns(&built, tol)?)?;
        }
    }

    let passed = checks.iter().all(|c| c.passed) && trajectories.iter().all(|t| t.passed);
    let report = RunReport {
        command: "verify",
        scenario: scenario.name.clone(),
        description: scenario.description.clone(),
        schema_version: scenario.schema_version,
        degree: built.ansatz.as_ref().map(Ansatz::degree),
        grid: [built.grid.nx, built.grid.ny],
        tolerance: tol,
        checks,
        trajectories,
        passed,
        timings_s: timings.then_some(clock),
    };
    emit(&to_json(&report), flags.out.as_deref(), "report.json")?;
    Ok(passed)
}

fn is_constant(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut first = None;
    for v in values {
        match first {
            None => first = Some(v),
            Some(f) if f != v => return None,
            _ => {}
        }
    }
    first
}

/// `(c, b)` when `Λ ≡ c` and `Ω ≡ b` on the grid.
fn constant_coefficients(system: &MagneticSystem, grid: &SamplingGrid) -> Option<(f64, f64)> {
    let geometry = system.geometry();
    let c = is_constant(grid.points(geometry).map(|(x, y)| system.lambda().eval(x, y)))?;
    if grid.points(geometry).any(|(x, y)| system.lambda().d_dx(x, y) != 0.0 || system.lambda().d_dy(x, y) != 0.0) {
        return None;
    }
    let b = is_constant(grid.points(geometry).map(|(x, y)| system.omega().value(x, y)))?;
    Some((c, b))
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn closed_form_error(traj: &Trajectory, c: f64, b: f64) -> f64 {
    let s0 = &traj.states[0];
    let start = [s0.x, s0.y, traj.phi_unwrapped[0]];
    traj.times
        .iter()
        .zip(&traj.states)
        .zip(&traj.phi_unwrapped)
        .map(|((t, s), phi)| {
            let e = closed_form_constant(c, b, start, *t);
            (s.x - e[0]).abs().max((s.y - e[1]).abs()).max((phi - e[2]).abs())
        })
        .fold(0.0f64, f64::max)
}

fn trajectory_rows(traj: &Trajectory, h: &[f64], f: Option<&[f64]>) -> (Vec<&'static str>, Vec<Vec<f64>>) {
    let mut header = vec!["t", "x", "y", "phi", "H"];
    if f.is_some() {
        header.push("F");
    }
    header.extend(["x_torus", "y_torus", "phi_unwrapped"]);
    let torus = traj.torus_positions();
    let rows = (0..traj.len())
        .map(|i| {
            let s = &traj.states[i];
            let mut row = vec![traj.times[i], s.x, s.y, s.phi, h[i]];
            if let Some(f) = f {
                row.push(f[i]);
            }
            row.extend([torus[i].0, torus[i].1, traj.phi_unwrapped[i]]);
            row
        })
        .collect();
    (header, rows)
}

fn run_trajectories(
    scenario: &Scenario,
    built: &Built,
    step: Option<&StepFlags>,
    drift_tol: f64,
    out: Option<&Path>,
    plot_data: bool,
) -> Result<Vec<TrajectoryOutcome>, CliError> {
    if scenario.trajectories.is_empty() {
        return Err(CliError::Input("scenario has no `trajectories`".into()));
    }
    let system = require_system(built)?;
    let constants = constant_coefficients(system, &built.grid);
    let results: Vec<Result<TrajectoryOutcome, CliError>> = scenario
        .trajectories
        .par_iter()
        .map(|spec| run_one(spec, built, system, step, drift_tol, constants, out, plot_data))
        .collect();
    results.into_iter().collect()
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    spec: &TrajectorySpec,
    built: &Built,
    system: &MagneticSystem,
    step: Option<&StepFlags>,
    drift_tol: f64,
    constants: Option<(f64, f64)>,
    out: Option<&Path>,
    plot_data: bool,
) -> Result<TrajectoryOutcome, CliError> {
    let mut opts = IntegrateOptions::default();
    if let Some(s) = spec.step {
        opts.step = s.control();
    }
    if let Some(flags) = step {
        if let Some(dt) = flags.dt {
            opts = IntegrateOptions { step: magtorus::StepControl::Fixed { dt }, ..opts };
        }
        if let Some(atol) = flags.adaptive {
            opts = IntegrateOptions { step: magtorus::StepControl::Adaptive { atol }, ..opts };
        }
    }
    if let Some(dt) = spec.output_interval {
        opts.output_interval = Some(dt);
    }
    let [x, y, phi] = spec.start;
    let mut traj = integrate(system, magtorus::PhaseState::new(x, y, phi), spec.t_end, &opts)?;
    let h_obs = Observable::energy(system);
    let mut observables = vec![h_obs.clone()];
    if let Some(a) = &built.ansatz {
        observables.push(a.first_integral());
    }
    for o in &observables {
        traj.record(o);
    }
    let drift = monitor(&traj, &observables);
    let h = traj.observable("H").expect("recorded").to_vec();
    let f = traj.observable("F").map(|v| v.to_vec());

    let mut file = None;
    if let Some(dir) = out {
        let stem = file_stem(&spec.name);
        let (header, rows) = trajectory_rows(&traj, &h, f.as_deref());
        let name = format!("{stem}.csv");
        write_atomic(&dir.join(&name), &csv(&header, &rows))?;
        if plot_data {
            write_atomic(&dir.join(format!("{stem}.dat")), &columns(&header, &rows))?;
        }
        file = Some(name);
    }
    let last = traj.last();
    let t_last = *traj.times.last().expect("non-empty");
    let passed = traj.is_complete() && drift.iter().all(|d| d.relative_drift < drift_tol);
    Ok(TrajectoryOutcome {
        name: spec.name.clone(),
        file,
        samples: traj.len(),
        steps: traj.steps,
        rejected_steps: traj.rejected_steps,
        termination: traj.termination.clone(),
        last: [t_last, last.x, last.y, last.phi],
        closed_form_error: constants.map(|(c, b)| closed_form_error(&traj, c, b)),
        drift,
        passed,
    })
}

pub fn simulate(path: &Path, flags: &CommonFlags, step: &StepFlags) -> Result<bool, CliError> {
    let scenario = Scenario::load(path)?;
    let built = scenario.build(flags.seed, flags.grid()?)?;
    for v in [step.dt, step.adaptive].into_iter().flatten() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Input(format!("step control must be positive, got {v}")));
        }
    }
    let tol = flags.tol.unwrap_or(scenario.tolerances.drift);
    let dir = flags.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let trajectories = run_trajectories(&scenario, &built, Some(step), tol, Some(&dir), flags.plot_data)?;
    let passed = trajectories.iter().all(|t| t.passed);
    let report = RunReport {
        command: "simulate",
        scenario: scenario.name.clone(),
        description: scenario.description.clone(),
        schema_version: scenario.schema_version,
        degree: built.ansatz.as_ref().map(Ansatz::degree),
        grid: [built.grid.nx, built.grid.ny],
        tolerance: tol,
        checks: Vec::new(),
        trajectories,
        passed,
        timings_s: None,
    };
    emit(&to_json(&report), flags.out.as_deref(), "report.json")?;
    Ok(passed)
}

pub struct AssembleArgs {
    pub scenario: Option<PathBuf>,
    pub at: Option<Vec<f64>>,
    pub degree: Option<usize>,
    pub geodesic: Option<Vec<String>>,
    pub sweep: bool,
    pub distinct_tol: Option<f64>,
    pub common: CommonFlags,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Serialize)]
struct SpectrumOut {
    /// `[re, im]` pairs sorted by real then imaginary part.
    eigenvalues: Vec<[f64; 2]>,
    infinite_eigenvalues: usize,
    classification: Classification,
    diagnostics: SpectrumDiagnostics,
}

impl From<SpectrumReport> for SpectrumOut {
    fn from(r: SpectrumReport) -> Self {
        Self {
            eigenvalues: r.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            infinite_eigenvalues: r.infinite_count,
            classification: r.classification,
            diagnostics: r.diagnostics,
        }
    }
}

#[derive(Debug, Serialize)]
struct GeodesicOut {
    kind: &'static str,
    n: usize,
    a: Vec<f64>,
    matrix: Vec<Vec<f64>>,
    spectrum: SpectrumOut,
}

#[derive(Debug, Serialize)]
struct SystemOut {
    kind: &'static str,
    degree: usize,
    state: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    spectrum: SpectrumOut,
}

#[derive(Debug, Serialize)]
struct SweepPoint {
    point: [f64; 2],
    state: Vec<f64>,
    eigenvalues: Vec<[f64; 2]>,
    class: Classification,
}

#[derive(Debug, Serialize)]
struct SweepOut {
    kind: &'static str,
    scenario: String,
    degree: usize,
    grid: [usize; 2],
    counts: BTreeMap<&'static str, usize>,
    points: Vec<SweepPoint>,
}

fn parse_geodesic(tokens: &[String]) -> Result<(usize, Vec<f64>), CliError> {
    let mut n = None;
    let mut a = None;
    for t in tokens {
        let (key, value) = t
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("--geodesic expects key=value, got `{t}`")))?;
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(|e| CliError::Input(format!("n: {e}")))?),
            "a" => {
                let vals = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Input(format!("a: {e}")))?;
                a = Some(vals);
            }
            other => return Err(CliError::Input(format!("--geodesic: unknown key `{other}`"))),
        }
    }
    match (n, a) {
        (Some(n), Some(a)) => Ok((n, a)),
        _ => Err(CliError::Input("--geodesic needs n=N and a=A0,..,AN".into())),
    }
}

fn state_at(ansatz: &Ansatz, x: f64, y: f64) -> Vec<f64> {
    let n = ansatz.degree();
    let mut v = vec![ansatz.lambda().eval(x, y)];
    v.extend((0..n).map(|k| ansatz.u(k).eval(x, y)));
    v.extend((1..n).map(|k| ansatz.v(k).eval(x, y)));
    v
}

pub fn assemble(args: AssembleArgs) -> Result<bool, CliError> {
    let mut opts = SpectrumOptions::default();
    if let Some(t) = args.distinct_tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Input(format!("--distinct-tol must be positive, got {t}")));
        }
        opts.distinct_tol = t;
    }
    let out = args.common.out.as_deref();

    if let Some(tokens) = &args.geodesic {
        let (n, a) = parse_geodesic(tokens)?;
        let m = geodesic_matrix(n, &a)?;
        let report = GeodesicOut {
            kind: "geodesic",
            n,
            a,
            matrix: rows(&m),
            spectrum: matrix_spectrum(&m, &opts).into(),
        };
        emit(&to_json(&report), out, "assemble.json")?;
        return Ok(true);
    }

    let scenario = match &args.scenario {
        Some(p) => Some(Scenario::load(p)?),
        None => None,
    };

    if args.sweep {
        let scenario = scenario.ok_or_else(|| CliError::Input("--sweep needs a scenario".into()))?;
        let built = scenario.build(args.common.seed, args.common.grid()?)?;
        let ansatz = require_ansatz(&built)?;
        let points: Vec<(f64, f64)> = built.grid.points(built.geometry).collect();
        let results: Vec<Result<SweepPoint, CliError>> = points
            .par_iter()
            .map(|&(x, y)| {
                let state = state_at(ansatz, x, y);
                let m = assemble_at(&StateVector::new(ansatz.degree(), state.clone())?)?;
                let s = spectrum(&m, &opts);
                Ok(SweepPoint {
                    point: [x, y],
                    state,
                    eigenvalues: s.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
                    class: s.classification,
                })
            })
            .collect();
        let points = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        let mut counts = BTreeMap::new();
        for p in &points {
            *counts.entry(p.class.as_str()).or_insert(0) += 1;
        }
        let report = SweepOut {
            kind: "sweep",
            scenario: scenario.name.clone(),
            degree: ansatz.degree(),
            grid: [built.grid.nx, built.grid.ny],
            counts,
            points,
        };
        emit(&to_json(&report), out, "sweep.json")?;
        return Ok(true);
    }

    let degree = args
        .degree
        .or_else(|| scenario.as_ref().and_then(Scenario::degree))
        .ok_or_else(|| CliError::Input("give --degree, a scenario with a degree, or --geodesic".into()))?;
    let state = args
        .at
        .clone()
        .or_else(|| scenario.as_ref().and_then(|s| s.at.clone()))
        .ok_or_else(|| CliError::Input("give the state with --at or `at` in the scenario".into()))?;
    let u = StateVector::new(degree, state)?;
    let m = assemble_at(&u)?;
    let report = SystemOut {
        kind: "system",
        degree,
        state: u.values().to_vec(),
        a: rows(&m.a),
        b: rows(&m.b),
        spectrum: spectrum(&m, &opts).into(),
    };
    emit(&to_json(&report), out, "assemble.json")?;
    Ok(true)
}
