//! Magnetic geodesic flow on the energy level `H = 1/2`.
//!
//! In conformal coordinates `ds² = Λ(dx² + dy²)` the momenta on the energy
//! level are `p = √Λ (cos φ, sin φ)`, and the flow reduces to three ODEs in
//! `(x, y, φ)`. The same flow is also available in cotangent form
//! `(x, y, p₁, p₂)` driven by the magnetic Poisson bracket, so the two can be
//! integrated side by side.
//!
//! Coordinates are kept on the universal cover: `x`, `y` are never wrapped,
//! while `φ` is reported in `[0, 2π)` and unwrapped internally.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::fields::{Field, SamplingGrid, ScalarMap, TorusGeometry};
use crate::{check_lambda, Error, Result};

/// Conformal factor `Λ` and magnetic field `Ω` on the torus.
#[derive(Clone)]
pub struct MagneticSystem {
    lambda: Field,
    omega: Arc<dyn ScalarMap>,
    geometry: TorusGeometry,
}

impl fmt::Debug for MagneticSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MagneticSystem")
            .field("lambda", &self.lambda)
            .field("geometry", &self.geometry)
            .finish_non_exhaustive()
    }
}

impl MagneticSystem {
    /// Fails when `Λ` drops below [`crate::LAMBDA_FLOOR`] on the default grid.
    pub fn new(lambda: Field, omega: Arc<dyn ScalarMap>) -> Result<Self> {
        let geometry = lambda.geometry();
        let grid = SamplingGrid::default();
        for (x, y) in grid.points(geometry) {
            check_lambda(lambda.eval(x, y), x, y)?;
        }
        Ok(Self {
            lambda,
            omega,
            geometry,
        })
    }

    pub fn with_field(lambda: Field, omega: Field) -> Result<Self> {
        Self::new(lambda, Arc::new(omega))
    }

    pub fn lambda(&self) -> &Field {
        &self.lambda
    }

    pub fn omega(&self) -> &dyn ScalarMap {
        self.omega.as_ref()
    }

    pub fn geometry(&self) -> TorusGeometry {
        self.geometry
    }
}

/// Point of the unit-energy level: position and momentum angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

impl PhaseState {
    /// Wraps `phi` into `[0, 2π)`.
    pub fn new(x: f64, y: f64, phi: f64) -> Self {
        Self {
            x,
            y,
            phi: wrap_angle(phi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CotangentState {
    pub x: f64,
    pub y: f64,
    pub p1: f64,
    pub p2: f64,
}

impl CotangentState {
    /// Lift of a phase state: `p = √Λ (cos φ, sin φ)`.
    pub fn from_phase(system: &MagneticSystem, s: &PhaseState) -> Result<Self> {
        let lam = system.lambda.eval(s.x, s.y);
        check_lambda(lam, s.x, s.y)?;
        let r = lam.sqrt();
        Ok(Self {
            x: s.x,
            y: s.y,
            p1: r * s.phi.cos(),
            p2: r * s.phi.sin(),
        })
    }

    pub fn to_phase(&self) -> PhaseState {
        PhaseState::new(self.x, self.y, self.p2.atan2(self.p1))
    }
}

pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `H = (p₁² + p₂²) / (2Λ)`.
pub fn energy(system: &MagneticSystem, s: &CotangentState) -> f64 {
    (s.p1 * s.p1 + s.p2 * s.p2) / (2.0 * system.lambda.eval(s.x, s.y))
}

/// Right-hand side `(ẋ, ẏ, φ̇)` of the flow on the energy level.
pub fn flow_rhs(system: &MagneticSystem, s: &PhaseState) -> Result<[f64; 3]> {
    phase_rhs(system, s.x, s.y, s.phi)
}

fn phase_rhs(system: &MagneticSystem, x: f64, y: f64, phi: f64) -> Result<[f64; 3]> {
    let lam = system.lambda.jet(x, y);
    check_lambda(lam.v, x, y)?;
    let omega = system.omega.value(x, y);
    let root = lam.v.sqrt();
    let (sin, cos) = phi.sin_cos();
    let w = 2.0 * lam.v * root;
    Ok([
        cos / root,
        sin / root,
        lam.dy * cos / w - lam.dx * sin / w - omega / lam.v,
    ])
}

/// Right-hand side `(ẋ, ẏ, ṗ₁, ṗ₂)` of the bracket formulation:
/// `ẋⁱ = ∂H/∂pᵢ`, `ṗ₁ = -∂H/∂x + Ω ∂H/∂p₂`, `ṗ₂ = -∂H/∂y - Ω ∂H/∂p₁`.
pub fn cotangent_rhs(system: &MagneticSystem, s: &CotangentState) -> Result<[f64; 4]> {
    let lam = system.lambda.jet(s.x, s.y);
    check_lambda(lam.v, s.x, s.y)?;
    let omega = system.omega.value(s.x, s.y);
    let p_sq = s.p1 * s.p1 + s.p2 * s.p2;
    let h_p1 = s.p1 / lam.v;
    let h_p2 = s.p2 / lam.v;
    let h_x = -p_sq * lam.dx / (2.0 * lam.v * lam.v);
    let h_y = -p_sq * lam.dy / (2.0 * lam.v * lam.v);
    Ok([h_p1, h_p2, -h_x + omega * h_p2, -h_y - omega * h_p1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepControl {
    /// Classical RK4 with (at most) this step; steps are shortened so that
    /// output times are hit exactly.
    Fixed { dt: f64 },
    /// RK4 with step doubling; each accepted step has estimated local error
    /// at most `atol`.
    Adaptive { atol: f64 },
}

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_ATOL: f64 = 1e-10;
pub const DEFAULT_OUTPUT_INTERVAL: f64 = 1e-2;

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Fixed { dt: DEFAULT_DT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub step: StepControl,
    /// Spacing of output samples; `None` records only the end points.
    pub output_interval: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            step: StepControl::default(),
            output_interval: Some(DEFAULT_OUTPUT_INTERVAL),
        }
    }
}

impl IntegrateOptions {
    pub fn fixed(dt: f64) -> Self {
        Self {
            step: StepControl::Fixed { dt },
            ..Self::default()
        }
    }

    pub fn adaptive(atol: f64) -> Self {
        Self {
            step: StepControl::Adaptive { atol },
            ..Self::default()
        }
    }

    pub fn endpoints_only(mut self) -> Self {
        self.output_interval = None;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.step {
            StepControl::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::Argument(format!("step size must be positive, got {dt}")))
            }
            StepControl::Adaptive { atol } if !(atol > 0.0 && atol.is_finite()) => {
                return Err(Error::Argument(format!("tolerance must be positive, got {atol}")))
            }
            _ => {}
        }
        if let Some(dt) = self.output_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Argument(format!(
                    "output interval must be positive, got {dt}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Aborted { t: f64, reason: String },
}

/// Sampled solution. `states[i].phi` is wrapped; `phi_unwrapped[i]` is the
/// continuous angle. Positions are on the universal cover.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub phi_unwrapped: Vec<f64>,
    pub observables: Vec<(String, Vec<f64>)>,
    pub termination: Termination,
    pub steps: usize,
    pub rejected_steps: usize,
    geometry: TorusGeometry,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn is_complete(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// Positions reduced to the fundamental domain.
    pub fn torus_positions(&self) -> Vec<(f64, f64)> {
        self.states
            .iter()
            .map(|s| self.geometry.wrap(s.x, s.y))
            .collect()
    }

    /// Evaluate `obs` on every sample and store it under its name.
    pub fn record(&mut self, obs: &Observable) {
        let values = self.states.iter().map(|s| obs.eval(s)).collect();
        self.observables.retain(|(n, _)| n != &obs.name);
        self.observables.push((obs.name.clone(), values));
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

/// Named function of a phase state.
#[derive(Clone)]
pub struct Observable {
    pub name: String,
    eval: Arc<dyn Fn(&PhaseState) -> f64 + Send + Sync>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable").field("name", &self.name).finish()
    }
}

impl Observable {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&PhaseState) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(f),
        }
    }

    pub fn eval(&self, s: &PhaseState) -> f64 {
        (self.eval)(s)
    }

    /// `H` evaluated through the momentum parameterization.
    pub fn energy(system: &MagneticSystem) -> Self {
        let lambda = system.lambda.clone();
        Self::new("H", move |s| {
            let lam = lambda.eval(s.x, s.y);
            let r = lam.sqrt();
            let (p1, p2) = (r * s.phi.cos(), r * s.phi.sin());
            (p1 * p1 + p2 * p2) / (2.0 * lam)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftStats {
    pub name: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    /// `max_abs_drift / max_t |obs(t)|` (zero for an identically zero observable).
    pub relative_drift: f64,
}

/// Drift of each observable along the trajectory, relative to its start value.
pub fn monitor(trajectory: &Trajectory, observables: &[Observable]) -> Vec<DriftStats> {
    observables
        .iter()
        .map(|obs| {
            let values: Vec<f64> = trajectory.states.iter().map(|s| obs.eval(s)).collect();
            drift_of(&obs.name, &values)
        })
        .collect()
}

pub fn drift_of(name: &str, values: &[f64]) -> DriftStats {
    let initial = values.first().copied().unwrap_or(0.0);
    let max_abs_drift = values
        .iter()
        .fold(0.0f64, |m, v| m.max((v - initial).abs()));
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    DriftStats {
        name: name.to_string(),
        initial,
        max_abs_drift,
        relative_drift: if scale > 0.0 { max_abs_drift / scale } else { 0.0 },
    }
}

fn rk4_step<const D: usize, F>(rhs: &F, y: &[f64; D], h: f64) -> Result<[f64; D]>
where
    F: Fn(&[f64; D]) -> Result<[f64; D]>,
{
    let shifted = |k: &[f64; D], c: f64| -> [f64; D] { std::array::from_fn(|i| y[i] + c * k[i]) };
    let k1 = rhs(y)?;
    let k2 = rhs(&shifted(&k1, 0.5 * h))?;
    let k3 = rhs(&shifted(&k2, 0.5 * h))?;
    let k4 = rhs(&shifted(&k3, h))?;
    Ok(std::array::from_fn(|i| {
        y[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
    }))
}

struct OdeRun<const D: usize> {
    times: Vec<f64>,
    states: Vec<[f64; D]>,
    abort: Option<(f64, String)>,
    steps: usize,
    rejected: usize,
}

fn output_times(t_end: f64, interval: Option<f64>) -> Vec<f64> {
    let span = t_end.abs();
    let sign = t_end.signum();
    let mut out = Vec::new();
    if let Some(dt) = interval {
        let mut k = 1usize;
        loop {
            let t = k as f64 * dt;
            if t >= span * (1.0 - 1e-12) {
                break;
            }
            out.push(sign * t);
            k += 1;
        }
    }
    out.push(t_end);
    out
}

/// Integrate an autonomous ODE from `t = 0` to `t_end` (either sign).
fn integrate_ode<const D: usize, F>(
    rhs: F,
    y0: [f64; D],
    t_end: f64,
    opts: &IntegrateOptions,
) -> OdeRun<D>
where
    F: Fn(&[f64; D]) -> Result<[f64; D]>,
{
    let mut run = OdeRun {
        times: vec![0.0],
        states: vec![y0],
        abort: None,
        steps: 0,
        rejected: 0,
    };
    let mut t = 0.0;
    let mut y = y0;
    let dir = t_end.signum();
    let mut h_ctrl = match opts.step {
        StepControl::Fixed { dt } => dt,
        StepControl::Adaptive { .. } => 1e-2,
    };
    if let Err(e) = rhs(&y) {
        run.abort = Some((0.0, e.to_string()));
        return run;
    }
    for t_out in output_times(t_end, opts.output_interval) {
        let seg = t_out - t;
        let result: Result<()> = (|| {
            match opts.step {
                StepControl::Fixed { dt } => {
                    let n = ((seg.abs() / dt) - 1e-9).ceil().max(1.0) as usize;
                    let h = seg / n as f64;
                    for _ in 0..n {
                        y = rk4_step(&rhs, &y, h)?;
                        run.steps += 1;
                    }
                }
                StepControl::Adaptive { atol } => {
                    let mut remaining = seg.abs();
                    while remaining > 1e-14 * (1.0 + t_out.abs()) {
                        let h = h_ctrl.min(remaining);
                        let full = rk4_step(&rhs, &y, dir * h)?;
                        let half = rk4_step(&rhs, &y, dir * 0.5 * h)?;
                        let two = rk4_step(&rhs, &half, dir * 0.5 * h)?;
                        let err = (0..D).fold(0.0f64, |m, i| m.max((two[i] - full[i]).abs()));
                        let factor = if err == 0.0 {
                            4.0
                        } else {
                            (0.9 * (atol / err).powf(0.2)).clamp(0.2, 4.0)
                        };
                        if err <= atol || h < 1e-12 {
                            y = std::array::from_fn(|i| two[i] + (two[i] - full[i]) / 15.0);
                            remaining -= h;
                            run.steps += 1;
                            if h == h_ctrl || factor < 1.0 {
                                h_ctrl = h * factor;
                            }
                        } else {
                            run.rejected += 1;
                            h_ctrl = h * factor;
                        }
                    }
                }
            }
            Ok(())
        })();
        match result {
            Ok(()) => {
                t = t_out;
                run.times.push(t);
                run.states.push(y);
            }
            Err(e) => {
                run.abort = Some((t, e.to_string()));
                break;
            }
        }
    }
    run
}

fn check_horizon(t_end: f64) -> Result<()> {
    if t_end > 0.0 && t_end.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("t_end must be positive, got {t_end}")))
    }
}

fn termination(abort: Option<(f64, String)>) -> Termination {
    match abort {
        None => Termination::Completed,
        Some((t, reason)) => Termination::Aborted { t, reason },
    }
}

/// Integrate the `(x, y, φ)` flow from `state0` over `[0, t_end]`.
///
/// When `Λ` falls below the floor along the path the returned trajectory is
/// truncated and carries [`Termination::Aborted`].
pub fn integrate(
    system: &MagneticSystem,
    state0: PhaseState,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    check_horizon(t_end)?;
    opts.validate()?;
    let run = integrate_ode(
        |s: &[f64; 3]| phase_rhs(system, s[0], s[1], s[2]),
        [state0.x, state0.y, state0.phi],
        t_end,
        opts,
    );
    Ok(Trajectory {
        times: run.times,
        states: run
            .states
            .iter()
            .map(|s| PhaseState::new(s[0], s[1], s[2]))
            .collect(),
        phi_unwrapped: run.states.iter().map(|s| s[2]).collect(),
        observables: Vec::new(),
        termination: termination(run.abort),
        steps: run.steps,
        rejected_steps: run.rejected,
        geometry: system.geometry,
    })
}

/// End state after `duration` (negative runs the flow backwards).
/// Returns the state with unwrapped angle.
pub fn propagate(
    system: &MagneticSystem,
    state: [f64; 3],
    duration: f64,
    step: StepControl,
) -> Result<[f64; 3]> {
    let opts = IntegrateOptions {
        step,
        output_interval: None,
    };
    opts.validate()?;
    let run = integrate_ode(
        |s: &[f64; 3]| phase_rhs(system, s[0], s[1], s[2]),
        state,
        duration,
        &opts,
    );
    match run.abort {
        None => Ok(*run.states.last().expect("non-empty")),
        Some((_, reason)) => Err(Error::Domain(reason)),
    }
}

/// Cotangent-form trajectory sampled at the same output times as
/// [`integrate`].
#[derive(Debug, Clone)]
pub struct CotangentTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CotangentState>,
    pub termination: Termination,
}

pub fn integrate_cotangent(
    system: &MagneticSystem,
    state0: CotangentState,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<CotangentTrajectory> {
    check_horizon(t_end)?;
    opts.validate()?;
    let run = integrate_ode(
        |s: &[f64; 4]| {
            cotangent_rhs(
                system,
                &CotangentState {
                    x: s[0],
                    y: s[1],
                    p1: s[2],
                    p2: s[3],
                },
            )
        },
        [state0.x, state0.y, state0.p1, state0.p2],
        t_end,
        opts,
    );
    Ok(CotangentTrajectory {
        times: run.times,
        states: run
            .states
            .iter()
            .map(|s| CotangentState {
                x: s[0],
                y: s[1],
                p1: s[2],
                p2: s[3],
            })
            .collect(),
        termination: termination(run.abort),
    })
}

/// Relative energy drift above which the cotangent run is flagged.
pub const ENERGY_LEVEL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    /// Largest of the position and angle discrepancies.
    pub max_discrepancy: f64,
    pub max_position_discrepancy: f64,
    pub max_angle_discrepancy: f64,
    /// Largest `|H - 1/2| / (1/2)` along the cotangent run.
    pub max_energy_drift: f64,
    pub off_energy_level: bool,
    pub samples: usize,
}

/// Integrate both formulations from matched initial data and compare them
/// sample by sample after mapping `(p₁, p₂) → φ`.
pub fn crosscheck_formulations(
    system: &MagneticSystem,
    state0: PhaseState,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<CrossCheck> {
    let phase = integrate(system, state0, t_end, opts)?;
    let cot0 = CotangentState::from_phase(system, &state0)?;
    let cot = integrate_cotangent(system, cot0, t_end, opts)?;
    if let Termination::Aborted { reason, .. } = &phase.termination {
        return Err(Error::Domain(reason.clone()));
    }
    if let Termination::Aborted { reason, .. } = &cot.termination {
        return Err(Error::Domain(reason.clone()));
    }
    let mut out = CrossCheck {
        max_discrepancy: 0.0,
        max_position_discrepancy: 0.0,
        max_angle_discrepancy: 0.0,
        max_energy_drift: 0.0,
        off_energy_level: false,
        samples: phase.len().min(cot.times.len()),
    };
    for (p, c) in phase.states.iter().zip(&cot.states) {
        let pos = (p.x - c.x).abs().max((p.y - c.y).abs());
        let dphi = c.p2.atan2(c.p1) - p.phi;
        let ang = (dphi.sin()).atan2(dphi.cos()).abs();
        out.max_position_discrepancy = out.max_position_discrepancy.max(pos);
        out.max_angle_discrepancy = out.max_angle_discrepancy.max(ang);
        out.max_energy_drift = out
            .max_energy_drift
            .max((energy(system, c) - 0.5).abs() / 0.5);
    }
    out.max_discrepancy = out.max_position_discrepancy.max(out.max_angle_discrepancy);
    out.off_energy_level = out.max_energy_drift > ENERGY_LEVEL_TOL;
    Ok(out)
}

/// Exact solution for constant `Λ ≡ c` and `Ω ≡ b`: circular motion with
/// angular rate `-b/c` and speed `1/√c` (straight lines when `b = 0`).
/// Returns `(x, y, φ)` with `φ` unwrapped.
pub fn closed_form_constant(c: f64, b: f64, state0: [f64; 3], t: f64) -> [f64; 3] {
    let speed = 1.0 / c.sqrt();
    let rate = -b / c;
    let [x0, y0, phi0] = state0;
    if rate == 0.0 {
        return [
            x0 + speed * t * phi0.cos(),
            y0 + speed * t * phi0.sin(),
            phi0,
        ];
    }
    let phi = phi0 + rate * t;
    let r = speed / rate;
    [
        x0 + r * (phi.sin() - phi0.sin()),
        y0 - r * (phi.cos() - phi0.cos()),
        phi,
    ]
}
