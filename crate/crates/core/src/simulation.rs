//! Fixed-step simulation of the ACM under the open-loop scenario battery.
//!
//! Coupled and decoupled runs of one scenario share the step size, the
//! initial state and the forcing profiles; only the model differs.

use crate::dynamics::{AcmModel, AcmParams, ExternalWrench, ModelMode};
use crate::error::{AcmError, Result};
use crate::kinematics::{
    idx, rotation_vector, unwrap_rotation_vector, GeneralizedState, Vector6, Vector8,
};
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::time::Instant;

/// Default integration step [s].
pub const DEFAULT_DT: f64 = 1e-4;

/// Steps excluded from timing statistics.
pub const WARMUP_STEPS: usize = 10;

/// Generalized actuation `tau(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WrenchProfile {
    Zero,
    Constant {
        tau: [f64; 8],
    },
    /// `tau_kappa = a0 sin(w0 t + p0)`, `tau_psi = a1 sin(w1 t + p1)`; `w` in rad/s.
    SinusoidArm {
        amplitude: [f64; 2],
        omega: [f64; 2],
        phase: [f64; 2],
    },
    /// Rotating planar force on the base whose phase pattern switches at `switch_time`:
    /// `(a sin(f t), -a cos(f t))` before, `(a cos(f t), a sin(f t))` after.
    PiecewiseRotating {
        amplitude: f64,
        frequency: f64,
        switch_time: f64,
    },
    /// Piecewise-linear table, held constant outside its time span.
    CustomTable {
        times: Vec<f64>,
        values: Vec<[f64; 8]>,
    },
}

impl WrenchProfile {
    pub fn eval(&self, t: f64) -> Vector8 {
        match self {
            WrenchProfile::Zero => Vector8::zeros(),
            WrenchProfile::Constant { tau } => Vector8::from_column_slice(tau),
            WrenchProfile::SinusoidArm {
                amplitude,
                omega,
                phase,
            } => {
                let mut v = Vector8::zeros();
                v[idx::KAPPA] = amplitude[0] * (omega[0] * t + phase[0]).sin();
                v[idx::PSI_A] = amplitude[1] * (omega[1] * t + phase[1]).sin();
                v
            }
            WrenchProfile::PiecewiseRotating {
                amplitude,
                frequency,
                switch_time,
            } => {
                let (s, c) = (frequency * t).sin_cos();
                let mut v = Vector8::zeros();
                if t <= *switch_time {
                    v[0] = amplitude * s;
                    v[1] = -amplitude * c;
                } else {
                    v[0] = amplitude * c;
                    v[1] = amplitude * s;
                }
                v
            }
            WrenchProfile::CustomTable { times, values } => {
                Vector8::from_column_slice(&interp_table(times, values, t))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|v| v.is_finite());
        let ok = match self {
            WrenchProfile::Zero => true,
            WrenchProfile::Constant { tau } => finite(tau),
            WrenchProfile::SinusoidArm {
                amplitude,
                omega,
                phase,
            } => finite(amplitude) && finite(omega) && finite(phase),
            WrenchProfile::PiecewiseRotating {
                amplitude,
                frequency,
                switch_time,
            } => finite(&[*amplitude, *frequency, *switch_time]),
            WrenchProfile::CustomTable { times, values } => {
                validate_table(times, values.iter().map(|v| &v[..]))?;
                true
            }
        };
        if ok {
            Ok(())
        } else {
            Err(AcmError::config("actuation", "non-finite parameter"))
        }
    }
}

/// External tip wrench `F_e(t)` in the inertial frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TipWrenchProfile {
    Zero,
    Constant {
        wrench: [f64; 6],
    },
    /// Linear chirp on the force components plus a constant force offset:
    /// `F_i = a_i sin(2 pi (f0 t + (f1 - f0) t^2 / (2 T)) + p_i) + offset_i`.
    ChirpTip {
        amplitude: [f64; 3],
        phase: [f64; 3],
        offset: [f64; 3],
        f0: f64,
        f1: f64,
        sweep_time: f64,
    },
    CustomTable {
        times: Vec<f64>,
        values: Vec<[f64; 6]>,
    },
}

impl TipWrenchProfile {
    pub fn eval(&self, t: f64) -> ExternalWrench {
        match self {
            TipWrenchProfile::Zero => ExternalWrench::zero(),
            TipWrenchProfile::Constant { wrench } => {
                ExternalWrench(Vector6::from_column_slice(wrench))
            }
            TipWrenchProfile::ChirpTip {
                amplitude,
                phase,
                offset,
                f0,
                f1,
                sweep_time,
            } => {
                let arg = 2.0 * PI * (f0 * t + (f1 - f0) / (2.0 * sweep_time) * t * t);
                let mut w = Vector6::zeros();
                for i in 0..3 {
                    w[i] = amplitude[i] * (arg + phase[i]).sin() + offset[i];
                }
                ExternalWrench(w)
            }
            TipWrenchProfile::CustomTable { times, values } => {
                ExternalWrench(Vector6::from_column_slice(&interp_table(times, values, t)))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TipWrenchProfile::ChirpTip { sweep_time, .. } if !(*sweep_time > 0.0) => {
                Err(AcmError::config("external.sweep_time", "must be > 0"))
            }
            TipWrenchProfile::CustomTable { times, values } => {
                validate_table(times, values.iter().map(|v| &v[..]))
            }
            _ => Ok(()),
        }
    }
}

fn validate_table<'a>(times: &[f64], values: impl ExactSizeIterator<Item = &'a [f64]>) -> Result<()> {
    if times.is_empty() || times.len() != values.len() {
        return Err(AcmError::config("custom_table", "times and values must be non-empty and equally long"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(AcmError::config("custom_table.times", "must be strictly increasing"));
    }
    Ok(())
}

fn interp_table<const N: usize>(times: &[f64], values: &[[f64; N]], t: f64) -> [f64; N] {
    if t <= times[0] {
        return values[0];
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return values[last];
    }
    let k = times.partition_point(|&x| x <= t) - 1;
    let a = (t - times[k]) / (times[k + 1] - times[k]);
    let mut out = [0.0; N];
    for (i, o) in out.iter_mut().enumerate() {
        *o = values[k][i] + a * (values[k + 1][i] - values[k][i]);
    }
    out
}

/// Which model(s) a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    Coupled,
    Decoupled,
    #[default]
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<ModelMode> {
        match self {
            ModeSelection::Coupled => vec![ModelMode::Coupled],
            ModeSelection::Decoupled => vec![ModelMode::Decoupled],
            ModeSelection::Both => vec![ModelMode::Coupled, ModelMode::Decoupled],
        }
    }
}

impl std::str::FromStr for ModeSelection {
    type Err = AcmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(Self::Coupled),
            "decoupled" => Ok(Self::Decoupled),
            "both" => Ok(Self::Both),
            _ => Err(AcmError::config("model", format!("expected coupled|decoupled|both, got `{s}`"))),
        }
    }
}

/// One open-loop experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub q0: [f64; 8],
    #[serde(default)]
    pub qdot0: [f64; 8],
    pub duration: f64,
    pub dt: f64,
    pub actuation: WrenchProfile,
    pub external: TipWrenchProfile,
    #[serde(default)]
    pub model_mode: ModeSelection,
}

/// Names accepted by [`builtin_scenario`].
pub const BUILTIN_SCENARIOS: [&str; 6] = ["testA", "testB", "testC", "testD", "testE_bending", "sweep_wrench"];

/// Shared initial configuration of the open-loop tests.
pub fn open_loop_initial_q() -> [f64; 8] {
    [0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.1, 0.0]
}

/// Build one of the named open-loop scenarios.
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let base = |name: &str, duration: f64, actuation, external| Scenario {
        name: name.to_string(),
        q0: open_loop_initial_q(),
        qdot0: [0.0; 8],
        duration,
        dt: DEFAULT_DT,
        actuation,
        external,
        model_mode: ModeSelection::Both,
    };
    let sc = match name {
        "testA" => base(
            name,
            1.0,
            WrenchProfile::Constant {
                tau: [100.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            },
            TipWrenchProfile::Zero,
        ),
        "testB" => base(name, 1.0, WrenchProfile::Zero, TipWrenchProfile::Zero),
        "testC" => base(
            name,
            1.0,
            WrenchProfile::SinusoidArm {
                amplitude: [0.1, 0.1],
                omega: [20.0, 20.0],
                phase: [PI / 4.0, PI / 2.0],
            },
            TipWrenchProfile::Zero,
        ),
        "testD" => base(
            name,
            1.0,
            WrenchProfile::Zero,
            TipWrenchProfile::ChirpTip {
                amplitude: [10.0, 10.0, 0.0],
                phase: [PI / 4.0, 0.0, 0.0],
                offset: [0.0, 0.0, 25.0],
                f0: 1.0,
                f1: 1.0,
                sweep_time: 10.0,
            },
        ),
        "testE_bending" => {
            let mut sc = base(name, 1.0, WrenchProfile::Zero, TipWrenchProfile::Zero);
            sc.q0[idx::KAPPA] = 1.0;
            sc
        }
        "sweep_wrench" => base(
            name,
            5.0,
            WrenchProfile::PiecewiseRotating {
                amplitude: 100.0,
                frequency: 10.0,
                switch_time: 2.5,
            },
            TipWrenchProfile::Zero,
        ),
        _ => {
            return Err(AcmError::UnknownScenario {
                name: name.to_string(),
                valid: BUILTIN_SCENARIOS.join(", "),
            })
        }
    };
    Ok(sc)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(AcmError::config("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(AcmError::config("duration", format!("must be >= 0, got {}", self.duration)));
        }
        self.actuation.validate()?;
        self.external.validate()?;
        self.initial_state().map(|_| ())
    }

    pub fn initial_state(&self) -> Result<GeneralizedState> {
        GeneralizedState::new(
            Vector8::from_column_slice(&self.q0),
            Vector8::from_column_slice(&self.qdot0),
        )
    }

    /// Number of integration steps (`round(duration / dt)`).
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Time history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub scenario: String,
    pub mode: ModelMode,
    pub times: Vec<f64>,
    pub states: Vec<GeneralizedState>,
    pub tip_positions: Vec<Vector3<f64>>,
    /// Tip orientation relative to the straight-hover tip frame, as a rotation
    /// vector continued across the `pi` branch between samples.
    pub tip_rotvecs: Vec<Vector3<f64>>,
    pub kinetic: Vec<f64>,
    pub potential: Vec<f64>,
    /// Wall time of the step that produced each record; 0 for the initial record.
    pub step_wall_s: Vec<f64>,
}

impl SimTrace {
    fn with_capacity(scenario: &str, mode: ModelMode, n: usize) -> Self {
        Self {
            scenario: scenario.to_string(),
            mode,
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            tip_positions: Vec::with_capacity(n),
            tip_rotvecs: Vec::with_capacity(n),
            kinetic: Vec::with_capacity(n),
            potential: Vec::with_capacity(n),
            step_wall_s: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn total_energy(&self) -> Vec<f64> {
        self.kinetic
            .iter()
            .zip(&self.potential)
            .map(|(k, u)| k + u)
            .collect()
    }

    pub fn last_state(&self) -> &GeneralizedState {
        self.states.last().expect("trace has at least one record")
    }

    fn record(&mut self, model: &AcmModel, t: f64, st: &GeneralizedState, wall: f64) -> Result<()> {
        let geometry = model.geometry();
        let tip = geometry.tip_pose(st)?;
        let (k, u) = model.energies(st, self.mode)?;
        // orientation relative to the straight-hover tip frame, continued along the trace
        let rv = rotation_vector(&(tip.rotation * geometry.mount.rotation.transpose()));
        let rv = match self.tip_rotvecs.last() {
            Some(prev) => unwrap_rotation_vector(&rv, prev),
            None => rv,
        };
        self.times.push(t);
        self.states.push(*st);
        self.tip_positions.push(tip.position);
        self.tip_rotvecs.push(rv);
        self.kinetic.push(k);
        self.potential.push(u);
        self.step_wall_s.push(wall);
        Ok(())
    }

    /// Step wall times after the warm-up steps.
    pub fn timed_steps(&self) -> &[f64] {
        let skip = (1 + WARMUP_STEPS).min(self.step_wall_s.len());
        if self.step_wall_s.len() > skip {
            &self.step_wall_s[skip..]
        } else {
            &self.step_wall_s[1.min(self.step_wall_s.len())..]
        }
    }
}

/// CSV header of a trace file.
pub fn trace_csv_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=8).map(|i| format!("q{i}")));
    h.extend((1..=8).map(|i| format!("qd{i}")));
    for c in ["tipx", "tipy", "tipz", "tip_rotvec_x", "tip_rotvec_y", "tip_rotvec_z", "K", "U", "E_total", "step_wall_s"] {
        h.push(c.to_string());
    }
    h
}

/// Write a trace as CSV; floats use the shortest representation that parses back exactly.
pub fn write_trace_csv<W: Write>(trace: &SimTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_csv_header())?;
    let mut row: Vec<String> = Vec::with_capacity(27);
    for i in 0..trace.len() {
        row.clear();
        row.push(trace.times[i].to_string());
        row.extend(trace.states[i].q.iter().map(f64::to_string));
        row.extend(trace.states[i].qdot.iter().map(f64::to_string));
        row.extend(trace.tip_positions[i].iter().map(f64::to_string));
        row.extend(trace.tip_rotvecs[i].iter().map(f64::to_string));
        let (k, u) = (trace.kinetic[i], trace.potential[i]);
        row.push(k.to_string());
        row.push(u.to_string());
        row.push((k + u).to_string());
        row.push(trace.step_wall_s[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a trace CSV produced by [`write_trace_csv`].
pub fn read_trace_csv<R: Read>(input: R, scenario: &str, mode: ModelMode) -> Result<SimTrace> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != trace_csv_header() {
        return Err(AcmError::Parse(format!("unexpected trace header: {header:?}")));
    }
    let mut tr = SimTrace::with_capacity(scenario, mode, 0);
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| AcmError::Parse(format!("`{f}`: {e}"))))
            .collect::<Result<_>>()?;
        if v.len() != 27 {
            return Err(AcmError::Dimension { expected: 27, got: v.len() });
        }
        tr.times.push(v[0]);
        tr.states.push(GeneralizedState {
            q: Vector8::from_column_slice(&v[1..9]),
            qdot: Vector8::from_column_slice(&v[9..17]),
        });
        tr.tip_positions.push(Vector3::new(v[17], v[18], v[19]));
        tr.tip_rotvecs.push(Vector3::new(v[20], v[21], v[22]));
        tr.kinetic.push(v[23]);
        tr.potential.push(v[24]);
        tr.step_wall_s.push(v[26]);
    }
    Ok(tr)
}

/// One classical fourth-order Runge-Kutta step on `(q, qdot)` with forcing
/// evaluated at the stage times.
pub fn rk4_step<F>(
    model: &AcmModel,
    state: &GeneralizedState,
    t: f64,
    dt: f64,
    forcing: &F,
    mode: ModelMode,
) -> Result<GeneralizedState>
where
    F: Fn(f64) -> (Vector8, ExternalWrench),
{
    let deriv = |tt: f64, st: &GeneralizedState| -> Result<(Vector8, Vector8)> {
        let (tau, fe) = forcing(tt);
        let acc = model.forward_dynamics(st, &tau, &fe, mode)?;
        Ok((st.qdot, acc))
    };
    let shifted = |k: &(Vector8, Vector8), h: f64| GeneralizedState {
        q: state.q + k.0 * h,
        qdot: state.qdot + k.1 * h,
    };
    let k1 = deriv(t, state)?;
    let k2 = deriv(t + 0.5 * dt, &shifted(&k1, 0.5 * dt))?;
    let k3 = deriv(t + 0.5 * dt, &shifted(&k2, 0.5 * dt))?;
    let k4 = deriv(t + dt, &shifted(&k3, dt))?;
    let next = GeneralizedState {
        q: state.q + (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) * (dt / 6.0),
        qdot: state.qdot + (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) * (dt / 6.0),
    };
    if next.q.iter().chain(next.qdot.iter()).any(|v| !v.is_finite()) {
        return Err(AcmError::Blowup { time: t + dt, step: 0 });
    }
    Ok(next)
}

/// Largest accepted change of an angular coordinate within one step [rad].
pub const MAX_ANGLE_INCREMENT: f64 = 0.1;

/// Deepest step halving before a step is declared a blowup.
pub const MAX_SUBDIVISION_DEPTH: u32 = 16;

/// Advance by `dt` with RK4, halving the step recursively while an attempt fails
/// or turns an angle by more than [`MAX_ANGLE_INCREMENT`].
///
/// Near `kappa = 0` the bending-plane angle can whirl at rates of order
/// `|kappa_dot| / kappa`; away from that region every step is a single RK4 step.
/// Returns the new state and the number of RK4 steps taken.
pub fn advance<F>(
    model: &AcmModel,
    state: &GeneralizedState,
    t: f64,
    dt: f64,
    forcing: &F,
    mode: ModelMode,
) -> Result<(GeneralizedState, usize)>
where
    F: Fn(f64) -> (Vector8, ExternalWrench),
{
    advance_depth(model, state, t, dt, forcing, mode, 0)
}

fn advance_depth<F>(
    model: &AcmModel,
    state: &GeneralizedState,
    t: f64,
    dt: f64,
    forcing: &F,
    mode: ModelMode,
    depth: u32,
) -> Result<(GeneralizedState, usize)>
where
    F: Fn(f64) -> (Vector8, ExternalWrench),
{
    let attempt = rk4_step(model, state, t, dt, forcing, mode);
    let accepted = match &attempt {
        Ok(next) => (3..8)
            .filter(|&i| i != idx::KAPPA)
            .all(|i| (next.q[i] - state.q[i]).abs() <= MAX_ANGLE_INCREMENT),
        Err(_) => false,
    };
    if accepted || depth >= MAX_SUBDIVISION_DEPTH {
        return attempt.map(|s| (s, 1));
    }
    let h = 0.5 * dt;
    let (mid, n1) = advance_depth(model, state, t, h, forcing, mode, depth + 1)?;
    let (end, n2) = advance_depth(model, &mid, t + h, h, forcing, mode, depth + 1)?;
    Ok((end, n1 + n2))
}

/// Integrate a scenario with one model.
pub fn run_mode(scenario: &Scenario, model: &AcmModel, mode: ModelMode) -> Result<SimTrace> {
    Ok(run_modes(scenario, model, &[mode])?.remove(0))
}

/// Integrate a scenario with several models in lockstep, so that every mode sees
/// the same machine conditions when its step is timed.
pub fn run_modes(scenario: &Scenario, model: &AcmModel, modes: &[ModelMode]) -> Result<Vec<SimTrace>> {
    scenario.validate()?;
    let n = scenario.steps();
    let dt = scenario.dt;
    let init = scenario.initial_state()?;
    let mut traces = Vec::with_capacity(modes.len());
    let mut states = vec![init; modes.len()];
    for &mode in modes {
        let mut tr = SimTrace::with_capacity(&scenario.name, mode, n + 1);
        tr.record(model, 0.0, &init, 0.0)?;
        traces.push(tr);
    }
    let forcing = |tt: f64| (scenario.actuation.eval(tt), scenario.external.eval(tt));
    for k in 0..n {
        let t = k as f64 * dt;
        for (tr, st) in traces.iter_mut().zip(states.iter_mut()) {
            let start = Instant::now();
            let (next, _) = advance(model, st, t, dt, &forcing, tr.mode).map_err(|e| match e {
                AcmError::Blowup { time, .. } => AcmError::Blowup { time, step: k + 1 },
                AcmError::SingularDynamics { .. } | AcmError::GimbalLock { .. } => {
                    AcmError::Blowup { time: t, step: k + 1 }
                }
                other => other,
            })?;
            let wall = start.elapsed().as_secs_f64();
            *st = next;
            tr.record(model, (k + 1) as f64 * dt, st, wall)?;
        }
    }
    Ok(traces)
}

/// Traces of a scenario run in one or both modes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub coupled: Option<SimTrace>,
    pub decoupled: Option<SimTrace>,
}

impl RunOutput {
    pub fn traces(&self) -> impl Iterator<Item = &SimTrace> {
        self.coupled.iter().chain(self.decoupled.iter())
    }

    pub fn pair(&self) -> Option<(&SimTrace, &SimTrace)> {
        Some((self.coupled.as_ref()?, self.decoupled.as_ref()?))
    }
}

/// Run a scenario in the modes it selects.
pub fn run(scenario: &Scenario, params: &AcmParams) -> Result<RunOutput> {
    let model = AcmModel::new(params.clone())?;
    run_with_model(scenario, &model)
}

pub fn run_with_model(scenario: &Scenario, model: &AcmModel) -> Result<RunOutput> {
    let mut out = RunOutput {
        coupled: None,
        decoupled: None,
    };
    for tr in run_modes(scenario, model, &scenario.model_mode.modes())? {
        match tr.mode {
            ModelMode::Coupled => out.coupled = Some(tr),
            ModelMode::Decoupled => out.decoupled = Some(tr),
        }
    }
    Ok(out)
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "r_a")]
    Radius,
    #[serde(rename = "m_u")]
    UavMass,
    #[serde(rename = "l_a")]
    Length,
    #[serde(rename = "E")]
    YoungModulus,
    #[serde(rename = "kappa0")]
    InitialCurvature,
    #[serde(rename = "phi0")]
    InitialRoll,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::Radius,
        SweepAxis::UavMass,
        SweepAxis::Length,
        SweepAxis::YoungModulus,
        SweepAxis::InitialCurvature,
        SweepAxis::InitialRoll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Radius => "r_a",
            SweepAxis::UavMass => "m_u",
            SweepAxis::Length => "l_a",
            SweepAxis::YoungModulus => "E",
            SweepAxis::InitialCurvature => "kappa0",
            SweepAxis::InitialRoll => "phi0",
        }
    }

    /// Figure panel label used for plot-data files.
    pub fn panel(self) -> &'static str {
        match self {
            SweepAxis::Radius => "fig3a",
            SweepAxis::UavMass => "fig3b",
            SweepAxis::Length => "fig3c",
            SweepAxis::YoungModulus => "fig3d",
            SweepAxis::InitialCurvature => "fig3e",
            SweepAxis::InitialRoll => "fig3f",
        }
    }

    /// Built-in scenario the axis is swept on by default.
    pub fn default_scenario(self) -> &'static str {
        match self {
            SweepAxis::InitialCurvature => "testE_bending",
            _ => "sweep_wrench",
        }
    }

    /// Default value set of each axis.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Radius => vec![1e-3, 5e-3, 10e-3],
            SweepAxis::UavMass => vec![1.0, 2.0, 3.0],
            SweepAxis::Length => vec![0.5, 1.0, 1.5],
            SweepAxis::YoungModulus => vec![207e9, 120e9, 40e9],
            SweepAxis::InitialCurvature => vec![0.1, 1.0, 2.0],
            SweepAxis::InitialRoll => vec![0.0, 0.2, 0.4],
        }
    }

    /// Apply `value` to copies of the parameters and scenario.
    pub fn apply(self, params: &AcmParams, scenario: &Scenario, value: f64) -> Result<(AcmParams, Scenario)> {
        let mut p = params.clone();
        let mut sc = scenario.clone();
        match self {
            SweepAxis::Radius => p.r_a = value,
            SweepAxis::UavMass => p.m_u = value,
            SweepAxis::Length => p.l_a = value,
            SweepAxis::YoungModulus => p.young_modulus = value,
            SweepAxis::InitialCurvature => sc.q0[idx::KAPPA] = value,
            SweepAxis::InitialRoll => sc.q0[idx::ROLL] = value,
        }
        if !value.is_finite() {
            return Err(AcmError::config(self.name(), "value must be finite"));
        }
        p.validate()?;
        sc.validate()?;
        sc.name = format!("{}_{}={}", scenario.name, self.name(), value);
        sc.model_mode = ModeSelection::Both;
        Ok((p, sc))
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = AcmError;
    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| AcmError::config("axis", format!("unknown sweep axis `{s}` (r_a, m_u, l_a, E, kappa0, phi0)")))
    }
}

/// Result for one value of a sweep; failures do not stop the sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub result: Result<(SimTrace, SimTrace)>,
}

/// Coupled and decoupled runs for every value of one axis, all else fixed.
pub fn parameter_sweep(
    base: &Scenario,
    params: &AcmParams,
    axis: SweepAxis,
    values: &[f64],
) -> Vec<SweepPoint> {
    values
        .par_iter()
        .map(|&value| {
            let result = axis.apply(params, base, value).and_then(|(p, sc)| {
                let model = AcmModel::new(p)?;
                let mut tr = run_modes(&sc, &model, &[ModelMode::Coupled, ModelMode::Decoupled])?;
                let d = tr.pop().expect("two traces");
                let c = tr.pop().expect("two traces");
                Ok((c, d))
            });
            SweepPoint { value, result }
        })
        .collect()
}
