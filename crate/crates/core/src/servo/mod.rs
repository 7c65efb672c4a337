//! Eye-in-hand image-based visual servoing of the aerial continuum manipulator.
//!
//! The camera sits on the arm tip with its optical axis along the tip `z` axis.
//! A square of four coplanar points on the ground plane is tracked; its
//! centroid either rests or follows a [`TargetTrajectory`].

pub mod camera;
pub mod control;
pub mod trajectory;

pub use camera::{error_norm_px, interaction_matrix, observe, project, servo_error, CameraIntrinsics, ImageFeatures};
pub use control::{
    control_torque, dpd_sm_term, in_bound_set, lyapunov, r_max, task_jacobian, ControllerGains, GainConfig, GainSpec,
    TaConvention,
};
pub use trajectory::{PathSegment, PathSpec, TargetTrajectory, LETTERS};

use crate::dynamics::{AcmModel, ExternalWrench, ModelMode};
use crate::error::{AcmError, Result};
use crate::kinematics::{idx, GeneralizedState, Vector8};
use crate::simulation::advance;
use nalgebra::{DVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Relative slack on `V(k+1) <= V(k)` before a step counts as a monitor violation.
pub const MONITOR_REL_TOL: f64 = 1e-6;

/// Hover at 5 m with the arm bent to `kappa = 0.5`.
pub fn servo_initial_q() -> [f64; 8] {
    [0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.5, 0.0]
}

/// Source of the feature-error rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdotMode {
    /// `-L (v_c - v_t)` with the true target velocity.
    #[default]
    Analytic,
    /// `(e_k - e_{k-1}) / dt`.
    BackDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServoConfig {
    pub intrinsics: CameraIntrinsics,
    pub gains: GainConfig,
    /// Simulated time [s].
    pub horizon: f64,
    /// Control and integration step [s].
    pub dt: f64,
    /// Keep every n-th step in the trace.
    pub record_every: usize,
    /// Half the side of the target square [m].
    pub half_side: f64,
    pub q0: [f64; 8],
    /// Initial target centroid offset from the ground point on the optical axis [m].
    pub target_offset: [f64; 2],
    pub edot: EdotMode,
    pub ta: TaConvention,
    /// Free constant of the ultimate-bound set.
    pub proxy_lambda: f64,
    /// Null-space velocity damping rate [1/s]; 0 disables the term.
    pub null_damping: f64,
    /// Squared null-space posture frequency [1/s^2] pulling roll, pitch and
    /// curvature back to `q0`; 0 disables the term.
    pub posture_stiffness: f64,
    /// Bounds on target speed, acceleration and jerk.
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl Default for ServoConfig {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::default(),
            gains: GainConfig::default(),
            horizon: 50.0,
            dt: 2.5e-4,
            record_every: 20,
            half_side: 0.25,
            q0: servo_initial_q(),
            target_offset: [0.0, 0.0],
            edot: EdotMode::Analytic,
            ta: TaConvention::CameraFrame,
            proxy_lambda: 1.0,
            null_damping: 2.0,
            posture_stiffness: 5.0,
            l1: 0.15,
            l2: 0.3,
            l3: 1.0,
        }
    }
}

impl ServoConfig {
    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        ControllerGains::from_config(&self.gains)?;
        for (name, v) in [
            ("horizon", self.horizon),
            ("dt", self.dt),
            ("half_side", self.half_side),
            ("proxy_lambda", self.proxy_lambda),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(AcmError::config(format!("servo.{name}"), "must be finite and > 0"));
            }
        }
        for (name, v) in [("l1", self.l1), ("l2", self.l2), ("l3", self.l3)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(AcmError::config(format!("servo.{name}"), "must be finite and >= 0"));
            }
        }
        for (name, v) in [("null_damping", self.null_damping), ("posture_stiffness", self.posture_stiffness)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(AcmError::config(format!("servo.{name}"), "must be finite and >= 0"));
            }
        }
        if self.dt > self.horizon {
            return Err(AcmError::config("servo.dt", "must not exceed the horizon"));
        }
        if self.record_every == 0 {
            return Err(AcmError::config("servo.record_every", "must be at least 1"));
        }
        if self.q0.iter().chain(&self.target_offset).any(|v| !v.is_finite()) {
            return Err(AcmError::config("servo.q0", "entries must be finite"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// One recorded control cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct ServoRecord {
    pub t: f64,
    /// Feature error in normalized coordinates.
    pub e: DVector<f64>,
    pub e_norm_px: f64,
    pub v: f64,
    pub tau: Vector8,
    pub tip: Vector3<f64>,
    pub in_bound_set: bool,
    pub held: bool,
}

/// Run-level statistics of a servo run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ServoSummary {
    pub steps: usize,
    pub final_e_px: f64,
    pub max_e_px: f64,
    /// Largest error over the last 20% of the horizon.
    pub tail_max_e_px: f64,
    pub hold_events: usize,
    /// Steps that started outside the bound set.
    pub monitor_checks: usize,
    /// Of those, steps after which `V` grew.
    pub monitor_violations: usize,
    pub max_relative_increase: f64,
    pub r_max: f64,
    pub median_step_s: f64,
}

#[derive(Debug, Clone)]
pub struct ServoTrace {
    pub target: String,
    pub mode: ModelMode,
    pub records: Vec<ServoRecord>,
    pub summary: ServoSummary,
    /// Segment start times and arc intervals of the target path.
    pub segment_starts: Vec<f64>,
    pub arc_intervals: Vec<(f64, f64)>,
    /// Wall time of every control cycle [s].
    pub step_wall_s: Vec<f64>,
}

impl ServoTrace {
    pub fn error_samples(&self) -> Vec<crate::analysis::ErrorSample> {
        self.records
            .iter()
            .map(|r| crate::analysis::ErrorSample {
                t: r.t,
                e_norm_px: r.e_norm_px,
            })
            .collect()
    }
}

/// Servo loop state for one plant model.
pub struct ServoSim<'a> {
    model: &'a AcmModel,
    mode: ModelMode,
    config: ServoConfig,
    gains: ControllerGains,
    trajectory: TargetTrajectory,
    desired: ImageFeatures,
    r_max: f64,
    posture: Vector8,
    q_ref: Vector8,
    pub state: GeneralizedState,
    pub t: f64,
    prev_e: Option<DVector<f64>>,
    prev_tau: Option<Vector8>,
    prev_e_a: Vector6<f64>,
}

/// Ground point hit by the optical axis of the camera at `state`.
fn optical_axis_ground_point(model: &AcmModel, state: &GeneralizedState) -> Result<Vector3<f64>> {
    let pose = model.geometry().tip_pose(state)?;
    let axis = pose.rotation.column(2).into_owned();
    if !(axis.z < -1e-3) {
        return Err(AcmError::config("servo.q0", "camera does not look at the ground plane"));
    }
    let s = -pose.position.z / axis.z;
    Ok(pose.position + axis * s)
}

impl<'a> ServoSim<'a> {
    /// Sets up the loop. The desired image is the target square seen from `q0`
    /// with its centroid on the optical axis; the target itself starts at that
    /// point plus `target_offset` and then follows `path` if one is given.
    pub fn new(model: &'a AcmModel, config: &ServoConfig, path: Option<PathSpec>, mode: ModelMode) -> Result<Self> {
        config.validate()?;
        let gains = ControllerGains::from_config(&config.gains)?;
        let state = GeneralizedState::new(Vector8::from_row_slice(&config.q0), Vector8::zeros())?;
        let ground = optical_axis_ground_point(model, &state)?;
        let camera = model.geometry().tip_pose(&state)?;
        let origin = ground + Vector3::new(config.target_offset[0], config.target_offset[1], 0.0);
        let trajectory = match path {
            Some(p) => TargetTrajectory::new(p, origin, config.half_side)?,
            None => TargetTrajectory::stationary(origin, config.half_side)?,
        };
        let m0 = model.mass_matrix(&state, mode)?;
        let mut posture = Vector8::zeros();
        for i in [idx::ROLL, idx::PITCH, idx::KAPPA] {
            posture[i] = config.posture_stiffness * m0[(i, i)];
        }
        let reference = TargetTrajectory::stationary(ground, config.half_side)?;
        let desired = observe(&reference.corners(&ground), &camera, &config.intrinsics, 0.0)?;
        let r_max = if trajectory.path.segments.is_empty() {
            0.0
        } else {
            let (v, a, j) = trajectory.bounds(1e-3);
            let slack = 1.0 + 1e-6;
            for (name, got, lim) in [("l1", v, config.l1), ("l2", a, config.l2), ("l3", j, config.l3)] {
                if got > lim * slack {
                    return Err(AcmError::config(
                        format!("servo.{name}"),
                        format!("target path reaches {got:.4}, above the configured bound {lim}"),
                    ));
                }
            }
            control::r_max(&gains, config.l2, config.l3)
        };
        Ok(Self {
            model,
            mode,
            config: config.clone(),
            gains,
            trajectory,
            desired,
            r_max,
            posture,
            q_ref: state.q,
            state,
            t: 0.0,
            prev_e: None,
            prev_tau: None,
            prev_e_a: Vector6::zeros(),
        })
    }

    pub fn trajectory(&self) -> &TargetTrajectory {
        &self.trajectory
    }

    pub fn desired(&self) -> &ImageFeatures {
        &self.desired
    }

    /// One control-and-integrate cycle. The record describes the state at the
    /// start of the cycle and the torque applied over it.
    pub fn step(&mut self) -> Result<ServoRecord> {
        let cfg = &self.config;
        let camera = self.model.geometry().tip_pose(&self.state)?;
        let (points, vt_world) = self.trajectory.target_points(self.t);
        let features = observe(&points, &camera, &cfg.intrinsics, self.t)?;
        let e = servo_error(&features, &self.desired)?;
        let l = interaction_matrix(&features)?;
        let j = task_jacobian(self.model, &self.state, &camera.rotation, cfg.ta)?;
        let vc = j * self.state.qdot;
        let vt_cam = camera.rotation.transpose() * vt_world;
        let mut rel = vc;
        for i in 0..3 {
            rel[i] -= vt_cam[i];
        }
        let edot = match (cfg.edot, &self.prev_e) {
            (EdotMode::BackDifference, Some(prev)) => (&e - prev) / cfg.dt,
            _ => -(&l * DVector::from_column_slice(rel.as_slice())),
        };

        let m = self.model.mass_matrix(&self.state, self.mode)?;
        let (tau, e_a, held) = match control::interaction_pinv(&l) {
            Some(pinv) => {
                let (et, edt) = control::reduce_error(&pinv, &e, &edot)?;
                let e_a = dpd_sm_term(&et, &edt, &self.gains);
                let tau = control_torque(self.model, &self.state, &j, &e_a, &self.gains)?
                    + control::null_space_torque(&m, &j, &self.state, cfg.null_damping, &self.posture, &self.q_ref)?;
                (tau, e_a, false)
            }
            None => {
                let tau = match self.prev_tau {
                    Some(t) => t,
                    None => self.model.gravity_vector(&self.state)?,
                };
                (tau, self.prev_e_a, true)
            }
        };
        let v = lyapunov(&m, &self.state.qdot, &e_a, &self.gains);
        let inside = in_bound_set(&vc, &e_a, &self.gains, cfg.proxy_lambda, self.r_max);
        let record = ServoRecord {
            t: self.t,
            e_norm_px: error_norm_px(&e, &cfg.intrinsics),
            e: e.clone(),
            v,
            tau,
            tip: camera.position,
            in_bound_set: inside,
            held,
        };

        let zero = ExternalWrench::zero();
        let forcing = |_t: f64| (tau, zero);
        let (next, _) = advance(self.model, &self.state, self.t, cfg.dt, &forcing, self.mode)?;
        self.state = next;
        self.t += cfg.dt;
        self.prev_e = Some(e);
        self.prev_tau = Some(tau);
        self.prev_e_a = e_a;
        Ok(record)
    }

    /// Run to the horizon; errors carry the failing time.
    pub fn run(mut self) -> Result<ServoTrace> {
        let steps = self.config.steps();
        let every = self.config.record_every;
        let mut records = Vec::with_capacity(steps / every + 2);
        let mut summary = ServoSummary {
            steps,
            r_max: self.r_max,
            ..Default::default()
        };
        let tail_start = 0.8 * self.config.horizon;
        let mut walls = Vec::with_capacity(steps);
        let mut prev: Option<ServoRecord> = None;
        for k in 0..=steps {
            let start = std::time::Instant::now();
            let rec = if k < steps {
                self.step().map_err(|err| match err {
                    AcmError::SingularDynamics { .. } | AcmError::Domain(_) => AcmError::Blowup {
                        time: self.t,
                        step: k,
                    },
                    other => other,
                })?
            } else {
                self.observe_only()?
            };
            walls.push(start.elapsed().as_secs_f64());
            if let Some(p) = &prev {
                if !p.in_bound_set && !p.held {
                    summary.monitor_checks += 1;
                    let inc = (rec.v - p.v) / p.v.abs().max(f64::MIN_POSITIVE);
                    if inc > MONITOR_REL_TOL {
                        summary.monitor_violations += 1;
                        summary.max_relative_increase = summary.max_relative_increase.max(inc);
                    }
                }
            }
            summary.hold_events += rec.held as usize;
            summary.max_e_px = summary.max_e_px.max(rec.e_norm_px);
            if rec.t >= tail_start - 1e-12 {
                summary.tail_max_e_px = summary.tail_max_e_px.max(rec.e_norm_px);
            }
            summary.final_e_px = rec.e_norm_px;
            if k % every == 0 || k == steps {
                records.push(rec.clone());
            }
            prev = Some(rec);
        }
        walls.pop();
        let mut sorted = walls.clone();
        sorted.sort_by(f64::total_cmp);
        summary.median_step_s = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
        Ok(ServoTrace {
            target: self.trajectory.path.name.clone(),
            mode: self.mode,
            records,
            summary,
            segment_starts: self.trajectory.segment_starts().to_vec(),
            arc_intervals: self.trajectory.arc_intervals(),
            step_wall_s: walls,
        })
    }

    /// Record at the current state without stepping.
    fn observe_only(&mut self) -> Result<ServoRecord> {
        let saved = (self.state, self.t, self.prev_e.clone(), self.prev_tau, self.prev_e_a);
        let rec = self.step()?;
        (self.state, self.t, self.prev_e, self.prev_tau, self.prev_e_a) = saved;
        Ok(rec)
    }
}

/// Servo one model over the horizon.
pub fn run_servo(model: &AcmModel, config: &ServoConfig, path: Option<PathSpec>, mode: ModelMode) -> Result<ServoTrace> {
    ServoSim::new(model, config, path, mode)?.run()
}

/// Servo trace CSV header for `n` features.
pub fn servo_csv_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=2 * n).map(|i| format!("e_{i}")));
    h.extend(["e_norm_px", "V"].map(String::from));
    h.extend((1..=8).map(|i| format!("tau_{i}")));
    h.extend(["tipx", "tipy", "tipz", "mode"].map(String::from));
    h
}

pub fn write_servo_csv<W: Write>(trace: &ServoTrace, out: W) -> Result<()> {
    let n = trace.records.first().map_or(4, |r| r.e.len() / 2);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(servo_csv_header(n))?;
    for r in &trace.records {
        let mut row: Vec<String> = vec![r.t.to_string()];
        row.extend(r.e.iter().map(|v| v.to_string()));
        row.push(r.e_norm_px.to_string());
        row.push(r.v.to_string());
        row.extend(r.tau.iter().map(|v| v.to_string()));
        row.extend(r.tip.iter().map(|v| v.to_string()));
        row.push(trace.mode.as_str().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a servo CSV written by [`write_servo_csv`].
///
/// The file does not carry the bound-set and hold flags; they come back `false`.
pub fn read_servo_csv<R: Read>(input: R) -> Result<(ModelMode, Vec<ServoRecord>)> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let width = header.len();
    if width < 15 || (width - 15) % 2 != 0 || header != servo_csv_header((width - 15) / 2) {
        return Err(AcmError::Parse(format!("unexpected servo header: {header:?}")));
    }
    let ne = width - 15;
    let mut mode = None;
    let mut records = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let m: ModelMode = rec[width - 1].parse()?;
        if *mode.get_or_insert(m) != m {
            return Err(AcmError::Parse("servo CSV mixes model modes".into()));
        }
        let v: Vec<f64> = rec
            .iter()
            .take(width - 1)
            .map(|f| f.parse::<f64>().map_err(|e| AcmError::Parse(format!("`{f}`: {e}"))))
            .collect::<Result<_>>()?;
        records.push(ServoRecord {
            t: v[0],
            e: DVector::from_column_slice(&v[1..1 + ne]),
            e_norm_px: v[1 + ne],
            v: v[2 + ne],
            tau: Vector8::from_column_slice(&v[3 + ne..11 + ne]),
            tip: Vector3::new(v[11 + ne], v[12 + ne], v[13 + ne]),
            in_bound_set: false,
            held: false,
        });
    }
    let mode = mode.ok_or_else(|| AcmError::Parse("servo CSV has no rows".into()))?;
    Ok((mode, records))
}
