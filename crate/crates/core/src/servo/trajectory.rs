//! Planar target paths: line and arc segments traversed with smooth start/stop ramps.

use crate::error::{AcmError, Result};
use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Nominal cruise speed of the built-in letters [m/s].
pub const LETTER_SPEED: f64 = 0.1;

/// Default ramp duration at both ends of every segment [s].
pub const DEFAULT_RAMP_TIME: f64 = 1.0;

/// One path primitive in the target plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSegment {
    Line {
        from: [f64; 2],
        to: [f64; 2],
        speed: f64,
    },
    Arc {
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        sweep: f64,
        speed: f64,
    },
}

impl PathSegment {
    pub fn speed(&self) -> f64 {
        match self {
            PathSegment::Line { speed, .. } | PathSegment::Arc { speed, .. } => *speed,
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            PathSegment::Line { from, to, .. } => (Vector2::from(*to) - Vector2::from(*from)).norm(),
            PathSegment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Point, unit tangent and signed curvature at distance `d` along the segment.
    fn at(&self, d: f64) -> (Vector2<f64>, Vector2<f64>, f64) {
        match self {
            PathSegment::Line { from, to, .. } => {
                let a = Vector2::from(*from);
                let u = (Vector2::from(*to) - a) / self.length();
                (a + u * d, u, 0.0)
            }
            PathSegment::Arc {
                center,
                radius,
                start_angle,
                sweep,
                ..
            } => {
                let dir = sweep.signum();
                let ang = start_angle + dir * d / radius;
                let (s, c) = ang.sin_cos();
                let p = Vector2::from(*center) + Vector2::new(c, s) * *radius;
                (p, Vector2::new(-s, c) * dir, dir / radius)
            }
        }
    }

    pub fn start(&self) -> Vector2<f64> {
        self.at(0.0).0
    }

    pub fn end(&self) -> Vector2<f64> {
        self.at(self.length()).0
    }

    fn validate(&self, k: usize) -> Result<()> {
        let field = format!("path.segments[{k}]");
        if !(self.speed() > 0.0) || !self.speed().is_finite() {
            return Err(AcmError::config(field, "speed must be finite and > 0"));
        }
        if let PathSegment::Arc { radius, sweep, .. } = self {
            if !(*radius > 0.0) || !radius.is_finite() || !sweep.is_finite() {
                return Err(AcmError::config(field, "arc needs a finite radius > 0 and finite sweep"));
            }
        }
        if !(self.length() > 0.0) || !self.length().is_finite() {
            return Err(AcmError::config(field, "segment length must be finite and > 0"));
        }
        Ok(())
    }
}

/// Named path: a connected list of segments, in metres, relative to the path start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub name: String,
    pub segments: Vec<PathSegment>,
    #[serde(default = "default_ramp")]
    pub ramp_time: f64,
}

fn default_ramp() -> f64 {
    DEFAULT_RAMP_TIME
}

fn line(from: [f64; 2], to: [f64; 2]) -> PathSegment {
    PathSegment::Line {
        from,
        to,
        speed: LETTER_SPEED,
    }
}

impl PathSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(AcmError::config("path.segments", "at least one segment is required"));
        }
        if !(self.ramp_time > 0.0) || !self.ramp_time.is_finite() {
            return Err(AcmError::config("path.ramp_time", "must be finite and > 0"));
        }
        for (k, s) in self.segments.iter().enumerate() {
            s.validate(k)?;
        }
        for (k, w) in self.segments.windows(2).enumerate() {
            let gap = (w[0].end() - w[1].start()).norm();
            if gap > 1e-9 {
                return Err(AcmError::config(
                    format!("path.segments[{}]", k + 1),
                    format!("does not start where the previous segment ends (gap {gap:.3e} m)"),
                ));
            }
        }
        Ok(())
    }

    /// Built-in letter traced inside a 1 m box starting at the lower-left or upper-left corner.
    pub fn letter(name: &str) -> Result<Self> {
        let segments = match name.to_ascii_uppercase().as_str() {
            "M" => vec![
                line([0.0, 0.0], [0.0, 1.0]),
                line([0.0, 1.0], [0.5, 0.4]),
                line([0.5, 0.4], [1.0, 1.0]),
                line([1.0, 1.0], [1.0, 0.0]),
            ],
            "R" => vec![
                line([0.0, 0.0], [0.0, 1.0]),
                line([0.0, 1.0], [0.5, 1.0]),
                PathSegment::Arc {
                    center: [0.5, 0.75],
                    radius: 0.25,
                    start_angle: PI / 2.0,
                    sweep: -PI,
                    speed: LETTER_SPEED,
                },
                line([0.5, 0.5], [1.0, 0.0]),
            ],
            "A" => vec![
                line([0.0, 0.0], [0.5, 1.0]),
                line([0.5, 1.0], [1.0, 0.0]),
                line([1.0, 0.0], [0.75, 0.5]),
                line([0.75, 0.5], [0.25, 0.5]),
            ],
            "L" => vec![line([0.0, 1.0], [0.0, 0.0]), line([0.0, 0.0], [1.0, 0.0])],
            _ => {
                return Err(AcmError::UnknownScenario {
                    name: name.to_string(),
                    valid: LETTERS.join(", "),
                })
            }
        };
        let p = Self {
            name: name.to_ascii_uppercase(),
            segments,
            ramp_time: DEFAULT_RAMP_TIME,
        };
        p.validate()?;
        Ok(p)
    }

    /// Time to traverse all segments [s].
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| segment_timing(s, self.ramp_time).0).sum()
    }
}

/// The built-in letter names.
pub const LETTERS: [&str; 4] = ["M", "R", "A", "L"];

/// `(duration, ramp)` of a segment; short segments use a shorter ramp and no cruise.
fn segment_timing(seg: &PathSegment, ramp: f64) -> (f64, f64) {
    let v = seg.speed();
    let tr = ramp.min(seg.length() / v);
    (seg.length() / v + tr, tr)
}

/// Quintic smoothstep and its derivative.
fn smoothstep(u: f64) -> (f64, f64) {
    let u2 = u * u;
    (u2 * u * (10.0 - 15.0 * u + 6.0 * u2), 30.0 * u2 * (1.0 - u) * (1.0 - u))
}

/// Distance, speed and tangential acceleration along a segment at local time `t`.
fn profile(t: f64, dur: f64, tr: f64, v: f64) -> (f64, f64, f64) {
    let ramp_dist = |u: f64| u.powi(4) * (2.5 - 3.0 * u + u * u);
    let t = t.clamp(0.0, dur);
    if t < tr {
        let u = t / tr;
        let (s, ds) = smoothstep(u);
        (v * tr * ramp_dist(u), v * s, v * ds / tr)
    } else if t > dur - tr {
        let u = (dur - t) / tr;
        let (s, ds) = smoothstep(u);
        let total = v * (dur - tr);
        (total - v * tr * ramp_dist(u), v * s, -v * ds / tr)
    } else {
        (v * (0.5 * tr + (t - tr)), v, 0.0)
    }
}

/// Target centroid kinematics in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSample {
    pub centroid: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

/// A timed path for the centroid of a rigid square of points on a horizontal plane.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTrajectory {
    pub path: PathSpec,
    pub origin: Vector3<f64>,
    pub half_side: f64,
    starts: Vec<f64>,
    timings: Vec<(f64, f64)>,
}

impl TargetTrajectory {
    /// `origin` is where the path start point is placed; the plane is `z = origin.z`.
    pub fn new(path: PathSpec, origin: Vector3<f64>, half_side: f64) -> Result<Self> {
        path.validate()?;
        if !(half_side > 0.0) || !half_side.is_finite() {
            return Err(AcmError::config("target.half_side", "must be finite and > 0"));
        }
        let mut starts = Vec::with_capacity(path.segments.len());
        let mut timings = Vec::with_capacity(path.segments.len());
        let mut t0 = 0.0;
        for s in &path.segments {
            let tm = segment_timing(s, path.ramp_time);
            starts.push(t0);
            timings.push(tm);
            t0 += tm.0;
        }
        Ok(Self {
            path,
            origin,
            half_side,
            starts,
            timings,
        })
    }

    /// A target that stays at `origin`.
    pub fn stationary(origin: Vector3<f64>, half_side: f64) -> Result<Self> {
        if !(half_side > 0.0) || !half_side.is_finite() {
            return Err(AcmError::config("target.half_side", "must be finite and > 0"));
        }
        Ok(Self {
            path: PathSpec {
                name: "static".into(),
                segments: Vec::new(),
                ramp_time: DEFAULT_RAMP_TIME,
            },
            origin,
            half_side,
            starts: Vec::new(),
            timings: Vec::new(),
        })
    }

    pub fn duration(&self) -> f64 {
        self.starts.last().zip(self.timings.last()).map_or(0.0, |(s, t)| s + t.0)
    }

    /// Segment start times.
    pub fn segment_starts(&self) -> &[f64] {
        &self.starts
    }

    /// Time intervals spent on arc segments.
    pub fn arc_intervals(&self) -> Vec<(f64, f64)> {
        self.path
            .segments
            .iter()
            .zip(self.starts.iter().zip(&self.timings))
            .filter(|(s, _)| matches!(s, PathSegment::Arc { .. }))
            .map(|(_, (t0, tm))| (*t0, t0 + tm.0))
            .collect()
    }

    /// Centroid state at `t`; before 0 and after the end the centroid rests at the path ends.
    pub fn sample(&self, t: f64) -> TargetSample {
        if self.path.segments.is_empty() {
            return TargetSample {
                centroid: self.origin,
                velocity: Vector3::zeros(),
                acceleration: Vector3::zeros(),
            };
        }
        let k = self.starts.iter().rposition(|&s| s <= t).unwrap_or(0);
        let seg = &self.path.segments[k];
        let (dur, tr) = self.timings[k];
        let (d, v, a) = profile(t - self.starts[k], dur, tr, seg.speed());
        let (d, v, a) = if t < 0.0 { (0.0, 0.0, 0.0) } else { (d, v, a) };
        let (p, tan, curv) = seg.at(d.min(seg.length()));
        let normal = Vector2::new(-tan.y, tan.x);
        let acc = tan * a + normal * (curv * v * v);
        let base = self.path.segments[0].start();
        let rel = p - base;
        TargetSample {
            centroid: self.origin + Vector3::new(rel.x, rel.y, 0.0),
            velocity: Vector3::new(tan.x * v, tan.y * v, 0.0),
            acceleration: Vector3::new(acc.x, acc.y, 0.0),
        }
    }

    /// The square's corners around a centroid, counter-clockwise from `(+a, +a)`.
    pub fn corners(&self, centroid: &Vector3<f64>) -> [Vector3<f64>; 4] {
        let a = self.half_side;
        [(a, a), (-a, a), (-a, -a), (a, -a)].map(|(x, y)| centroid + Vector3::new(x, y, 0.0))
    }

    /// World points and inertial centroid velocity at `t`.
    pub fn target_points(&self, t: f64) -> ([Vector3<f64>; 4], Vector3<f64>) {
        let s = self.sample(t);
        (self.corners(&s.centroid), s.velocity)
    }

    /// Largest speed, acceleration and jerk over the path on a uniform grid.
    pub fn bounds(&self, dt: f64) -> (f64, f64, f64) {
        let n = (self.duration() / dt).ceil() as usize;
        let mut out = (0.0f64, 0.0f64, 0.0f64);
        let mut prev: Option<Vector3<f64>> = None;
        for i in 0..=n {
            let s = self.sample(i as f64 * dt);
            out.0 = out.0.max(s.velocity.norm());
            out.1 = out.1.max(s.acceleration.norm());
            if let Some(p) = prev {
                out.2 = out.2.max((s.acceleration - p).norm() / dt);
            }
            prev = Some(s.acceleration);
        }
        out
    }
}
