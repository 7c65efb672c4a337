//! Piecewise-constant-curvature kinematics of the arm and its composition
//! with the floating UAV base.
//!
//! Frames: `R` is the inertial frame (z up), `B` the UAV body frame and `A`
//! the arm-base frame. The arm is attached at a fixed body-frame offset with
//! a fixed body-to-arm rotation ([`ArmMount`]); the default mount flips the
//! arm so a straight backbone hangs along the body `-z` axis.
//!
//! All functions here are pure; every curvature entering a trigonometric
//! quotient has gone through [`regularize_curvature`] first.

use crate::error::{AcmError, Result};
use nalgebra::{Matrix3, SMatrix, SVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Vector6 = SVector<f64, 6>;
pub type Vector8 = SVector<f64, 8>;
pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Matrix3x2 = SMatrix<f64, 3, 2>;
/// Geometric Jacobian of a backbone point: rows `[linear; angular]`, columns `q`.
pub type Jacobian = SMatrix<f64, 6, 8>;

/// Default curvature threshold [1/m].
pub const DEFAULT_KAPPA_S: f64 = 1e-4;

/// Smallest admissible `|cos(pitch)|` before the Euler-rate map is declared singular.
pub const GIMBAL_COS_LIMIT: f64 = 1e-6;

/// Index of each generalized coordinate inside `q`.
pub mod idx {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const Z: usize = 2;
    pub const ROLL: usize = 3;
    pub const PITCH: usize = 4;
    pub const YAW: usize = 5;
    pub const KAPPA: usize = 6;
    pub const PSI_A: usize = 7;
}

/// Clamp a curvature away from zero while keeping its sign.
///
/// `kappa == 0.0` maps to `+kappa_s`.
pub fn regularize_curvature(kappa: f64, kappa_s: f64) -> Result<f64> {
    if !(kappa_s > 0.0) || !kappa_s.is_finite() {
        return Err(AcmError::config("kappa_s", format!("must be > 0, got {kappa_s}")));
    }
    Ok(clamp_curvature(kappa, kappa_s))
}

#[inline]
pub(crate) fn clamp_curvature(kappa: f64, kappa_s: f64) -> f64 {
    if kappa.abs() >= kappa_s {
        kappa
    } else if kappa < 0.0 {
        -kappa_s
    } else {
        kappa_s
    }
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Configuration of the single arm section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmConfig {
    pub kappa: f64,
    pub psi_a: f64,
}

impl ArmConfig {
    /// Regularizes `kappa` and wraps `psi_a`.
    pub fn new(kappa: f64, psi_a: f64, kappa_s: f64) -> Result<Self> {
        Ok(Self {
            kappa: regularize_curvature(kappa, kappa_s)?,
            psi_a: wrap_angle(psi_a),
        })
    }

    /// Radius of curvature `1/kappa` [m].
    pub fn radius(&self) -> f64 {
        1.0 / self.kappa
    }
}

/// Generalized coordinates `q = (x, y, z, roll, pitch, yaw, kappa, psi_a)` and rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedState {
    pub q: Vector8,
    pub qdot: Vector8,
}

impl GeneralizedState {
    pub fn new(q: Vector8, qdot: Vector8) -> Result<Self> {
        let st = Self { q, qdot };
        st.validate()?;
        Ok(st)
    }

    /// Level hover at height `z` with a planar bend `kappa`, at rest.
    pub fn hover(z: f64, kappa: f64) -> Self {
        let mut q = Vector8::zeros();
        q[idx::Z] = z;
        q[idx::KAPPA] = kappa;
        Self {
            q,
            qdot: Vector8::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.iter().chain(self.qdot.iter()).any(|v| !v.is_finite()) {
            return Err(AcmError::Domain("state has non-finite entries".into()));
        }
        let pitch = self.q[idx::PITCH];
        if pitch.cos().abs() < GIMBAL_COS_LIMIT {
            return Err(AcmError::GimbalLock { pitch });
        }
        Ok(())
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.q[0], self.q[1], self.q[2])
    }

    pub fn euler(&self) -> Vector3<f64> {
        Vector3::new(self.q[3], self.q[4], self.q[5])
    }

    pub fn euler_rates(&self) -> Vector3<f64> {
        Vector3::new(self.qdot[3], self.qdot[4], self.qdot[5])
    }

    pub fn arm_rates(&self) -> Vector2<f64> {
        Vector2::new(self.qdot[idx::KAPPA], self.qdot[idx::PSI_A])
    }

    pub fn arm(&self, kappa_s: f64) -> Result<ArmConfig> {
        ArmConfig::new(self.q[idx::KAPPA], self.q[idx::PSI_A], kappa_s)
    }
}

/// Rigid pose: inertial position and rotation `inertial <- local`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            rotation: Matrix3::identity(),
        }
    }

    /// Express an inertial point in the local frame.
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.position)
    }

    /// Rotation vector (axis times angle) of `rotation`.
    pub fn rotation_vector(&self) -> Vector3<f64> {
        rotation_vector(&self.rotation)
    }
}

/// Log map of a rotation matrix, angle in `[0, pi]`.
pub fn rotation_vector(r: &Matrix3<f64>) -> Vector3<f64> {
    let q = nalgebra::UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(*r));
    // keep w >= 0 so the angle stays in [0, pi]
    let v = q.imag() * q.w.signum();
    let sin_half = v.norm();
    if sin_half == 0.0 {
        return Vector3::zeros();
    }
    let angle = 2.0 * sin_half.atan2(q.w.abs());
    v * (angle / sin_half)
}

/// The rotation vector equivalent to `v` (same rotation) that lies closest to `prev`.
pub fn unwrap_rotation_vector(v: &Vector3<f64>, prev: &Vector3<f64>) -> Vector3<f64> {
    let theta = v.norm();
    if theta == 0.0 {
        // identity: candidates are 2 pi k along any axis
        let pn = prev.norm();
        if pn > PI {
            let k = (pn / (2.0 * PI)).round();
            return prev * (2.0 * PI * k / pn);
        }
        return *v;
    }
    let axis = v / theta;
    let along = prev.dot(&axis);
    let k = ((along - theta) / (2.0 * PI)).round();
    axis * (theta + 2.0 * PI * k)
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Skew-symmetric cross-product matrix `[v]x`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Base rotation `R_B = Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn base_rotation(euler: &Vector3<f64>) -> Matrix3<f64> {
    rot_z(euler.z) * rot_y(euler.y) * rot_x(euler.x)
}

/// ZYX map `W` with `omega_inertial = W * (roll_dot, pitch_dot, yaw_dot)`.
pub fn euler_rate_map(euler: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let (sth, cth) = euler.y.sin_cos();
    if cth.abs() < GIMBAL_COS_LIMIT {
        return Err(AcmError::GimbalLock { pitch: euler.y });
    }
    let (sps, cps) = euler.z.sin_cos();
    Ok(Matrix3::new(
        cps * cth, -sps, 0.0, //
        sps * cth, cps, 0.0, //
        -sth, 0.0, 1.0,
    ))
}

// Stable building blocks in x = kappa * s; none of them divides by a
// difference of nearly equal terms.

/// `(1 - cos x) / x`.
#[inline]
fn versine_over(x: f64) -> f64 {
    let h = (0.5 * x).sin();
    2.0 * h * h / x
}

/// `sin x / x - (1 - cos x) / x^2`, the in-plane part of `dF/dkappa` over `s^2`.
#[inline]
fn bend_in_plane(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        0.5 - x2 / 8.0 + x2 * x2 / 144.0
    } else {
        let h = (0.5 * x).sin();
        x.sin() / x - 2.0 * h * h / (x * x)
    }
}

/// `(x cos x - sin x) / x^2`, the axial part of `dF/dkappa` over `s^2`.
#[inline]
fn bend_axial(x: f64) -> f64 {
    if x.abs() < 0.05 {
        let x2 = x * x;
        x * (-1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (-1.0 / 840.0 + x2 / 45360.0)))
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

/// Backbone position `F(s, kappa, psi_a)` in the arm-base frame. `kappa` must be regularized.
pub fn arc_map(s: f64, kappa: f64, psi_a: f64) -> Vector3<f64> {
    let x = kappa * s;
    let (sp, cp) = psi_a.sin_cos();
    // (1 - cos x)/kappa = s * (1 - cos x)/x ; sin x / kappa = s * sin x / x
    let radial = if x == 0.0 { 0.0 } else { s * versine_over(x) };
    let axial = if x == 0.0 { s } else { s * x.sin() / x };
    Vector3::new(radial * cp, radial * sp, axial)
}

/// Orientation of the backbone frame at `s` relative to the arm base:
/// `Rz(psi_a) Ry(kappa s)`.
pub fn section_rotation(s: f64, kappa: f64, psi_a: f64) -> Matrix3<f64> {
    rot_z(psi_a) * rot_y(kappa * s)
}

/// Translational arm Jacobian `[dF/dkappa, dF/dpsi_a]`.
pub fn arm_jacobian_translational(s: f64, kappa: f64, psi_a: f64) -> Matrix3x2 {
    let x = kappa * s;
    let (sp, cp) = psi_a.sin_cos();
    let s2 = s * s;
    let a = s2 * bend_in_plane(x);
    let b = s2 * bend_axial(x);
    // (1 - cos x)/kappa
    let c = if x == 0.0 { 0.0 } else { s * versine_over(x) };
    Matrix3x2::new(
        a * cp, -c * sp, //
        a * sp, c * cp, //
        b, 0.0,
    )
}

/// Rotational arm Jacobian: angular velocity of the backbone frame at `s`
/// per unit `(kappa_dot, psi_a_dot)`, in the arm-base frame.
pub fn arm_jacobian_rotational(s: f64, psi_a: f64) -> Matrix3x2 {
    let (sp, cp) = psi_a.sin_cos();
    Matrix3x2::new(-s * sp, 0.0, s * cp, 0.0, 0.0, 1.0)
}

/// Which Euler-rate map enters the base-attitude Jacobian columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EulerRateConvention {
    /// `J_o2 = W(Phi)`: Euler rates to inertial angular velocity.
    #[default]
    Consistent,
    /// `J_o2 = W(Phi)^-1`, the form printed alongside the block definitions.
    PaperLiteral,
}

/// Fixed attachment of the arm base to the UAV body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmMount {
    /// Body-frame offset of the arm base [m].
    pub offset: Vector3<f64>,
    /// Rotation `body <- arm base`.
    pub rotation: Matrix3<f64>,
}

impl ArmMount {
    /// Arm hanging below the body center.
    pub fn downward() -> Self {
        Self {
            offset: Vector3::zeros(),
            // rot_x(pi) without the sin(pi) residue
            rotation: Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)),
        }
    }

    /// Arm base coincident with the body frame.
    pub fn aligned() -> Self {
        Self {
            offset: Vector3::zeros(),
            rotation: Matrix3::identity(),
        }
    }
}

impl Default for ArmMount {
    fn default() -> Self {
        Self::downward()
    }
}

/// Geometry needed to evaluate the ACM kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmGeometry {
    pub length: f64,
    pub kappa_s: f64,
    pub mount: ArmMount,
    pub euler_convention: EulerRateConvention,
}

impl ArmGeometry {
    pub fn new(length: f64, kappa_s: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(AcmError::config("l_a", format!("must be > 0, got {length}")));
        }
        regularize_curvature(0.0, kappa_s)?;
        Ok(Self {
            length,
            kappa_s,
            mount: ArmMount::default(),
            euler_convention: EulerRateConvention::Consistent,
        })
    }

    pub fn with_mount(mut self, mount: ArmMount) -> Self {
        self.mount = mount;
        self
    }

    fn check_s(&self, s: f64) -> Result<()> {
        if !(0.0..=self.length).contains(&s) {
            return Err(AcmError::Domain(format!(
                "arc length {s} outside [0, {}]",
                self.length
            )));
        }
        Ok(())
    }

    /// Checked [`arc_map`]: validates `s` and regularizes `kappa`.
    pub fn arc_map(&self, s: f64, kappa: f64, psi_a: f64) -> Result<Vector3<f64>> {
        self.check_s(s)?;
        Ok(arc_map(s, regularize_curvature(kappa, self.kappa_s)?, psi_a))
    }

    pub fn section_rotation(&self, s: f64, kappa: f64, psi_a: f64) -> Result<Matrix3<f64>> {
        self.check_s(s)?;
        Ok(section_rotation(
            s,
            regularize_curvature(kappa, self.kappa_s)?,
            psi_a,
        ))
    }

    pub fn arm_jacobian_translational(&self, s: f64, kappa: f64, psi_a: f64) -> Result<Matrix3x2> {
        self.check_s(s)?;
        Ok(arm_jacobian_translational(
            s,
            regularize_curvature(kappa, self.kappa_s)?,
            psi_a,
        ))
    }

    pub fn arm_jacobian_rotational(&self, s: f64, psi_a: f64) -> Result<Matrix3x2> {
        self.check_s(s)?;
        Ok(arm_jacobian_rotational(s, psi_a))
    }

    /// Body-frame position of the backbone point `s`.
    pub fn body_point(&self, s: f64, kappa: f64, psi_a: f64) -> Vector3<f64> {
        self.mount.offset + self.mount.rotation * arc_map(s, kappa, psi_a)
    }

    /// Inertial pose of the backbone frame at `s`.
    pub fn point_pose(&self, state: &GeneralizedState, s: f64) -> Result<Pose> {
        self.check_s(s)?;
        let kappa = clamp_curvature(state.q[idx::KAPPA], self.kappa_s);
        let psi_a = state.q[idx::PSI_A];
        let rb = base_rotation(&state.euler());
        Ok(Pose {
            position: state.position() + rb * self.body_point(s, kappa, psi_a),
            rotation: rb * self.mount.rotation * section_rotation(s, kappa, psi_a),
        })
    }

    /// Inertial pose of the tip frame (`s = l_a`).
    pub fn tip_pose(&self, state: &GeneralizedState) -> Result<Pose> {
        self.point_pose(state, self.length)
    }

    fn attitude_map(&self, euler: &Vector3<f64>) -> Result<Matrix3<f64>> {
        let w = euler_rate_map(euler)?;
        Ok(match self.euler_convention {
            EulerRateConvention::Consistent => w,
            EulerRateConvention::PaperLiteral => w
                .try_inverse()
                .ok_or(AcmError::GimbalLock { pitch: euler.y })?,
        })
    }

    /// Jacobian `J = [J_p; J_o]` such that `J * qdot` is the inertial twist
    /// (linear velocity, angular velocity) of the backbone point `s`.
    pub fn acm_jacobian(&self, state: &GeneralizedState, s: f64) -> Result<Jacobian> {
        self.check_s(s)?;
        let euler = state.euler();
        let rb = base_rotation(&euler);
        let w = self.attitude_map(&euler)?;
        let kappa = clamp_curvature(state.q[idx::KAPPA], self.kappa_s);
        let psi_a = state.q[idx::PSI_A];
        let r_arm = rb * self.mount.rotation;
        let lever = rb * self.body_point(s, kappa, psi_a);

        let jp2 = -skew(&lever) * w;
        let jp3 = r_arm * arm_jacobian_translational(s, kappa, psi_a);
        let jo3 = r_arm * arm_jacobian_rotational(s, psi_a);

        let mut j = Jacobian::zeros();
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
        j.fixed_view_mut::<3, 3>(0, 3).copy_from(&jp2);
        j.fixed_view_mut::<3, 2>(0, 6).copy_from(&jp3);
        j.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
        j.fixed_view_mut::<3, 2>(3, 6).copy_from(&jo3);
        Ok(j)
    }

    pub fn tip_jacobian(&self, state: &GeneralizedState) -> Result<Jacobian> {
        self.acm_jacobian(state, self.length)
    }
}
