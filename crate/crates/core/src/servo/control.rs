//! Sliding-mode-augmented PD image-based control law and its Lyapunov monitor.

use crate::dynamics::{AcmModel, ModelMode};
use crate::error::{AcmError, Result};
use crate::kinematics::{euler_rate_map, GeneralizedState, Jacobian, Matrix8, Vector8};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector6};
use serde::{Deserialize, Serialize};

/// Smallest accepted ratio of the extreme singular values of `L`.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// A 6x6 gain given as a scalar (times identity), a diagonal or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Scalar(f64),
    Diagonal([f64; 6]),
    Full([[f64; 6]; 6]),
}

impl GainSpec {
    pub fn matrix(&self) -> Matrix6<f64> {
        match self {
            GainSpec::Scalar(k) => Matrix6::identity() * *k,
            GainSpec::Diagonal(d) => Matrix6::from_diagonal(&Vector6::from_row_slice(d)),
            GainSpec::Full(rows) => Matrix6::from_fn(|i, j| rows[i][j]),
        }
    }
}

/// Config form of [`ControllerGains`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainConfig {
    pub kp: GainSpec,
    pub kd: GainSpec,
    pub cp: GainSpec,
    pub cd: GainSpec,
    pub cs: GainSpec,
    pub sigma: f64,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self {
            kp: GainSpec::Diagonal([5.0, 5.0, 5.0, 5.0, 5.0, 0.05]),
            kd: GainSpec::Diagonal([10.0, 10.0, 10.0, 10.0, 10.0, 0.005]),
            cp: GainSpec::Scalar(1.0),
            cd: GainSpec::Scalar(6.0),
            cs: GainSpec::Scalar(0.05),
            sigma: 0.3,
        }
    }
}

/// Validated controller gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub kp: Matrix6<f64>,
    pub kd: Matrix6<f64>,
    pub cp: Matrix6<f64>,
    pub cd: Matrix6<f64>,
    pub cs: Matrix6<f64>,
    pub sigma: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self::from_config(&GainConfig::default()).expect("default gains are SPD")
    }
}

impl ControllerGains {
    pub fn new(
        kp: Matrix6<f64>,
        kd: Matrix6<f64>,
        cp: Matrix6<f64>,
        cd: Matrix6<f64>,
        cs: Matrix6<f64>,
        sigma: f64,
    ) -> Result<Self> {
        for (name, m) in [("kp", &kp), ("kd", &kd), ("cp", &cp), ("cd", &cd), ("cs", &cs)] {
            check_spd(name, m)?;
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(AcmError::config("gains.sigma", "must be finite and > 0"));
        }
        Ok(Self { kp, kd, cp, cd, cs, sigma })
    }

    pub fn from_config(c: &GainConfig) -> Result<Self> {
        Self::new(c.kp.matrix(), c.kd.matrix(), c.cp.matrix(), c.cd.matrix(), c.cs.matrix(), c.sigma)
    }
}

fn check_spd(name: &str, m: &Matrix6<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(AcmError::config(format!("gains.{name}"), "entries must be finite"));
    }
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * m.abs().max().max(1.0) {
        return Err(AcmError::config(format!("gains.{name}"), "must be symmetric"));
    }
    let lo = m.symmetric_eigenvalues().min();
    if !(lo > 0.0) {
        return Err(AcmError::config(
            format!("gains.{name}"),
            format!("must be positive definite (smallest eigenvalue {lo:.3e})"),
        ));
    }
    Ok(())
}

/// How the tip twist is mapped into the twist fed to `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaConvention {
    /// Inertial twist rotated into the camera frame.
    #[default]
    CameraFrame,
    /// `blockdiag(T_e, T_e)^-1` with `T_e` the Euler-rate map of the base attitude.
    PaperLiteral,
}

/// `6 x 8` Jacobian from `qdot` to the twist seen by the interaction matrix.
pub fn task_jacobian(
    model: &AcmModel,
    state: &GeneralizedState,
    camera_rotation: &Matrix3<f64>,
    ta: TaConvention,
) -> Result<Jacobian> {
    let jt = model.tip_jacobian(state)?;
    let r = match ta {
        TaConvention::CameraFrame => camera_rotation.transpose(),
        TaConvention::PaperLiteral => {
            let euler = state.euler();
            euler_rate_map(&euler)?
                .try_inverse()
                .ok_or(AcmError::GimbalLock { pitch: euler.y })?
        }
    };
    let mut out = Jacobian::zeros();
    out.fixed_view_mut::<3, 8>(0, 0).copy_from(&(r * jt.fixed_rows::<3>(0)));
    out.fixed_view_mut::<3, 8>(3, 0).copy_from(&(r * jt.fixed_rows::<3>(3)));
    Ok(out)
}

/// Moore-Penrose pseudoinverse of `L`, or `None` when `L` is rank deficient.
pub fn interaction_pinv(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if l.ncols() != 6 || l.nrows() < 6 {
        return None;
    }
    let svd = l.clone().svd(true, true);
    let hi = svd.singular_values.max();
    let lo = svd.singular_values.min();
    if !(hi > 0.0) || lo / hi < RANK_TOLERANCE {
        return None;
    }
    svd.pseudo_inverse(0.0).ok()
}

/// 6-dimensional task error and its rate: `(L+ e, L+ e_dot)`.
pub fn reduce_error(pinv: &DMatrix<f64>, e: &DVector<f64>, edot: &DVector<f64>) -> Result<(Vector6<f64>, Vector6<f64>)> {
    if e.len() != pinv.ncols() || edot.len() != pinv.ncols() {
        return Err(AcmError::Dimension {
            expected: pinv.ncols(),
            got: e.len().max(edot.len()),
        });
    }
    let et = pinv * e;
    let edt = pinv * edot;
    Ok((Vector6::from_iterator(et.iter().copied()), Vector6::from_iterator(edt.iter().copied())))
}

/// `e_a = C_d e_dot + C_p e + C_s tanh(e / sigma)`.
pub fn dpd_sm_term(e: &Vector6<f64>, edot: &Vector6<f64>, gains: &ControllerGains) -> Vector6<f64> {
    let sat = e.map(|v| (v / gains.sigma).tanh());
    gains.cd * edot + gains.cp * e + gains.cs * sat
}

/// `tau = G + J' (K_p e_a - K_d J qdot)`.
pub fn control_torque(
    model: &AcmModel,
    state: &GeneralizedState,
    j_task: &Jacobian,
    e_a: &Vector6<f64>,
    gains: &ControllerGains,
) -> Result<Vector8> {
    let g = model.gravity_vector(state)?;
    let vc = j_task * state.qdot;
    Ok(g + j_task.transpose() * (gains.kp * e_a - gains.kd * vc))
}

/// Inertia-weighted null-space projector `N = I - M^-1 J' (J M^-1 J')^-1 J`.
///
/// `N' tau` produces no task-space acceleration.
pub fn null_space_projector(m: &Matrix8, j_task: &Jacobian) -> Result<Matrix8> {
    let singular = || AcmError::SingularDynamics {
        condition: f64::INFINITY,
    };
    let m_inv = m.cholesky().ok_or_else(singular)?.inverse();
    let lambda = (j_task * m_inv * j_task.transpose())
        .try_inverse()
        .ok_or_else(singular)?;
    let jbar = m_inv * j_task.transpose() * lambda;
    Ok(Matrix8::identity() - jbar * j_task)
}

/// Posture regulation restricted to the null space of the task:
/// `N' (-c M qdot - K (q - q_ref))`.
pub fn null_space_torque(
    m: &Matrix8,
    j_task: &Jacobian,
    state: &GeneralizedState,
    damping: f64,
    stiffness: &Vector8,
    q_ref: &Vector8,
) -> Result<Vector8> {
    if damping == 0.0 && stiffness.iter().all(|&k| k == 0.0) {
        return Ok(Vector8::zeros());
    }
    let n = null_space_projector(m, j_task)?;
    let tau0 = -(m * state.qdot) * damping - stiffness.component_mul(&(state.q - q_ref));
    Ok(n.transpose() * tau0)
}

/// `V = 1/2 qdot' M qdot + 1/2 e_a' K_p e_a`.
pub fn lyapunov(m: &Matrix8, qdot: &Vector8, e_a: &Vector6<f64>, gains: &ControllerGains) -> f64 {
    0.5 * qdot.dot(&(m * qdot)) + 0.5 * e_a.dot(&(gains.kp * e_a))
}

/// Convenience wrapper evaluating `V` with the mass matrix of `mode`.
pub fn lyapunov_value(
    model: &AcmModel,
    state: &GeneralizedState,
    mode: ModelMode,
    e_a: &Vector6<f64>,
    gains: &ControllerGains,
) -> Result<f64> {
    let m = model.mass_matrix(state, mode)?;
    Ok(lyapunov(&m, &state.qdot, e_a, gains))
}

/// Bound `R_max = |C_d| L3 + |C_p| L2 + |C_s| L2 / sigma` (spectral norms).
pub fn r_max(gains: &ControllerGains, l2: f64, l3: f64) -> f64 {
    let n = |m: &Matrix6<f64>| m.symmetric_eigenvalues().abs().max();
    n(&gains.cd) * l3 + n(&gains.cp) * l2 + n(&gains.cs) * l2 / gains.sigma
}

/// Ultimate-bound set test: `1/2 v_c' K_d v_c + lambda |e_a|^2 <= |K_p|^2 R_max^2 / (2 lambda)`.
pub fn in_bound_set(vc: &Vector6<f64>, e_a: &Vector6<f64>, gains: &ControllerGains, lambda: f64, r_max: f64) -> bool {
    let kp = gains.kp.symmetric_eigenvalues().abs().max();
    let lhs = 0.5 * vc.dot(&(gains.kd * vc)) + lambda * e_a.norm_squared();
    lhs <= kp * kp * r_max * r_max / (2.0 * lambda)
}
