//! Euler-Lagrange dynamics of the aerial continuum manipulator.
//!
//! The mass matrix is the Hessian of the kinetic energy
//! `K = 1/2 m_u |p_dot|^2 + 1/2 w_b' I_u w_b + 1/2 rho A int_0^l |p_s_dot|^2 ds`.
//! The backbone integrals are evaluated once per curvature value by
//! Gauss-Legendre quadrature on the planar (`psi_a = 0`) arc and rotated into
//! place; every attitude dependence is then closed-form. The Coriolis matrix
//! comes from Christoffel symbols of the first kind with central-difference
//! partials of `M`.
//!
//! Decoupled mode assembles only the UAV (6x6) and arm (2x2) diagonal blocks
//! and never touches the cross-block integrals.

use crate::error::{AcmError, Result};
use crate::kinematics::{
    base_rotation, euler_rate_map, idx, regularize_curvature, rot_z, skew,
    ArmGeometry, ArmMount, EulerRateConvention, GeneralizedState, Jacobian, Matrix3x2, Matrix8,
    Vector6, Vector8,
};
use crate::quadrature::GaussLegendre;
use nalgebra::{Cholesky, Matrix2, Matrix3, SMatrix, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Step of the central differences used for `dM/dq`.
pub const FD_STEP: f64 = 1e-6;

/// Condition-number estimate above which `M` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Physical constants of the UAV and the arm backbone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcmParams {
    /// UAV mass [kg].
    pub m_u: f64,
    /// UAV inertia in the body frame [kg m^2], row-major.
    pub inertia_u: [[f64; 3]; 3],
    /// Arm length [m].
    pub l_a: f64,
    /// Backbone radius [m].
    pub r_a: f64,
    /// Backbone density [kg/m^3].
    pub rho: f64,
    /// Young's modulus [Pa].
    pub young_modulus: f64,
    /// Gravitational acceleration [m/s^2].
    pub g: f64,
    /// Curvature threshold [1/m].
    pub kappa_s: f64,
    /// Gauss-Legendre order for the backbone integrals.
    pub quad_nodes: usize,
    /// Body-frame offset of the arm base [m].
    pub mount_offset: [f64; 3],
    /// Arm hangs below the body (`true`) or points along body `+z`.
    pub mount_downward: bool,
    /// Use the printed inverse Euler-rate map in the Jacobian's attitude columns.
    pub paper_literal_te: bool,
}

impl Default for AcmParams {
    fn default() -> Self {
        Self {
            m_u: 2.0,
            inertia_u: [[0.02, 0.0, 0.0], [0.0, 0.02, 0.0], [0.0, 0.0, 0.04]],
            l_a: 1.0,
            r_a: 5e-3,
            rho: 6450.0,
            young_modulus: 40e9,
            g: 9.81,
            kappa_s: crate::kinematics::DEFAULT_KAPPA_S,
            quad_nodes: 16,
            mount_offset: [0.0; 3],
            mount_downward: true,
            paper_literal_te: false,
        }
    }
}

impl AcmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_u", self.m_u),
            ("l_a", self.l_a),
            ("r_a", self.r_a),
            ("rho", self.rho),
            ("young_modulus", self.young_modulus),
            ("g", self.g),
            ("kappa_s", self.kappa_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(AcmError::config(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.quad_nodes == 0 || self.quad_nodes > 256 {
            return Err(AcmError::config("quad_nodes", "must be in 1..=256"));
        }
        if self.mount_offset.iter().any(|v| !v.is_finite()) {
            return Err(AcmError::config("mount_offset", "must be finite"));
        }
        let i = self.inertia();
        if (i - i.transpose()).abs().max() > 1e-12 * i.abs().max() {
            return Err(AcmError::config("inertia_u", "must be symmetric"));
        }
        if i.iter().any(|v| !v.is_finite()) || Cholesky::new(i).is_none() {
            return Err(AcmError::config("inertia_u", "must be positive definite"));
        }
        Ok(())
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.inertia_u[r][c])
    }

    /// Cross-section area `pi r_a^2`.
    pub fn area(&self) -> f64 {
        PI * self.r_a * self.r_a
    }

    /// Second moment of area `pi r_a^4 / 4`.
    pub fn second_moment(&self) -> f64 {
        PI * self.r_a.powi(4) / 4.0
    }

    pub fn arm_mass(&self) -> f64 {
        self.rho * self.area() * self.l_a
    }

    pub fn mount(&self) -> ArmMount {
        let mut m = if self.mount_downward {
            ArmMount::downward()
        } else {
            ArmMount::aligned()
        };
        m.offset = Vector3::from(self.mount_offset);
        m
    }

    pub fn geometry(&self) -> ArmGeometry {
        ArmGeometry {
            length: self.l_a,
            kappa_s: self.kappa_s,
            mount: self.mount(),
            euler_convention: if self.paper_literal_te {
                EulerRateConvention::PaperLiteral
            } else {
                EulerRateConvention::Consistent
            },
        }
    }
}

/// Coupled (full inertia) or decoupled (cross blocks removed) model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    Coupled,
    Decoupled,
}

impl ModelMode {
    pub fn is_coupled(self) -> bool {
        matches!(self, ModelMode::Coupled)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelMode::Coupled => "coupled",
            ModelMode::Decoupled => "decoupled",
        }
    }
}

impl std::fmt::Display for ModelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelMode {
    type Err = AcmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(ModelMode::Coupled),
            "decoupled" => Ok(ModelMode::Decoupled),
            _ => Err(AcmError::config("model", format!("unknown mode `{s}`"))),
        }
    }
}

/// `M`, `C` and `G` at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsMatrices {
    pub m: Matrix8,
    pub c: Matrix8,
    pub g: Vector8,
    pub mode: ModelMode,
}

/// Tip wrench `(force, moment)` in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExternalWrench(pub Vector6);

impl ExternalWrench {
    pub fn zero() -> Self {
        Self(Vector6::zeros())
    }

    pub fn new(force: Vector3<f64>, moment: Vector3<f64>) -> Result<Self> {
        let w = Vector6::new(force.x, force.y, force.z, moment.x, moment.y, moment.z);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(AcmError::Domain("external wrench must be finite".into()));
        }
        Ok(Self(w))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }
}

/// Backbone integrals on the planar arc (`psi_a = 0`), arm-base frame, per unit `rho A`.
#[derive(Debug, Clone, Copy)]
struct PlanarIntegrals {
    first: Vector3<f64>,
    second: Matrix3<f64>,
    jac: Matrix3x2,
    /// `int [F]x J ds`; only filled in coupled mode.
    lever_jac: Matrix3x2,
    arm_inertia: Matrix2<f64>,
}

/// Body-frame backbone moments for one `(kappa, psi_a)`.
#[derive(Debug, Clone, Copy)]
struct BodyMoments {
    first: Vector3<f64>,
    second: Matrix3<f64>,
    jac: Matrix3x2,
    lever_jac: Matrix3x2,
    arm_inertia: Matrix2<f64>,
}

/// Validated parameters plus the prepared quadrature rule.
#[derive(Debug, Clone)]
pub struct AcmModel {
    params: AcmParams,
    geometry: ArmGeometry,
    nodes: Vec<(f64, f64)>,
    inertia_u: Matrix3<f64>,
    rho_a: f64,
    bending_stiffness: f64,
}

impl AcmModel {
    pub fn new(params: AcmParams) -> Result<Self> {
        params.validate()?;
        let rule = GaussLegendre::new(params.quad_nodes)?;
        let nodes = rule.scaled(0.0, params.l_a).collect();
        Ok(Self {
            geometry: params.geometry(),
            inertia_u: params.inertia(),
            rho_a: params.rho * params.area(),
            bending_stiffness: params.young_modulus * params.second_moment(),
            nodes,
            params,
        })
    }

    pub fn params(&self) -> &AcmParams {
        &self.params
    }

    pub fn geometry(&self) -> &ArmGeometry {
        &self.geometry
    }

    /// The stable arc forms are exact through `kappa = 0`, so the integrals use the
    /// raw curvature; only the bending-plane inertia, which vanishes like `kappa^2`,
    /// is held at its `|kappa| = kappa_s` value inside the threshold band.
    fn planar(&self, kappa: f64, coupled: bool) -> PlanarIntegrals {
        let mut first = Vector3::zeros();
        let mut second = Matrix3::zeros();
        let mut jac = Matrix3x2::zeros();
        let mut lever_jac = Matrix3x2::zeros();
        let mut arm_inertia = Matrix2::zeros();
        for &(s, w) in &self.nodes {
            let f = crate::kinematics::arc_map(s, kappa, 0.0);
            let j = crate::kinematics::arm_jacobian_translational(s, kappa, 0.0);
            first += w * f;
            second += (w * f) * f.transpose();
            jac += w * j;
            arm_inertia += w * (j.transpose() * j);
            if coupled {
                lever_jac += w * (skew(&f) * j);
            }
        }
        let kappa_floor = kappa.abs().max(self.params.kappa_s);
        if kappa_floor != kappa.abs() {
            arm_inertia[(1, 1)] = self
                .nodes
                .iter()
                .map(|&(s, w)| {
                    let c = crate::kinematics::arm_jacobian_translational(s, kappa_floor, 0.0)[(1, 1)];
                    w * c * c
                })
                .sum();
        }
        PlanarIntegrals {
            first,
            second,
            jac,
            lever_jac,
            arm_inertia,
        }
    }

    fn body_moments(&self, p: &PlanarIntegrals, psi_a: f64, coupled: bool) -> BodyMoments {
        let mount = &self.geometry.mount;
        let rot = mount.rotation * rot_z(psi_a);
        let po = mount.offset;
        let l = self.params.l_a;
        let f1 = rot * p.first;
        let jac = rot * p.jac;
        let second = l * po * po.transpose()
            + po * f1.transpose()
            + f1 * po.transpose()
            + rot * p.second * rot.transpose();
        let lever_jac = if coupled {
            skew(&po) * jac + rot * p.lever_jac
        } else {
            Matrix3x2::zeros()
        };
        BodyMoments {
            first: l * po + f1,
            second,
            jac,
            lever_jac,
            arm_inertia: p.arm_inertia,
        }
    }

    fn moments_at(&self, kappa: f64, psi_a: f64, coupled: bool) -> BodyMoments {
        self.body_moments(&self.planar(kappa, coupled), psi_a, coupled)
    }

    fn assemble(&self, euler: &Vector3<f64>, mo: &BodyMoments, coupled: bool) -> Result<Matrix8> {
        let rb = base_rotation(euler);
        let w = euler_rate_map(euler)?;
        let e = rb.transpose() * w;
        let ra = self.rho_a;
        let l = self.params.l_a;

        let mut m = Matrix8::zeros();
        let m_tot = self.params.m_u + ra * l;
        for i in 0..3 {
            m[(i, i)] = m_tot;
        }
        let m_pa = rb * (-ra * skew(&mo.first)) * e;
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&m_pa);
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&m_pa.transpose());
        let rot_inertia = self.inertia_u
            + ra * (Matrix3::identity() * mo.second.trace() - mo.second);
        let m_aa = e.transpose() * rot_inertia * e;
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&m_aa);
        m.fixed_view_mut::<2, 2>(6, 6).copy_from(&(ra * mo.arm_inertia));
        if coupled {
            let m_pk = ra * rb * mo.jac;
            let m_ok = ra * e.transpose() * mo.lever_jac;
            m.fixed_view_mut::<3, 2>(0, 6).copy_from(&m_pk);
            m.fixed_view_mut::<2, 3>(6, 0).copy_from(&m_pk.transpose());
            m.fixed_view_mut::<3, 2>(3, 6).copy_from(&m_ok);
            m.fixed_view_mut::<2, 3>(6, 3).copy_from(&m_ok.transpose());
        }
        Ok(m)
    }

    /// Generalized mass matrix.
    pub fn mass_matrix(&self, state: &GeneralizedState, mode: ModelMode) -> Result<Matrix8> {
        let coupled = mode.is_coupled();
        let mo = self.moments_at(state.q[idx::KAPPA], state.q[idx::PSI_A], coupled);
        self.assemble(&state.euler(), &mo, coupled)
    }

    /// Mass matrix and its partials `dM/dq_k` (zero for the base position).
    fn mass_and_partials(
        &self,
        q: &Vector8,
        coupled: bool,
    ) -> Result<(Matrix8, [Matrix8; 8], BodyMoments)> {
        let h = FD_STEP;
        let euler = Vector3::new(q[3], q[4], q[5]);
        let kappa = q[idx::KAPPA];
        let psi_a = q[idx::PSI_A];
        let p0 = self.planar(kappa, coupled);
        let mo = self.body_moments(&p0, psi_a, coupled);
        let m = self.assemble(&euler, &mo, coupled)?;

        let mut d = [Matrix8::zeros(); 8];
        for k in 3..6 {
            let mut ep = euler;
            let mut em = euler;
            ep[k - 3] += h;
            em[k - 3] -= h;
            d[k] = (self.assemble(&ep, &mo, coupled)? - self.assemble(&em, &mo, coupled)?)
                / (2.0 * h);
        }
        let pp = self.planar(kappa + h, coupled);
        let pm = self.planar(kappa - h, coupled);
        d[idx::KAPPA] = (self.assemble(&euler, &self.body_moments(&pp, psi_a, coupled), coupled)?
            - self.assemble(&euler, &self.body_moments(&pm, psi_a, coupled), coupled)?)
            / (2.0 * h);
        d[idx::PSI_A] = (self.assemble(
            &euler,
            &self.body_moments(&p0, psi_a + h, coupled),
            coupled,
        )? - self.assemble(
            &euler,
            &self.body_moments(&p0, psi_a - h, coupled),
            coupled,
        )?) / (2.0 * h);
        Ok((m, d, mo))
    }

    /// `C = 1/2 (M_dot + P - P')` with `P[:, j] = dM/dq_j qdot`.
    fn christoffel(partials: &[Matrix8; 8], qdot: &Vector8) -> Matrix8 {
        let mut m_dot = Matrix8::zeros();
        let mut p = Matrix8::zeros();
        for (k, dk) in partials.iter().enumerate() {
            if qdot[k] != 0.0 {
                m_dot += dk * qdot[k];
            }
            p.set_column(k, &(dk * qdot));
        }
        (m_dot + p - p.transpose()) * 0.5
    }

    /// Coriolis/centrifugal matrix.
    pub fn coriolis_matrix(&self, state: &GeneralizedState, mode: ModelMode) -> Result<Matrix8> {
        let coupled = mode.is_coupled();
        let (_, d, _) = self.mass_and_partials(&state.q, coupled)?;
        let mut c = Self::christoffel(&d, &state.qdot);
        if !coupled {
            zero_cross_blocks(&mut c);
        }
        Ok(c)
    }

    /// Gradient of the potential energy (gravity plus bending).
    pub fn gravity_vector(&self, state: &GeneralizedState) -> Result<Vector8> {
        let p = self.planar(state.q[idx::KAPPA], false);
        let mo = self.body_moments(&p, state.q[idx::PSI_A], false);
        self.gravity_from(state, &mo)
    }

    fn gravity_from(&self, state: &GeneralizedState, mo: &BodyMoments) -> Result<Vector8> {
        let euler = state.euler();
        let rb = base_rotation(&euler);
        let w = euler_rate_map(&euler)?;
        let g = self.params.g;
        let ra = self.rho_a;
        let ez = Vector3::z();
        let mut out = Vector8::zeros();
        out[idx::Z] = (self.params.m_u + ra * self.params.l_a) * g;
        let g_att = ra * g * w.transpose() * (rb * mo.first).cross(&ez);
        out.fixed_rows_mut::<3>(3).copy_from(&g_att);
        let g_arm = ra * g * mo.jac.transpose() * rb.transpose() * ez;
        out[idx::KAPPA] = g_arm[0] + self.bending_stiffness * self.params.l_a * state.q[idx::KAPPA];
        out[idx::PSI_A] = g_arm[1];
        Ok(out)
    }

    /// `M`, `C`, `G` for the selected model.
    pub fn matrices(&self, state: &GeneralizedState, mode: ModelMode) -> Result<DynamicsMatrices> {
        let coupled = mode.is_coupled();
        let (m, d, mo) = self.mass_and_partials(&state.q, coupled)?;
        let mut c = Self::christoffel(&d, &state.qdot);
        if !coupled {
            zero_cross_blocks(&mut c);
        }
        let g = self.gravity_from(state, &mo)?;
        Ok(DynamicsMatrices { m, c, g, mode })
    }

    /// Kinetic energy `1/2 qdot' M qdot` of the selected model.
    pub fn kinetic_energy(&self, state: &GeneralizedState, mode: ModelMode) -> Result<f64> {
        let m = self.mass_matrix(state, mode)?;
        Ok(0.5 * state.qdot.dot(&(m * state.qdot)))
    }

    /// Gravitational plus elastic potential energy.
    pub fn potential_energy(&self, state: &GeneralizedState) -> Result<f64> {
        let mo = self.moments_at(state.q[idx::KAPPA], state.q[idx::PSI_A], false);
        Ok(self.potential_from(state, &mo))
    }

    fn potential_from(&self, state: &GeneralizedState, mo: &BodyMoments) -> f64 {
        let rb = base_rotation(&state.euler());
        let g = self.params.g;
        let z = state.q[idx::Z];
        let kappa = state.q[idx::KAPPA];
        self.params.m_u * g * z
            + self.rho_a * g * (self.params.l_a * z + (rb * mo.first).z)
            + 0.5 * self.bending_stiffness * self.params.l_a * kappa * kappa
    }

    /// `(K, U)` of the selected model.
    pub fn energies(&self, state: &GeneralizedState, mode: ModelMode) -> Result<(f64, f64)> {
        let coupled = mode.is_coupled();
        let mo = self.moments_at(state.q[idx::KAPPA], state.q[idx::PSI_A], coupled);
        let m = self.assemble(&state.euler(), &mo, coupled)?;
        Ok((
            0.5 * state.qdot.dot(&(m * state.qdot)),
            self.potential_from(state, &mo),
        ))
    }

    /// Tip Jacobian of the configured geometry.
    pub fn tip_jacobian(&self, state: &GeneralizedState) -> Result<Jacobian> {
        self.geometry.tip_jacobian(state)
    }

    /// `qddot = M^-1 (tau - J_t' F_e - C qdot - G)`.
    pub fn forward_dynamics(
        &self,
        state: &GeneralizedState,
        tau: &Vector8,
        wrench: &ExternalWrench,
        mode: ModelMode,
    ) -> Result<Vector8> {
        let coupled = mode.is_coupled();
        let (m, d, mo) = self.mass_and_partials(&state.q, coupled)?;
        let mut c = Self::christoffel(&d, &state.qdot);
        if !coupled {
            zero_cross_blocks(&mut c);
        }
        let g = self.gravity_from(state, &mo)?;
        let mut rhs = tau - c * state.qdot - g;
        if !wrench.is_zero() {
            rhs -= self.tip_jacobian(state)?.transpose() * wrench.0;
        }
        let out = if coupled {
            let (x, lo, hi) = spd_solve::<8>(&m, &rhs)?;
            check_condition(lo, hi)?;
            x
        } else {
            let muu = m.fixed_view::<6, 6>(0, 0).into_owned();
            let maa = m.fixed_view::<2, 2>(6, 6).into_owned();
            let (xu, lo_u, hi_u) = spd_solve::<6>(&muu, &rhs.fixed_rows::<6>(0).into_owned())?;
            let (xa, lo_a, hi_a) = spd_solve::<2>(&maa, &rhs.fixed_rows::<2>(6).into_owned())?;
            check_condition(lo_u.min(lo_a), hi_u.max(hi_a))?;
            let mut out = Vector8::zeros();
            out.fixed_rows_mut::<6>(0).copy_from(&xu);
            out.fixed_rows_mut::<2>(6).copy_from(&xa);
            out
        };
        Ok(out)
    }

    /// Printed closed-form coupling entries `(M17, M18)` at arc length `s`,
    /// evaluated verbatim with `l = l_a`.
    pub fn appendix_b_reference(&self, state: &GeneralizedState, s: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.params.l_a).contains(&s) {
            return Err(AcmError::Domain(format!("arc length {s} outside [0, {}]", self.params.l_a)));
        }
        let kappa = regularize_curvature(state.q[idx::KAPPA], self.params.kappa_s)?;
        Ok(printed_coupling_entries(
            kappa,
            s,
            self.params.l_a,
            self.params.r_a,
            self.params.rho,
            &state.euler(),
            state.q[idx::PSI_A],
        ))
    }

    /// Pointwise integrands of the quadrature-assembled `M17`, `M18`:
    /// `rho A [R_B R_mount J_pa(s)]_{x, (kappa, psi_a)}`.
    pub fn coupling_integrands(&self, state: &GeneralizedState, s: f64) -> Result<(f64, f64)> {
        let kappa = regularize_curvature(state.q[idx::KAPPA], self.params.kappa_s)?;
        let rb = base_rotation(&state.euler());
        let j = rb
            * self.geometry.mount.rotation
            * crate::kinematics::arm_jacobian_translational(s, kappa, state.q[idx::PSI_A]);
        Ok((self.rho_a * j[(0, 0)], self.rho_a * j[(0, 1)]))
    }
}

/// The two printed coupling expressions, with `l` the arm length.
pub fn printed_coupling_entries(
    kappa: f64,
    s: f64,
    l: f64,
    r_a: f64,
    rho: f64,
    euler: &Vector3<f64>,
    psi_a: f64,
) -> (f64, f64) {
    let (sphi, cphi) = euler.x.sin_cos();
    let (sth, cth) = euler.y.sin_cos();
    let (spsi, cpsi) = euler.z.sin_cos();
    let (spa, cpa) = psi_a.sin_cos();
    let arg = kappa * s / l;
    let (sa, ca) = arg.sin_cos();
    let pre17 = r_a * r_a * rho * PI / (kappa * kappa);
    let bend = l * ca - l + kappa * s * sa;
    let m17 = pre17
        * ((l * sa - kappa * s * ca) * (sphi * spsi + cphi * cpsi * sth)
            - spa * (cphi * spsi - cpsi * sphi * sth) * bend
            + cpa * cpsi * cth * bend);
    let m18 = l * r_a * r_a * rho * PI / kappa
        * (ca - 1.0)
        * (cphi * cpa * spsi + cpsi * cth * spa - cpa * cpsi * sphi * sth);
    (m17, m18)
}

/// Zero rows 0..6 x cols 6..8 and the transpose block.
pub fn zero_cross_blocks(m: &mut Matrix8) {
    m.fixed_view_mut::<6, 2>(0, 6).fill(0.0);
    m.fixed_view_mut::<2, 6>(6, 0).fill(0.0);
}

/// Decoupled copy of coupled matrices: cross blocks of `M` and `C` removed, `G` kept.
pub fn decouple(matrices: &DynamicsMatrices) -> DynamicsMatrices {
    let mut out = matrices.clone();
    zero_cross_blocks(&mut out.m);
    zero_cross_blocks(&mut out.c);
    out.mode = ModelMode::Decoupled;
    out
}

/// Squared ratio of the extreme Cholesky pivots; a cheap lower bound on `cond(M)`
/// that tracks it closely for the diagonally dominant ACM mass matrix.
pub fn condition_estimate<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    match Cholesky::new(*m) {
        Some(ch) => {
            let l = ch.l_dirty();
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for i in 0..N {
                let d = l[(i, i)].abs();
                lo = lo.min(d);
                hi = hi.max(d);
            }
            (hi / lo).powi(2)
        }
        None => f64::INFINITY,
    }
}

/// Cholesky solve; also returns the smallest and largest pivot.
fn spd_solve<const N: usize>(
    m: &SMatrix<f64, N, N>,
    rhs: &SMatrix<f64, N, 1>,
) -> Result<(SMatrix<f64, N, 1>, f64, f64)> {
    let ch = Cholesky::new(*m).ok_or(AcmError::SingularDynamics {
        condition: f64::INFINITY,
    })?;
    let l = ch.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..N {
        let d = l[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok((ch.solve(rhs), lo, hi))
}

fn check_condition(lo: f64, hi: f64) -> Result<()> {
    let cond = (hi / lo).powi(2);
    if cond <= MAX_CONDITION {
        Ok(())
    } else {
        Err(AcmError::SingularDynamics { condition: cond })
    }
}

/// Arm-only `(kappa, psi_a)` rates extracted from `q`.
pub fn arm_rates(qdot: &Vector8) -> Vector2<f64> {
    Vector2::new(qdot[idx::KAPPA], qdot[idx::PSI_A])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_state() -> GeneralizedState {
        let q = Vector8::from_column_slice(&[0.3, -0.2, 4.0, 0.15, -0.25, 0.7, 0.8, 0.4]);
        let qd = Vector8::from_column_slice(&[0.1, 0.3, -0.2, 0.5, -0.4, 0.2, 1.2, -0.7]);
        GeneralizedState::new(q, qd).unwrap()
    }

    #[test]
    fn defaults_validate_and_bad_radius_rejected() {
        AcmParams::default().validate().unwrap();
        let p = AcmParams {
            r_a: -1e-3,
            ..Default::default()
        };
        match p.validate() {
            Err(AcmError::Config { field, .. }) => assert_eq!(field, "r_a"),
            other => panic!("{other:?}"),
        }
        let p = AcmParams {
            inertia_u: [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn decoupled_mass_matrix_has_zero_cross_blocks() {
        let model = AcmModel::new(AcmParams::default()).unwrap();
        let st = sample_state();
        let md = model.mass_matrix(&st, ModelMode::Decoupled).unwrap();
        let mc = model.mass_matrix(&st, ModelMode::Coupled).unwrap();
        assert!(md.fixed_view::<6, 2>(0, 6).iter().all(|v| *v == 0.0));
        assert!(md.fixed_view::<2, 6>(6, 0).iter().all(|v| *v == 0.0));
        // diagonal blocks are identical
        let mut mc0 = mc;
        zero_cross_blocks(&mut mc0);
        assert!((mc0 - md).abs().max() < 1e-14);
        let c = model.coriolis_matrix(&st, ModelMode::Decoupled).unwrap();
        assert!(c.fixed_view::<6, 2>(0, 6).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn massless_arm_limit() {
        let p = AcmParams {
            rho: 1e-12,
            ..Default::default()
        };
        let model = AcmModel::new(p).unwrap();
        let m = model.mass_matrix(&sample_state(), ModelMode::Coupled).unwrap();
        assert!(m.fixed_view::<6, 2>(0, 6).abs().max() < 1e-14);
        for i in 0..3 {
            assert!((m[(i, i)] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn straight_level_gravity_is_total_weight() {
        let params = AcmParams::default();
        let model = AcmModel::new(params.clone()).unwrap();
        let st = GeneralizedState::hover(5.0, 0.0);
        let g = model.gravity_vector(&st).unwrap();
        let w = (params.m_u + params.arm_mass()) * params.g;
        assert!((g[idx::Z] - w).abs() < 1e-12);
        // only the regularized residual bend (kappa_s = 1e-4) produces a torque
        for i in 3..6 {
            assert!(g[i].abs() < 1e-3, "attitude component {i} = {}", g[i]);
        }
    }

    #[test]
    fn zero_velocity_has_zero_coriolis_force() {
        let model = AcmModel::new(AcmParams::default()).unwrap();
        let mut st = sample_state();
        st.qdot = Vector8::zeros();
        let c = model.coriolis_matrix(&st, ModelMode::Coupled).unwrap();
        assert_eq!(c * st.qdot, Vector8::zeros());
    }

    #[test]
    fn pure_translation_has_no_translational_coriolis_rows() {
        let model = AcmModel::new(AcmParams::default()).unwrap();
        let mut st = sample_state();
        st.qdot = Vector8::from_column_slice(&[1.0, -2.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let c = model.coriolis_matrix(&st, ModelMode::Coupled).unwrap();
        let f = c * st.qdot;
        assert!(f.fixed_rows::<3>(0).norm() < 1e-12);
    }

    #[test]
    fn decouple_is_structural_and_idempotent() {
        let model = AcmModel::new(AcmParams::default()).unwrap();
        let dm = model.matrices(&sample_state(), ModelMode::Coupled).unwrap();
        let d1 = decouple(&dm);
        assert_eq!(d1.m[(0, 6)], 0.0);
        assert_eq!(d1.m[(0, 7)], 0.0);
        assert!((d1.m - d1.m.transpose()).abs().max() < 1e-12);
        assert_eq!(d1.g, dm.g);
        let d2 = decouple(&d1);
        assert_eq!(d1, d2);
    }

    #[test]
    fn hover_compensation_is_an_equilibrium() {
        let model = AcmModel::new(AcmParams::default()).unwrap();
        let mut st = sample_state();
        st.qdot = Vector8::zeros();
        for mode in [ModelMode::Coupled, ModelMode::Decoupled] {
            let g = model.gravity_vector(&st).unwrap();
            let acc = model
                .forward_dynamics(&st, &g, &ExternalWrench::zero(), mode)
                .unwrap();
            assert!(acc.norm() < 1e-9, "{mode}: {acc}");
        }
    }

    #[test]
    fn near_massless_arm_is_singular() {
        let p = AcmParams {
            rho: 1e-9,
            ..Default::default()
        };
        let model = AcmModel::new(p).unwrap();
        let st = GeneralizedState::hover(1.0, 0.01);
        let r = model.forward_dynamics(
            &st,
            &Vector8::zeros(),
            &ExternalWrench::zero(),
            ModelMode::Coupled,
        );
        assert!(matches!(r, Err(AcmError::SingularDynamics { .. })));
    }

    #[test]
    fn printed_m18_vanishes_with_curvature() {
        let e = Vector3::new(0.1, 0.2, 0.3);
        let (_, a) = printed_coupling_entries(1e-3, 0.5, 1.0, 5e-3, 6450.0, &e, 0.4);
        let (_, b) = printed_coupling_entries(2e-3, 0.5, 1.0, 5e-3, 6450.0, &e, 0.4);
        assert!((b / a - 2.0).abs() < 1e-3);
    }
}
