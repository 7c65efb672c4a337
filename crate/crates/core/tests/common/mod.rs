//! Independent reference computations for the integration tests. Nothing here
//! calls into the model except to read parameters.

#![allow(dead_code)]

use acm_sim::dynamics::AcmParams;
use acm_sim::kinematics::GeneralizedState;
use nalgebra::{Matrix3, Rotation3, SMatrix, Vector3, Vector6};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub type Vector8 = nalgebra::SVector<f64, 8>;
pub type Matrix8 = SMatrix<f64, 8, 8>;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random state with moderate attitude and curvature well away from zero.
pub fn random_state(rng: &mut impl Rng) -> GeneralizedState {
    let mut q = Vector8::zeros();
    for i in 0..3 {
        q[i] = rng.random_range(-2.0..2.0);
    }
    q[3] = rng.random_range(-0.7..0.7);
    q[4] = rng.random_range(-0.7..0.7);
    q[5] = rng.random_range(-3.1..3.1);
    let k: f64 = rng.random_range(0.02..2.5);
    q[6] = if rng.random_bool(0.5) { k } else { -k };
    q[7] = rng.random_range(-3.1..3.1);
    let qdot = Vector8::from_fn(|_, _| rng.random_range(-1.0..1.0));
    GeneralizedState { q, qdot }
}

pub fn base_rot(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    Rotation3::from_euler_angles(roll, pitch, yaw).into_inner()
}

/// Circular arc of curvature `k` (nonzero) in the plane at angle `psi`.
pub fn arc(s: f64, k: f64, psi: f64) -> Vector3<f64> {
    let r = (1.0 - (k * s).cos()) / k;
    Vector3::new(r * psi.cos(), r * psi.sin(), (k * s).sin() / k)
}

pub fn section_rot(s: f64, k: f64, psi: f64) -> Matrix3<f64> {
    let z = Rotation3::from_axis_angle(&Vector3::z_axis(), psi);
    let y = Rotation3::from_axis_angle(&Vector3::y_axis(), k * s);
    (z * y).into_inner()
}

pub fn mount() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
}

/// Inertial pose of the backbone point `s` for generalized coordinates `q`.
pub fn point_pose(q: &Vector8, s: f64) -> (Vector3<f64>, Matrix3<f64>) {
    let rb = base_rot(q[3], q[4], q[5]);
    let p = Vector3::new(q[0], q[1], q[2]) + rb * mount() * arc(s, q[6], q[7]);
    (p, rb * mount() * section_rot(s, q[6], q[7]))
}

/// Log map via `atan2`, accurate for the tiny rotations of finite differences.
pub fn log_so3(r: &Matrix3<f64>) -> Vector3<f64> {
    let v = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
    let sin = v.norm();
    if sin == 0.0 {
        return Vector3::zeros();
    }
    let theta = sin.atan2(0.5 * (r.trace() - 1.0));
    v * (theta / sin)
}

/// Central-difference twist `(v, omega)` of a pose function along `qdot`.
pub fn fd_twist(
    pose: impl Fn(&Vector8) -> (Vector3<f64>, Matrix3<f64>),
    q: &Vector8,
    qdot: &Vector8,
    h: f64,
) -> Vector6<f64> {
    let (pa, ra) = pose(&(q + qdot * h));
    let (pb, rb) = pose(&(q - qdot * h));
    let v = (pa - pb) / (2.0 * h);
    let w = log_so3(&(ra * rb.transpose())) / (2.0 * h);
    Vector6::new(v.x, v.y, v.z, w.x, w.y, w.z)
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

pub fn area(p: &AcmParams) -> f64 {
    std::f64::consts::PI * p.r_a * p.r_a
}

pub fn second_moment(p: &AcmParams) -> f64 {
    std::f64::consts::PI * p.r_a.powi(4) / 4.0
}

/// Total kinetic energy from differentiated point positions and base attitude.
pub fn kinetic_energy(p: &AcmParams, q: &Vector8, qdot: &Vector8) -> f64 {
    let h = 1e-6;
    let (qa, qb) = (q + qdot * h, q - qdot * h);
    let ra = base_rot(qa[3], qa[4], qa[5]);
    let rb = base_rot(qb[3], qb[4], qb[5]);
    let w_world = log_so3(&(ra * rb.transpose())) / (2.0 * h);
    let w_body = base_rot(q[3], q[4], q[5]).transpose() * w_world;
    let inertia = Matrix3::from_fn(|i, j| p.inertia_u[i][j]);
    let v = Vector3::new(qdot[0], qdot[1], qdot[2]);
    let body = 0.5 * p.m_u * v.norm_squared() + 0.5 * w_body.dot(&(inertia * w_body));
    let arm = simpson(0.0, p.l_a, 400, |s| {
        ((point_pose(&qa, s).0 - point_pose(&qb, s).0) / (2.0 * h)).norm_squared()
    });
    body + 0.5 * p.rho * area(p) * arm
}

/// Mass matrix as the Hessian of the kinetic energy in `qdot`, by polarization.
pub fn mass_matrix(p: &AcmParams, q: &Vector8) -> Matrix8 {
    let e = |i: usize| Vector8::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
    let diag: Vec<f64> = (0..8).map(|i| kinetic_energy(p, q, &e(i))).collect();
    let mut m = Matrix8::zeros();
    for i in 0..8 {
        m[(i, i)] = 2.0 * diag[i];
        for j in 0..i {
            let v = kinetic_energy(p, q, &(e(i) + e(j))) - diag[i] - diag[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Gravitational plus bending energy.
pub fn potential_energy(p: &AcmParams, q: &Vector8) -> f64 {
    let heights = simpson(0.0, p.l_a, 400, |s| point_pose(q, s).0.z);
    p.m_u * p.g * q[2]
        + p.rho * area(p) * p.g * heights
        + 0.5 * p.young_modulus * second_moment(p) * p.l_a * q[6] * q[6]
}

pub fn grad(f: impl Fn(&Vector8) -> f64, q: &Vector8, h: f64) -> Vector8 {
    Vector8::from_fn(|i, _| {
        let (mut a, mut b) = (*q, *q);
        a[i] += h;
        b[i] -= h;
        (f(&a) - f(&b)) / (2.0 * h)
    })
}

pub fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(1e-12)
}
