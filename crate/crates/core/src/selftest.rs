//! Seeded finite-difference self-checks of the kinematics, the dynamics and the
//! camera model, as run by `acm-sim selftest`.

use crate::dynamics::{AcmModel, AcmParams, ModelMode};
use crate::error::Result;
use crate::kinematics::{
    arc_map, arm_jacobian_rotational, arm_jacobian_translational, base_rotation, idx, rot_x, rot_y, rot_z,
    rotation_vector, section_rotation, GeneralizedState, Pose, Vector8,
};
use crate::servo::{interaction_matrix, CameraIntrinsics, ImageFeatures};
use nalgebra::{Matrix3, Vector3, Vector6};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed error measure.
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
}

impl Check {
    fn new(name: &str, worst: f64, tolerance: f64, samples: usize) -> Self {
        Self {
            name: name.to_string(),
            passed: worst < tolerance,
            worst,
            tolerance,
            samples,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<28} worst {:.3e} < {:.1e} ({} samples)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.samples
        )
    }
}

/// Random state away from gimbal lock and outside the curvature threshold band.
pub fn random_state(rng: &mut impl Rng) -> GeneralizedState {
    let mut q = Vector8::zeros();
    for i in 0..3 {
        q[i] = rng.random_range(-1.0..1.0);
    }
    q[idx::ROLL] = rng.random_range(-0.6..0.6);
    q[idx::PITCH] = rng.random_range(-0.6..0.6);
    q[idx::YAW] = rng.random_range(-3.0..3.0);
    let k: f64 = rng.random_range(0.01..3.0);
    q[idx::KAPPA] = if rng.random_bool(0.5) { k } else { -k };
    q[idx::PSI_A] = rng.random_range(-3.0..3.0);
    let qdot = Vector8::from_fn(|_, _| rng.random_range(-1.0..1.0));
    GeneralizedState { q, qdot }
}

fn shifted(st: &GeneralizedState, h: f64) -> GeneralizedState {
    GeneralizedState {
        q: st.q + st.qdot * h,
        qdot: st.qdot,
    }
}

/// Central-difference inertial twist of `pose(q(t))` along `qdot`.
fn fd_twist(pose: impl Fn(&GeneralizedState) -> Result<Pose>, st: &GeneralizedState, h: f64) -> Result<Vector6<f64>> {
    let p = pose(&shifted(st, h))?;
    let m = pose(&shifted(st, -h))?;
    let v = (p.position - m.position) / (2.0 * h);
    let w = rotation_vector(&(p.rotation * m.rotation.transpose())) / (2.0 * h);
    Ok(Vector6::new(v.x, v.y, v.z, w.x, w.y, w.z))
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(1e-12)
}

/// Tip Jacobian against the differentiated forward kinematics, the arm
/// Jacobians against differentiated arc maps, and continuity across `kappa_s`.
pub fn jacobian_check(model: &AcmModel, rng: &mut impl Rng, n: usize) -> Result<Vec<Check>> {
    let g = model.geometry();
    let h = 1e-6;
    let (mut tip, mut jpa, mut joa) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n {
        let st = random_state(rng);
        let j = model.tip_jacobian(&st)?;
        let fd = fd_twist(|s| g.tip_pose(s), &st, h)?;
        let an = j * st.qdot;
        tip = tip.max(rel((an - fd).norm(), an.norm()));

        let s = rng.random_range(0.05..1.0) * g.length;
        let (k, p) = (st.q[idx::KAPPA], st.q[idx::PSI_A]);
        let jt = arm_jacobian_translational(s, k, p);
        let jr = arm_jacobian_rotational(s, p);
        for (c, (dk, dp)) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
            let fwd = arc_map(s, k + h * dk, p + h * dp);
            let bwd = arc_map(s, k - h * dk, p - h * dp);
            let col = (fwd - bwd) / (2.0 * h);
            jpa = jpa.max(rel((jt.column(c) - col).norm(), col.norm()));
            let rf = section_rotation(s, k + h * dk, p + h * dp);
            let rb = section_rotation(s, k - h * dk, p - h * dp);
            let w = rotation_vector(&(rf * rb.transpose())) / (2.0 * h);
            joa = joa.max(rel((jr.column(c) - w).norm(), w.norm()));
        }
    }
    let ks = g.kappa_s;
    let mut gap = 0.0f64;
    for _ in 0..n.min(50) {
        let mut st = random_state(rng);
        st.q[idx::KAPPA] = ks * (1.0 + 1e-12);
        let hi = model.tip_jacobian(&st)?;
        st.q[idx::KAPPA] = ks * (1.0 - 1e-12);
        let lo = model.tip_jacobian(&st)?;
        gap = gap.max((hi - lo).abs().max());
    }
    Ok(vec![
        Check::new("tip jacobian vs fd", tip, 1e-6, n),
        Check::new("arm J_p vs fd", jpa, 1e-6, n),
        Check::new("arm J_o vs fd", joa, 1e-6, n),
        Check::new("kappa_s continuity", gap, 1e-8, n.min(50)),
    ])
}

/// Composite Simpson rule on `[0, l]` with `n` (even) intervals.
fn simpson(l: f64, n: usize, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let h = l / n as f64;
    let mut acc = f(0.0)? + f(l)?;
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// Kinetic energy from differentiated point positions and base attitude.
pub fn kinetic_energy_oracle(model: &AcmModel, st: &GeneralizedState) -> Result<f64> {
    let p = model.params();
    let g = model.geometry();
    let h = 1e-6;
    let (fwd, bwd) = (shifted(st, h), shifted(st, -h));
    let rf = base_rotation(&fwd.euler());
    let rb = base_rotation(&bwd.euler());
    let w_world = rotation_vector(&(rf * rb.transpose())) / (2.0 * h);
    let w_body = base_rotation(&st.euler()).transpose() * w_world;
    let v = st.qdot.fixed_rows::<3>(0).into_owned();
    let body = 0.5 * p.m_u * v.norm_squared() + 0.5 * w_body.dot(&(p.inertia() * w_body));
    let arm = simpson(g.length, 400, |s| {
        let a = g.point_pose(&fwd, s)?;
        let b = g.point_pose(&bwd, s)?;
        Ok(((a.position - b.position) / (2.0 * h)).norm_squared())
    })?;
    Ok(body + 0.5 * p.rho * p.area() * arm)
}

/// `M` assembled from the kinetic-energy oracle by polarization.
pub fn mass_matrix_oracle(model: &AcmModel, q: &Vector8) -> Result<nalgebra::SMatrix<f64, 8, 8>> {
    let k = |qdot: Vector8| kinetic_energy_oracle(model, &GeneralizedState { q: *q, qdot });
    let e = |i: usize| Vector8::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
    let mut diag = [0.0; 8];
    for (i, d) in diag.iter_mut().enumerate() {
        *d = k(e(i))?;
    }
    let mut m = nalgebra::SMatrix::<f64, 8, 8>::zeros();
    for i in 0..8 {
        m[(i, i)] = 2.0 * diag[i];
        for j in 0..i {
            let v = k(e(i) + e(j))? - diag[i] - diag[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Symmetry, positive definiteness and agreement with the kinetic-energy oracle.
pub fn mass_matrix_check(model: &AcmModel, rng: &mut impl Rng, n: usize) -> Result<Vec<Check>> {
    let (mut sym, mut hess, mut pd) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n {
        let st = random_state(rng);
        let m = model.mass_matrix(&st, ModelMode::Coupled)?;
        let scale = m.abs().max();
        sym = sym.max((m - m.transpose()).abs().max() / scale);
        let oracle = mass_matrix_oracle(model, &st.q)?;
        hess = hess.max((m - oracle).abs().max() / scale);
        for mode in [ModelMode::Coupled, ModelMode::Decoupled] {
            let mm = model.mass_matrix(&st, mode)?;
            let sym_m = (mm + mm.transpose()) * 0.5;
            let min = sym_m.symmetric_eigenvalues().min();
            if !(min > 0.0) {
                pd = pd.max(1.0);
            }
        }
    }
    Ok(vec![
        Check::new("M symmetric", sym, 1e-9, n),
        Check::new("M positive definite", pd, 0.5, n),
        Check::new("M vs kinetic-energy hessian", hess, 1e-6, n),
    ])
}

/// `|x' (M_dot - 2C) x|` normalized by `|x|^2 max(|M_dot|, |C|)`, both modes.
pub fn skew_check(model: &AcmModel, rng: &mut impl Rng, n: usize) -> Result<Vec<Check>> {
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..n {
        let st = random_state(rng);
        for mode in [ModelMode::Coupled, ModelMode::Decoupled] {
            let m_dot = (model.mass_matrix(&shifted(&st, h), mode)? - model.mass_matrix(&shifted(&st, -h), mode)?)
                / (2.0 * h);
            let c = model.coriolis_matrix(&st, mode)?;
            let x = Vector8::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let s = m_dot - c * 2.0;
            let scale = m_dot.abs().max().max(c.abs().max()) * x.norm_squared();
            worst = worst.max(rel(x.dot(&(s * x)).abs(), scale));
        }
    }
    Ok(vec![Check::new("M_dot - 2C skew", worst, 1e-6, n)])
}

/// Potential energy from integrated backbone heights plus bending energy.
pub fn potential_energy_oracle(model: &AcmModel, st: &GeneralizedState) -> Result<f64> {
    let p = model.params();
    let g = model.geometry();
    let heights = simpson(g.length, 400, |s| Ok(g.point_pose(st, s)?.position.z))?;
    let kappa = st.q[idx::KAPPA];
    Ok(p.m_u * p.g * st.q[idx::Z]
        + p.rho * p.area() * p.g * heights
        + 0.5 * p.young_modulus * p.second_moment() * p.l_a * kappa * kappa)
}

/// `G` against the central-difference gradient of the potential oracle.
pub fn gravity_check(model: &AcmModel, rng: &mut impl Rng, n: usize) -> Result<Vec<Check>> {
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..n {
        let st = random_state(rng);
        let g = model.gravity_vector(&st)?;
        let mut fd = Vector8::zeros();
        for i in 0..8 {
            let (mut a, mut b) = (st, st);
            a.q[i] += h;
            b.q[i] -= h;
            fd[i] = (potential_energy_oracle(model, &a)? - potential_energy_oracle(model, &b)?) / (2.0 * h);
        }
        worst = worst.max(rel((g - fd).abs().max(), g.abs().max()));
    }
    Ok(vec![Check::new("G vs grad U", worst, 1e-6, n)])
}

/// Project points through a camera pose into normalized coordinates and depths.
fn features(points: &[Vector3<f64>], cam: &Pose) -> ImageFeatures {
    let intr = CameraIntrinsics::default();
    let mut f = ImageFeatures {
        pixels: Vec::new(),
        normalized: Vec::new(),
        depths: Vec::new(),
    };
    for p in points {
        let pc = cam.inverse_transform_point(p);
        let (x, y) = (pc.x / pc.z, pc.y / pc.z);
        f.pixels.push([intr.fx * x + intr.cx, intr.fy * y + intr.cy]);
        f.normalized.push([x, y]);
        f.depths.push(pc.z);
    }
    f
}

/// First-order check `s(pose exp(delta)) - s(pose) ~ L delta` for camera-frame twists.
pub fn interaction_check(rng: &mut impl Rng, n: usize) -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let cam = Pose {
            position: Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0),
            rotation: rot_z(rng.random_range(-3.0..3.0)) * rot_y(rng.random_range(-0.3..0.3))
                * rot_x(rng.random_range(-0.3..0.3)),
        };
        let points: Vec<Vector3<f64>> = (0..4)
            .map(|_| {
                let local = Vector3::new(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(1.0..4.0),
                );
                cam.position + cam.rotation * local
            })
            .collect();
        let f0 = features(&points, &cam);
        let l = interaction_matrix(&f0)?;
        let dir = Vector6::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize() * 1e-5;
        let v = Vector3::new(dir[0], dir[1], dir[2]);
        let w = Vector3::new(dir[3], dir[4], dir[5]);
        let moved = Pose {
            position: cam.position + cam.rotation * v,
            rotation: cam.rotation * exp_so3(&w),
        };
        let f1 = features(&points, &moved);
        let ds = f1.normalized_vector() - f0.normalized_vector();
        let pred = &l * nalgebra::DVector::from_column_slice(dir.as_slice());
        worst = worst.max(rel((ds - &pred).norm(), pred.norm()));
    }
    Ok(vec![Check::new("interaction matrix vs fd", worst, 1e-3, n)])
}

fn exp_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    nalgebra::Rotation3::new(*w).into_inner()
}

/// All checks for `params` with `n` random samples each.
pub fn run_all(params: &AcmParams, seed: u64, n: usize) -> Result<Vec<Check>> {
    let model = AcmModel::new(params.clone())?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = jacobian_check(&model, &mut rng, n)?;
    out.extend(mass_matrix_check(&model, &mut rng, n.div_ceil(4))?);
    out.extend(skew_check(&model, &mut rng, n)?);
    out.extend(gravity_check(&model, &mut rng, n.div_ceil(4))?);
    out.extend(interaction_check(&mut rng, n)?);
    Ok(out)
}
