//! Acceptance suite. Prints one PASS/FAIL line per criterion with the measured
//! values; exits nonzero when a criterion fails that is not listed in
//! [`KNOWN_FAILURES`].

mod common;

use std::time::Instant;

use acm_sim::analysis::{ds_metric, energy_audit, nrmse, timing_report, Channels};
use acm_sim::dynamics::{AcmModel, AcmParams, ExternalWrench, ModelMode};
use acm_sim::kinematics::{arm_jacobian_rotational, arm_jacobian_translational, idx, Pose};
use acm_sim::servo::trajectory::DEFAULT_RAMP_TIME;
use acm_sim::servo::{interaction_matrix, run_servo, ImageFeatures, PathSpec, ServoConfig, TargetTrajectory, LETTERS};
use acm_sim::simulation::{builtin_scenario, parameter_sweep, rk4_step, run_modes, SimTrace, SweepAxis};
use common::*;
use nalgebra::{DVector, Vector3, Vector6};
use rand::Rng;
use rayon::prelude::*;

/// Criteria that fail with the shipped model; see the README.
const KNOWN_FAILURES: &[u32] = &[5, 6, 7];

// Tolerances.
const C1_REL: f64 = 1e-6;
const C1_GAP: f64 = 1e-8;
const C1_SECONDS: f64 = 10.0;
const C2_SYM: f64 = 1e-9;
const C2_HESS: f64 = 1e-6;
const C2_SKEW: f64 = 1e-6;
const C2_GRAD: f64 = 1e-6;
const C2_SECONDS: f64 = 60.0;
const C3_ORDER_TOL: f64 = 0.1;
const C4_DRIFT: f64 = 1e-6;
const C4_ORDER: (f64, f64) = (3.7, 4.3);
const C5_GAP: f64 = 1e-5;
const C6_SECONDS: f64 = 300.0;
const C8_REL: f64 = 1e-3;
const C8_ORDER: (f64, f64) = (1.8, 2.2);
const C8_PX: f64 = 1.0;
const C9_DS_PX: f64 = 0.7;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn model() -> AcmModel {
    AcmModel::new(AcmParams::default()).unwrap()
}

fn c1() -> Outcome {
    let start = Instant::now();
    let m = model();
    let g = m.geometry();
    let mut r = rng(11);
    let h = 1e-6;
    let (mut jp, mut jo) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let st = random_state(&mut r);
        let (k, psi) = (st.q[idx::KAPPA], st.q[idx::PSI_A]);
        let s = r.random_range(0.05..1.0);
        let jt = arm_jacobian_translational(s, k, psi);
        let jr = arm_jacobian_rotational(s, psi);
        for (c, (dk, dp)) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
            let col = (arc(s, k + h * dk, psi + h * dp) - arc(s, k - h * dk, psi - h * dp)) / (2.0 * h);
            jp = jp.max(rel((jt.column(c) - col).norm(), col.norm()));
            let w = log_so3(&(section_rot(s, k + h * dk, psi + h * dp) * section_rot(s, k - h * dk, psi - h * dp).transpose()))
                / (2.0 * h);
            jo = jo.max(rel((jr.column(c) - w).norm(), w.norm()));
        }
    }
    let mut gap = 0.0f64;
    for _ in 0..200 {
        let mut st = random_state(&mut r);
        let ks = if r.random_bool(0.5) { g.kappa_s } else { -g.kappa_s };
        st.q[idx::KAPPA] = ks * (1.0 + 1e-12);
        let (hi_j, hi_p) = (m.tip_jacobian(&st).unwrap(), g.tip_pose(&st).unwrap().position);
        st.q[idx::KAPPA] = ks * (1.0 - 1e-12);
        let (lo_j, lo_p) = (m.tip_jacobian(&st).unwrap(), g.tip_pose(&st).unwrap().position);
        gap = gap.max((hi_j - lo_j).abs().max()).max((hi_p - lo_p).abs().max());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 1,
        name: "kinematic oracles",
        pass: jp < C1_REL && jo < C1_REL && gap < C1_GAP && secs < C1_SECONDS,
        detail: format!(
            "J_pa {jp:.1e} J_oa {jo:.1e} (< {C1_REL:.0e}), continuity {gap:.1e} (< {C1_GAP:.0e}), {secs:.1} s (< {C1_SECONDS} s)"
        ),
    }
}

fn c2() -> Outcome {
    let start = Instant::now();
    let m = model();
    let p = m.params().clone();
    let mut r = rng(12);
    let h = 1e-6;
    let (mut sym, mut hess, mut skew, mut gradient, mut pd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, true);
    for _ in 0..500 {
        let st = random_state(&mut r);
        let mm = m.mass_matrix(&st, ModelMode::Coupled).unwrap();
        let scale = mm.abs().max();
        sym = sym.max((mm - mm.transpose()).abs().max() / scale);
        hess = hess.max((mm - mass_matrix(&p, &st.q)).abs().max() / scale);
        for mode in [ModelMode::Coupled, ModelMode::Decoupled] {
            let mo = m.mass_matrix(&st, mode).unwrap();
            pd &= mo.symmetric_eigenvalues().min() > 0.0;
            let fwd = acm_sim::kinematics::GeneralizedState { q: st.q + st.qdot * h, qdot: st.qdot };
            let bwd = acm_sim::kinematics::GeneralizedState { q: st.q - st.qdot * h, qdot: st.qdot };
            let mdot = (m.mass_matrix(&fwd, mode).unwrap() - m.mass_matrix(&bwd, mode).unwrap()) / (2.0 * h);
            let c = m.coriolis_matrix(&st, mode).unwrap();
            let x = Vector8::from_fn(|_, _| r.random_range(-1.0..1.0));
            let v = x.dot(&((mdot - c * 2.0) * x)).abs();
            skew = skew.max(v / (x.norm_squared() * st.qdot.norm()));
        }
        let gv = m.gravity_vector(&st).unwrap();
        let fd = grad(|q| potential_energy(&p, q), &st.q, 1e-6);
        gradient = gradient.max(rel((gv - fd).abs().max(), gv.abs().max()));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 2,
        name: "dynamics structure",
        pass: sym < C2_SYM && pd && hess < C2_HESS && skew < C2_SKEW && gradient < C2_GRAD && secs < C2_SECONDS,
        detail: format!(
            "sym {sym:.1e} (< {C2_SYM:.0e}), PD {pd}, KE hessian {hess:.1e} (< {C2_HESS:.0e}), skew {skew:.1e} (< {C2_SKEW:.0e}), grad U {gradient:.1e} (< {C2_GRAD:.0e}), {secs:.1} s (< {C2_SECONDS} s)"
        ),
    }
}

fn order(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x) / f(0.5 * x)).abs().log2()
}

fn c3() -> Outcome {
    let m = model();
    let p = m.params().clone();
    let mut st = random_state(&mut rng(13));
    st.qdot = Vector8::zeros();
    let at = |kappa: f64| {
        let mut s = st;
        s.q[idx::KAPPA] = kappa;
        s
    };
    let entry = |kappa: f64, col: usize| m.mass_matrix(&at(kappa), ModelMode::Coupled).unwrap()[(0, col)];
    // quadrature-assembled entries in kappa
    let m18_order = order(|k| entry(k, 7), 2e-3);
    let m17_change = rel((entry(2e-3, 6) - entry(1e-3, 6)).abs(), entry(1e-3, 6).abs());
    // printed entries in kappa
    let e = st.euler();
    let psi = st.q[idx::PSI_A];
    let printed =
        |k: f64, s: f64| acm_sim::dynamics::printed_coupling_entries(k, s, p.l_a, p.r_a, p.rho, &e, psi);
    let p18_order = order(|k| printed(k, 0.7).1, 2e-3);
    // both entries in s, integrand and printed form
    let st1 = at(0.9);
    let (i17, i18) = (
        order(|s| m.coupling_integrands(&st1, s).unwrap().0, 1e-2),
        order(|s| m.coupling_integrands(&st1, s).unwrap().1, 1e-2),
    );
    let (q17, q18) = (order(|s| printed(0.9, s).0, 1e-2), order(|s| printed(0.9, s).1, 1e-2));
    let min_s_order = i17.min(i18).min(q17).min(q18);
    // verbatim printed form against the quadrature entries (soft)
    let mm = m.mass_matrix(&st1, ModelMode::Coupled).unwrap();
    let (v17, v18) = printed(0.9, p.l_a);
    let dev17 = rel((v17 - mm[(0, 6)]).abs(), mm[(0, 6)].abs());
    let dev18 = rel((v18 - mm[(0, 7)]).abs(), mm[(0, 7)].abs());
    let pass = (m18_order - 1.0).abs() < C3_ORDER_TOL
        && (p18_order - 1.0).abs() < C3_ORDER_TOL
        && m17_change < 1e-2
        && min_s_order > 2.0 - C3_ORDER_TOL;
    Outcome {
        id: 3,
        name: "coupling-entry asymptotics",
        pass,
        detail: format!(
            "M18 order in kappa {m18_order:.3} (printed {p18_order:.3}), M17 change {m17_change:.1e}, min order in s {min_s_order:.2}; printed vs quadrature deviation M17 {dev17:.2e} M18 {dev18:.2e} (logged)"
        ),
    }
}

/// Configurations every `sample` seconds over `t` seconds of motion under a
/// constant bending torque that holds the curvature near its initial value.
fn sampled_states(m: &AcmModel, q0: Vector8, qd0: Vector8, t: f64, dt: f64, sample: f64) -> Vec<Vector8> {
    let mut st = acm_sim::kinematics::GeneralizedState { q: q0, qdot: qd0 };
    let p = m.params();
    let mut tau = Vector8::zeros();
    tau[idx::KAPPA] = p.young_modulus * second_moment(p) * p.l_a * q0[idx::KAPPA];
    let forcing = move |_: f64| (tau, ExternalWrench::zero());
    let (n, every) = ((t / dt).round() as usize, (sample / dt).round() as usize);
    let mut out = Vec::new();
    for k in 0..n {
        st = rk4_step(m, &st, k as f64 * dt, dt, &forcing, ModelMode::Coupled).unwrap();
        if (k + 1) % every == 0 {
            out.push(st.q);
        }
    }
    out
}

fn c4() -> Outcome {
    let m = model();
    let sc = builtin_scenario("testB").unwrap();
    let traces = run_modes(&sc, &m, &[ModelMode::Coupled, ModelMode::Decoupled]).unwrap();
    let drift = traces.iter().map(energy_audit).fold(0.0, f64::max);
    let mut q0 = Vector8::from_column_slice(&sc.q0);
    q0[idx::KAPPA] = 1.0;
    let qd0 = Vector8::from_column_slice(&[0.1, 0.0, 0.0, 0.5, -0.3, 0.2, 0.3, 1.0]);
    let (t, sample) = (0.5, 0.032);
    let steps = [4e-3, 2e-3, 1e-3, 5e-4];
    let reference = sampled_states(&m, q0, qd0, t, steps[3] / 16.0, sample);
    let errors: Vec<f64> = steps
        .iter()
        .map(|&dt| {
            let run = sampled_states(&m, q0, qd0, t, dt, sample);
            run.iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        })
        .collect();
    // least-squares slope of log error against log step
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let observed = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    Outcome {
        id: 4,
        name: "conservation and RK4 order",
        pass: drift < C4_DRIFT && (C4_ORDER.0..=C4_ORDER.1).contains(&observed),
        detail: format!(
            "energy drift {drift:.1e} (< {C4_DRIFT:.0e}), observed order {observed:.2} (in [{}, {}])",
            C4_ORDER.0, C4_ORDER.1
        ),
    }
}

fn c5() -> Outcome {
    let sc = builtin_scenario("testC").unwrap();
    let gaps: Vec<f64> = [1.0, 1e-1, 1e-2, 1e-3]
        .par_iter()
        .map(|&f| {
            let p = AcmParams {
                rho: AcmParams::default().rho * f,
                ..Default::default()
            };
            let m = AcmModel::new(p).unwrap();
            let tr = run_modes(&sc, &m, &[ModelMode::Coupled, ModelMode::Decoupled]).unwrap();
            (tr[0].tip_positions.last().unwrap() - tr[1].tip_positions.last().unwrap()).norm()
        })
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        id: 5,
        name: "coupling limit in rho",
        pass: monotone && gaps[3] < C5_GAP,
        detail: format!("terminal tip gaps [{}] m, monotone {monotone}, smallest < {C5_GAP:.0e}", gaps.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>().join(", ")),
    }
}

fn c6() -> Outcome {
    let start = Instant::now();
    let m = model();
    let rows: Vec<(f64, f64)> = ["testA", "testB", "testC", "testD"]
        .par_iter()
        .map(|name| {
            let sc = builtin_scenario(name).unwrap();
            let tr = run_modes(&sc, &m, &[ModelMode::Coupled, ModelMode::Decoupled]).unwrap();
            (
                nrmse(&tr[0], &tr[1], Channels::Translation).unwrap(),
                nrmse(&tr[0], &tr[1], Channels::Rotation).unwrap(),
            )
        })
        .collect();
    let argmax = |f: &dyn Fn(&(f64, f64)) -> f64| {
        (0..4).max_by(|&a, &b| f(&rows[a]).total_cmp(&f(&rows[b]))).unwrap()
    };
    let (t_max, r_max) = (argmax(&|r| r.0), argmax(&|r| r.1));
    let nonzero = rows.iter().all(|r| r.0 > 0.0 && r.1 > 0.0);
    let secs = start.elapsed().as_secs_f64();
    let name = |i: usize| ["A", "B", "C", "D"][i];
    Outcome {
        id: 6,
        name: "open-loop gap ordering",
        pass: t_max == 2 && r_max == 0 && nonzero && secs < C6_SECONDS,
        detail: format!(
            "NRMSE_T A..D {:.4?}, largest {} (want C); NRMSE_R A..D {:.4?}, largest {} (want A); all nonzero {nonzero}; {secs:.1} s",
            rows.iter().map(|r| r.0).collect::<Vec<_>>(),
            name(t_max),
            rows.iter().map(|r| r.1).collect::<Vec<_>>(),
            name(r_max)
        ),
    }
}

/// RMS planar distance between the coupled and decoupled tips [m].
fn planar_gap(c: &SimTrace, d: &SimTrace) -> f64 {
    let sum: f64 = c
        .tip_positions
        .iter()
        .zip(&d.tip_positions)
        .map(|(a, b)| (a.x - b.x).powi(2) + (a.y - b.y).powi(2))
        .sum();
    (sum / c.tip_positions.len() as f64).sqrt()
}

/// Largest planar distance of the coupled tip from its start [m].
fn planar_displacement(c: &SimTrace) -> f64 {
    let p0 = c.tip_positions[0];
    c.tip_positions
        .iter()
        .map(|p| ((p.x - p0.x).powi(2) + (p.y - p0.y).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

fn c7() -> Outcome {
    let params = AcmParams::default();
    let results: Vec<(SweepAxis, Vec<(f64, f64)>)> = SweepAxis::ALL
        .iter()
        .map(|&axis| {
            let base = builtin_scenario(axis.default_scenario()).unwrap();
            let rows = parameter_sweep(&base, &params, axis, &axis.default_values())
                .into_iter()
                .map(|pt| {
                    let (c, d) = pt.result.unwrap();
                    (planar_displacement(&c), planar_gap(&c, &d))
                })
                .collect();
            (axis, rows)
        })
        .collect();
    let get = |a: SweepAxis| &results.iter().find(|r| r.0 == a).unwrap().1;
    let decreasing = |v: Vec<f64>| v.windows(2).all(|w| w[1] < w[0]);
    let increasing = |v: Vec<f64>| v.windows(2).all(|w| w[1] > w[0]);
    let disp = |a| get(a).iter().map(|r| r.0).collect::<Vec<_>>();
    let gaps = |a| get(a).iter().map(|r| r.1).collect::<Vec<_>>();
    let spread = |a| {
        let g = gaps(a);
        g.iter().cloned().fold(f64::MIN, f64::max) - g.iter().cloned().fold(f64::MAX, f64::min)
    };
    let r_a = decreasing(disp(SweepAxis::Radius));
    let m_u = decreasing(disp(SweepAxis::UavMass));
    let spreads: Vec<(SweepAxis, f64)> = SweepAxis::ALL.iter().map(|&a| (a, spread(a))).collect();
    let e_smallest = spreads
        .iter()
        .all(|&(a, s)| a == SweepAxis::YoungModulus || s > spread(SweepAxis::YoungModulus));
    let kappa = increasing(gaps(SweepAxis::InitialCurvature));
    let roll = increasing(gaps(SweepAxis::InitialRoll));
    Outcome {
        id: 7,
        name: "sweep directions",
        pass: r_a && m_u && e_smallest && kappa && roll,
        detail: format!(
            "displacement vs r_a {:.3?} ({r_a}), vs m_u {:.3?} ({m_u}); gap spread per axis {} (E smallest {e_smallest}); gap vs kappa0 {:.3?} ({kappa}); gap vs roll {:.3?} ({roll})",
            disp(SweepAxis::Radius),
            disp(SweepAxis::UavMass),
            spreads.iter().map(|(a, s)| format!("{}={s:.3}", a.name())).collect::<Vec<_>>().join(" "),
            gaps(SweepAxis::InitialCurvature),
            gaps(SweepAxis::InitialRoll),
        ),
    }
}

/// Normalized image coordinates of world points seen from `cam`.
fn normalized(points: &[Vector3<f64>], cam: &Pose) -> (DVector<f64>, Vec<f64>) {
    let mut s = Vec::new();
    let mut z = Vec::new();
    for p in points {
        let c = cam.rotation.transpose() * (p - cam.position);
        s.extend([c.x / c.z, c.y / c.z]);
        z.push(c.z);
    }
    (DVector::from_vec(s), z)
}

fn c8() -> Outcome {
    let mut r = rng(18);
    let (mut worst_rel, mut worst_order) = (0.0f64, (f64::MAX, f64::MIN));
    for _ in 0..200 {
        let cam = Pose {
            position: Vector3::from_fn(|_, _| r.random_range(-1.0..1.0)),
            rotation: base_rot(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5), r.random_range(-3.0..3.0)),
        };
        let points: Vec<Vector3<f64>> = (0..4)
            .map(|_| {
                let local = Vector3::new(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5), r.random_range(1.0..4.0));
                cam.position + cam.rotation * local
            })
            .collect();
        let (s0, depths) = normalized(&points, &cam);
        let f = ImageFeatures {
            pixels: vec![[0.0; 2]; 4],
            normalized: s0.as_slice().chunks(2).map(|c| [c[0], c[1]]).collect(),
            depths,
        };
        let l = interaction_matrix(&f).unwrap();
        let dir = Vector6::from_fn(|_, _| r.random_range(-1.0..1.0)).normalize();
        let residual = |scale: f64| {
            let d = dir * scale;
            let moved = Pose {
                position: cam.position + cam.rotation * Vector3::new(d[0], d[1], d[2]),
                rotation: cam.rotation * nalgebra::Rotation3::new(Vector3::new(d[3], d[4], d[5])).into_inner(),
            };
            let ds = normalized(&points, &moved).0 - &s0;
            let pred = &l * DVector::from_column_slice(d.as_slice());
            ((ds - &pred).norm(), pred.norm())
        };
        let (res5, pred5) = residual(1e-5);
        worst_rel = worst_rel.max(res5 / pred5);
        let (a, _) = residual(1e-2);
        let (b, _) = residual(1e-3);
        let o = (a / b).log10();
        worst_order = (worst_order.0.min(o), worst_order.1.max(o));
    }
    let m = model();
    let cfg = ServoConfig {
        target_offset: [0.2, 0.1],
        ..Default::default()
    };
    let runs: Vec<_> = [ModelMode::Coupled, ModelMode::Decoupled]
        .par_iter()
        .map(|&mode| run_servo(&m, &cfg, None, mode).unwrap())
        .collect();
    let reached: Vec<f64> = runs
        .iter()
        .map(|tr| tr.records.iter().find(|r| r.e_norm_px < C8_PX).map_or(f64::INFINITY, |r| r.t))
        .collect();
    let violations: usize = runs.iter().map(|tr| tr.summary.monitor_violations).sum();
    let checks: usize = runs.iter().map(|tr| tr.summary.monitor_checks).sum();
    let pass = worst_rel < C8_REL
        && worst_order.0 > C8_ORDER.0
        && worst_order.1 < C8_ORDER.1
        && reached.iter().all(|t| t.is_finite())
        && violations == 0;
    Outcome {
        id: 8,
        name: "IBVS suite",
        pass,
        detail: format!(
            "L first-order rel {worst_rel:.1e} (< {C8_REL:.0e}), residual order [{:.2}, {:.2}]; static target below {C8_PX} px at t = {reached:.1?} s of {} s; V increases outside bound set {violations}/{checks}",
            worst_order.0, worst_order.1, cfg.horizon
        ),
    }
}

fn c9() -> Outcome {
    let m = model();
    let cfg = ServoConfig::default();
    let jobs: Vec<(&str, ModelMode)> = LETTERS
        .iter()
        .flat_map(|&l| [(l, ModelMode::Coupled), (l, ModelMode::Decoupled)])
        .collect();
    let runs: Vec<_> = jobs
        .par_iter()
        .map(|&(l, mode)| run_servo(&m, &cfg, Some(PathSpec::letter(l).unwrap()), mode))
        .collect();
    let lost: Vec<String> = runs
        .iter()
        .zip(&jobs)
        .filter_map(|(r, (l, mode))| r.as_ref().err().map(|e| format!("{l}/{mode}: {e}")))
        .collect();
    if !lost.is_empty() {
        return Outcome {
            id: 9,
            name: "letter tracking",
            pass: false,
            detail: format!("failed runs: {}", lost.join("; ")),
        };
    }
    let runs: Vec<_> = runs.into_iter().map(Result::unwrap).collect();
    let mut parts = Vec::new();
    let (mut m_ds, mut all_cooccur) = (f64::INFINITY, true);
    for (i, &letter) in LETTERS.iter().enumerate() {
        let (c, d) = (&runs[2 * i], &runs[2 * i + 1]);
        let ds = ds_metric(&c.error_samples(), &d.error_samples()).unwrap();
        let (t_peak, peak) = ds
            .iter()
            .map(|&(t, v)| (t, v.abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let traj = TargetTrajectory::new(PathSpec::letter(letter).unwrap(), Vector3::zeros(), cfg.half_side).unwrap();
        let tr = DEFAULT_RAMP_TIME;
        let mut windows: Vec<(f64, f64)> = c
            .segment_starts
            .iter()
            .chain(std::iter::once(&traj.duration()))
            .map(|&s| (s - tr, s + 2.0 * tr))
            .collect();
        windows.extend(c.arc_intervals.iter().copied());
        let inside = |t: f64| windows.iter().any(|&(a, b)| t >= a && t <= b);
        let cooccur = inside(t_peak);
        all_cooccur &= cooccur;
        if letter == "M" {
            m_ds = peak;
        }
        parts.push(format!(
            "{letter}: max|DS| {peak:.3} px at t={t_peak:.2} s (event window {cooccur}), final {:.2}/{:.2} px",
            c.summary.final_e_px, d.summary.final_e_px
        ));
    }
    Outcome {
        id: 9,
        name: "letter tracking",
        pass: m_ds < C9_DS_PX && all_cooccur,
        detail: format!("{}; M bound {C9_DS_PX} px", parts.join("; ")),
    }
}

fn c10() -> Outcome {
    let m = model();
    let sc = builtin_scenario("testB").unwrap();
    let tr = run_modes(&sc, &m, &[ModelMode::Coupled, ModelMode::Decoupled]).unwrap();
    let rep = timing_report(Some(&tr[0]), Some(&tr[1])).unwrap();
    let (c, d) = (rep.coupled.unwrap(), rep.decoupled.unwrap());
    Outcome {
        id: 10,
        name: "step cost",
        pass: d.median < c.median,
        detail: format!(
            "median coupled {:.2} us decoupled {:.2} us over {} steps, ratio {:.3} (reference {:.3})",
            c.median * 1e6,
            d.median * 1e6,
            c.steps,
            rep.ratio.unwrap(),
            rep.reference_ratio
        ),
    }
}

fn main() {
    // Timing first, before the machine is loaded by the heavier criteria.
    let suite: [fn() -> Outcome; 10] = [c10, c1, c2, c3, c4, c5, c6, c7, c8, c9];
    let mut outcomes: Vec<Outcome> = suite
        .iter()
        .map(|f| {
            let start = Instant::now();
            let o = f();
            eprintln!("criterion {} finished in {:.1} s", o.id, start.elapsed().as_secs_f64());
            o
        })
        .collect();
    outcomes.sort_by_key(|o| o.id);
    let mut unexpected = Vec::new();
    for o in &outcomes {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = match (o.pass, KNOWN_FAILURES.contains(&o.id)) {
            (false, true) => " [known]",
            (true, true) => " [listed as known failure but passed]",
            _ => "",
        };
        println!("{verdict} {:>2} {}: {}{note}", o.id, o.name, o.detail);
        if !o.pass && !KNOWN_FAILURES.contains(&o.id) {
            unexpected.push(o.id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
