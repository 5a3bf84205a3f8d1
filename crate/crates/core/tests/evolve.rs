use llg_core::evolve::*;
use llg_core::{Error, PhysParams, Vec3};
use proptest::prelude::*;
use std::f64::consts::PI;

fn mesh(r_outer: f64, intervals: usize, core: f64) -> Mesh {
    Mesh::new(MeshSpec { r_outer, intervals, core }).unwrap()
}

fn bubble(m: &Mesh, lambda: f64, gamma: f64) -> SimState {
    initial_state(m, &InitialData::Bubble { lambda, gamma }).unwrap()
}

fn sup(v: &[Vec3]) -> f64 {
    v.iter().map(|x| x.max_abs()).fold(0.0, f64::max)
}

fn rk4_cfg(pp: PhysParams, renormalize: bool) -> SimConfig {
    let mut cfg = SimConfig::blowup(pp);
    cfg.integrator = Integrator::Rk4;
    cfg.renormalize = renormalize;
    cfg.cfl = 0.5;
    cfg
}

/// smooth data without a symmetry: bubble in a tilted background field
fn smooth_data(m: &Mesh) -> SimState {
    initial_state(m, &InitialData::BubbleInField { lambda: 1.0, tilt: 0.05, phase: 0.7 }).unwrap()
}

#[test]
fn bubble_energy_is_four_pi() {
    // E on [0, R] is 4 pi R^2 / (1 + R^2)
    for &(r_out, n) in &[(50.0, 20000), (1e4, 30000)] {
        let m = mesh(r_out, n, 0.05);
        let e = energy(&m, &bubble(&m, 1.0, 0.3).v);
        let exact = 4.0 * PI * r_out * r_out / (1.0 + r_out * r_out);
        assert!((e - exact).abs() < 1e-6, "R={r_out}: {e} vs {exact}");
    }
    let m = mesh(1e4, 30000, 0.05);
    assert!((energy(&m, &bubble(&m, 1.0, 0.0).v) - 4.0 * PI).abs() < 1e-6);
}

#[test]
fn constant_map_has_zero_energy_and_rhs() {
    let m = mesh(10.0, 200, 0.1);
    let v = vec![Vec3::E3; m.len()];
    assert_eq!(energy(&m, &v), 0.0);
    assert_eq!(sup(&equivariant_rhs(&m, &v, &PhysParams::new(0.8, 0.6).unwrap())), 0.0);
}

#[test]
fn bubble_residual_is_second_order() {
    let pp = PhysParams::new(0.8, 0.6).unwrap();
    let res = |n: usize| {
        let m = mesh(20.0, n, 0.2);
        let st = bubble(&m, 1.0, 0.4);
        let f = equivariant_rhs(&m, &st.v, &pp);
        let tang = f.iter().zip(&st.v).map(|(x, y)| x.dot(y).abs()).fold(0.0, f64::max);
        (sup(&f), tang, m.h())
    };
    let (r1, t1, h1) = res(200);
    let (r2, t2, h2) = res(400);
    let order = (r1 / r2).ln() / (h1 / h2).ln();
    assert!(order >= 1.9, "residual order {order} ({r1:.3e} -> {r2:.3e})");
    // tangency |F.v| <= C h^2 with the same constant on both meshes
    assert!(t1 / (h1 * h1) < 50.0 && t2 / (h2 * h2) < 50.0, "tangency {t1:.3e} {t2:.3e}");
}

#[test]
fn heat_flow_rhs_is_tension() {
    let m = mesh(10.0, 300, 0.1);
    let st = smooth_data(&m);
    let f = equivariant_rhs(&m, &st.v, &PhysParams::heat_flow());
    let t = tension(&m, &st.v);
    for (x, y) in f.iter().zip(&t) {
        assert!((*x - *y).max_abs() < 1e-14);
    }
}

#[test]
fn one_step_from_bubble_stays_within_truncation() {
    let pp = PhysParams::new(0.8, 0.6).unwrap();
    let dev = |n: usize| {
        let m = mesh(20.0, n, 0.2);
        let dt = 0.5 * explicit_dt_limit(&m, 0.5);
        let st = bubble(&m, 1.0, 0.0);
        let next = step_rk4(&m, &st, dt, &rk4_cfg(pp, true)).unwrap();
        let d: Vec<Vec3> = next.v.iter().zip(&st.v).map(|(x, y)| *x - *y).collect();
        sup(&d) / (dt * m.h() * m.h())
    };
    let (c1, c2) = (dev(200), dev(400));
    assert!(c1 < 50.0 && c2 < 50.0 && (c1 / c2 - 1.0).abs() < 0.2, "{c1} {c2}");
}

#[test]
fn constraint_drift_with_and_without_projection() {
    let pp = PhysParams::new(0.8, 0.6).unwrap();
    let m = mesh(10.0, 200, 0.1);
    let dt = 0.25 * explicit_dt_limit(&m, 0.5);
    for &(renorm, tol) in &[(false, 1e-6), (true, 1e-12)] {
        let cfg = rk4_cfg(pp, renorm);
        let mut st = smooth_data(&m);
        for _ in 0..1000 {
            st = step_rk4(&m, &st, dt, &cfg).unwrap();
        }
        let d = st.constraint_defect();
        assert!(d <= tol, "renormalize={renorm}: drift {d:.3e}");
    }
}

#[test]
fn rk4_is_fourth_order_in_time() {
    let pp = PhysParams::new(0.8, 0.6).unwrap();
    let m = mesh(10.0, 40, 0.2);
    let cfg = rk4_cfg(pp, false);
    let t_end = 0.2;
    let run = |k: usize| {
        let dt = t_end / k as f64;
        let mut st = initial_state(&m, &InitialData::BubbleInField { lambda: 1.0, tilt: 1.0, phase: 0.7 }).unwrap();
        for _ in 0..k {
            st = step_rk4(&m, &st, dt, &cfg).unwrap();
        }
        st.v
    };
    let k0 = 2 * (t_end / explicit_dt_limit(&m, 0.5)).ceil() as usize;
    let (a, b, c) = (run(k0), run(2 * k0), run(4 * k0));
    let e1: Vec<Vec3> = a.iter().zip(&b).map(|(x, y)| *x - *y).collect();
    let e2: Vec<Vec3> = b.iter().zip(&c).map(|(x, y)| *x - *y).collect();
    let order = (sup(&e1) / sup(&e2)).log2();
    assert!((3.7..=4.3).contains(&order), "observed order {order}");
}

#[test]
fn rk4_rejects_unstable_steps() {
    let m = mesh(10.0, 200, 0.1);
    let cfg = rk4_cfg(PhysParams::heat_flow(), true);
    let dt = 2.0 * explicit_dt_limit(&m, cfg.cfl);
    assert!(matches!(step_rk4(&m, &bubble(&m, 1.0, 0.0), dt, &cfg), Err(Error::Unstable { .. })));
}

#[test]
fn energy_decays_at_the_dissipation_rate() {
    let pp = PhysParams::heat_flow();
    let cfg = SimConfig::blowup(pp);
    let m = mesh(4.0, 400, 0.02);
    let dt = 1e-5;
    let mut st = initial_state(&m, &InitialData::BubbleInField { lambda: 0.5, tilt: 0.5, phase: 0.0 }).unwrap();
    let mut e = vec![energy(&m, &st.v)];
    let mut d = vec![dissipation(&m, &st.v, &pp)];
    for k in 0..20000 {
        st = step(&m, &st, dt, &cfg).unwrap();
        e.push(energy(&m, &st.v));
        d.push(dissipation(&m, &st.v, &pp));
        assert!(e[k + 1] <= e[k] + 1e-8 * e[0], "energy rose at step {k}");
    }
    // the data is not compatible with the clamped edge, so compare once the
    // boundary layer has formed
    for k in (1000..20000).step_by(1000) {
        let fd = (e[k - 1] - e[k + 1]) / (2.0 * dt);
        assert!((fd - d[k]).abs() <= 0.05 * d[k], "t={}: -dE/dt {fd:.5e} vs {:.5e}", k as f64 * dt, d[k]);
    }
}

#[test]
fn energy_is_monotone_with_precession() {
    let pp = PhysParams::new(0.8, 0.6).unwrap();
    let cfg = SimConfig::blowup(pp);
    let m = Mesh::new(cfg.mesh).unwrap();
    let mut st = initial_state(&m, &InitialData::BubbleInField { lambda: 0.2, tilt: 1.0, phase: 0.3 }).unwrap();
    let e0 = energy(&m, &st.v);
    let mut e_prev = e0;
    for _ in 0..2000 {
        st = step(&m, &st, 1e-4, &cfg).unwrap();
        let e = energy(&m, &st.v);
        assert!(e <= e_prev + 1e-8 * e0);
        assert!(st.constraint_defect() <= 1e-10);
        e_prev = e;
    }
}

fn conjugate(v: &[Vec3]) -> Vec<Vec3> {
    v.iter().map(|x| Vec3([x.0[0], -x.0[1], x.0[2]])).collect()
}

#[test]
fn precession_reversal_mirrors_the_run() {
    let cfg_p = SimConfig::blowup(PhysParams::new(0.8, 0.6).unwrap());
    let cfg_m = SimConfig::blowup(PhysParams::new(0.8, -0.6).unwrap());
    let m = Mesh::new(cfg_p.mesh).unwrap();
    let mut p = initial_state(&m, &InitialData::BubbleInField { lambda: 0.2, tilt: 1.0, phase: 0.4 }).unwrap();
    let mut q = SimState::new(conjugate(&p.v));
    for _ in 0..500 {
        p = step(&m, &p, 2e-4, &cfg_p).unwrap();
        q = step(&m, &q, 2e-4, &cfg_m).unwrap();
    }
    let d: Vec<Vec3> = conjugate(&p.v).iter().zip(&q.v).map(|(x, y)| *x - *y).collect();
    assert_eq!(sup(&d), 0.0);
}

#[test]
fn scale_estimate_of_scaled_bubble() {
    let m = mesh(1.0, 600, 2e-6);
    let st = bubble(&m, 0.01, 0.0);
    let l = lambda_estimate(&m, &st.v);
    assert!((l / 0.01 - 1.0).abs() < 0.02, "{l}");
}

#[test]
fn scale_estimate_follows_dilation() {
    // r -> 2r on a mesh scaled by 2 maps the data onto itself
    let m1 = mesh(5.0, 400, 1e-3);
    let m2 = mesh(10.0, 400, 2e-3);
    let init = InitialData::BubbleInField { lambda: 0.3, tilt: 0.2, phase: 1.0 };
    let init2 = InitialData::BubbleInField { lambda: 0.6, tilt: 0.1, phase: 1.0 };
    let l1 = lambda_estimate(&m1, &initial_state(&m1, &init).unwrap().v);
    let l2 = lambda_estimate(&m2, &initial_state(&m2, &init2).unwrap().v);
    assert!((l2 / l1 - 2.0).abs() < 1e-12, "{l1} {l2}");
}

#[test]
fn exact_bubble_does_not_blow_up() {
    let mut cfg = SimConfig::blowup(PhysParams::new(0.8, 0.6).unwrap());
    cfg.mesh = MeshSpec { r_outer: 20.0, intervals: 400, core: 0.05 };
    cfg.t_max = 0.5;
    cfg.dt = DtPolicy::Fixed { dt: 1e-3 };
    let m = Mesh::new(cfg.mesh).unwrap();
    let e0 = energy(&m, &bubble(&m, 1.0, 0.0).v);
    let d = run_and_fit(&cfg, &InitialData::Bubble { lambda: 1.0, gamma: 0.0 }).unwrap();
    assert_eq!(d.stop, StopReason::TimeLimit);
    assert!(d.fit.is_none());
    assert!((d.samples.last().unwrap().t - 0.5).abs() < 1e-12);
    for s in &d.samples {
        assert!((s.energy - e0).abs() <= 1e-8 * e0, "{} vs {e0}", s.energy);
    }
}

#[test]
fn coarse_core_requests_refinement() {
    let mut cfg = SimConfig::blowup(PhysParams::heat_flow());
    cfg.mesh = MeshSpec { r_outer: 1.0, intervals: 100, core: 0.1 };
    let r = run_and_fit(&cfg, &InitialData::Bubble { lambda: 0.01, gamma: 0.0 });
    assert!(matches!(r, Err(Error::NeedsRefinement { .. })));
}

#[test]
fn heat_flow_blows_up_at_type_two_rate() {
    let cfg = SimConfig::blowup(PhysParams::heat_flow());
    let d = run_and_fit(&cfg, &InitialData::BubbleInField { lambda: 0.2, tilt: 1.0, phase: 0.0 }).unwrap();
    assert_eq!(d.stop, StopReason::LambdaThreshold);
    let fit = d.fit.unwrap();
    assert!((0.8..=1.2).contains(&fit.exponent), "{fit:?}");
    assert!(d.max_energy_increase <= 1e-8);
    assert!(d.max_constraint_defect <= 1e-10);
}

#[test]
fn bad_phase_bracket_is_rejected() {
    let cfg = SimConfig::blowup(PhysParams::heat_flow());
    assert!(tune_phase(&cfg, 0.2, 1.0, [0.5, 0.2], 1e-3).is_err());
    assert!(tune_phase(&cfg, 0.2, 1.0, [0.1, 0.2], 0.0).is_err());
}

#[test]
fn fit_recovers_a_power_law() {
    let (t_end, alpha, c) = (0.7, 1.05, 0.3);
    let samples: Vec<DiagSample> = (0..400)
        .map(|i| {
            let t = t_end - 0.05 * (1.0 - i as f64 / 400.0).powi(3) - 1e-4;
            DiagSample { t, lambda_est: c * (t_end - t).powf(alpha), energy: 0.0, max_grad: 0.0 }
        })
        .collect();
    let fit = fit_rate(&samples).unwrap();
    assert!((fit.exponent - alpha).abs() < 1e-4 && (fit.t_est - t_end).abs() < 1e-6, "{fit:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rotation_leaves_diagnostics_unchanged(gamma in -PI..PI, lambda in 0.05f64..2.0) {
        let m = mesh(10.0, 300, 0.01);
        let a = bubble(&m, lambda, 0.0);
        let b = bubble(&m, lambda, gamma);
        let (la, lb) = (lambda_estimate(&m, &a.v), lambda_estimate(&m, &b.v));
        prop_assert!((la - lb).abs() <= 1e-12 * la);
        let (ea, eb) = (energy(&m, &a.v), energy(&m, &b.v));
        prop_assert!((ea - eb).abs() <= 1e-12 * ea);
    }

    #[test]
    fn rhs_commutes_with_conjugation(a in 0.1f64..1.0, sign in prop::bool::ANY, phase in -PI..PI, tilt in 0.0f64..1.0) {
        let b = (1.0 - a * a).sqrt() * if sign { 1.0 } else { -1.0 };
        let m = mesh(5.0, 200, 0.01);
        let st = initial_state(&m, &InitialData::BubbleInField { lambda: 0.3, tilt, phase }).unwrap();
        let f = equivariant_rhs(&m, &st.v, &PhysParams::new(a, b).unwrap());
        let g = equivariant_rhs(&m, &conjugate(&st.v), &PhysParams::new(a, -b).unwrap());
        let d: Vec<Vec3> = conjugate(&f).iter().zip(&g).map(|(x, y)| *x - *y).collect();
        prop_assert!(sup(&d) <= 1e-12 * sup(&f).max(1.0));
    }

    #[test]
    fn projected_steps_keep_unit_length(phase in -PI..PI, tilt in 0.0f64..1.0, dt in 1e-5f64..1e-3) {
        let cfg = SimConfig::blowup(PhysParams::new(0.8, 0.6).unwrap());
        let m = Mesh::new(MeshSpec { r_outer: 1.0, intervals: 200, core: 1e-3 }).unwrap();
        let mut st = initial_state(&m, &InitialData::BubbleInField { lambda: 0.2, tilt, phase }).unwrap();
        for _ in 0..20 {
            st = step(&m, &st, dt, &cfg).unwrap();
            prop_assert!(st.constraint_defect() <= 1e-12);
        }
    }
}
