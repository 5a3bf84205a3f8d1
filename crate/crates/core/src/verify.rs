//! Acceptance checks with pinned thresholds. Every check is deterministic
//! for a given seed; wall-clock times are recorded but never printed by
//! [`Report::render`], so rendered reports are byte-identical across runs.

use crate::error::Result;
use crate::evolve::{
    energy, equivariant_rhs, initial_state, shoot_and_fit, step, InitialData, Mesh, MeshSpec, ShootingSpec, SimConfig,
    StopReason,
};
use crate::geometry::PhysParams;
use crate::grid::RadialGrid;
use crate::linops::{
    apply_a_minus_b_wedge, apply_l_in, apply_lin_complex, complex_to_field, field_to_complex, mode_residual_scaled,
    scalar_kernels, BaseMap, PolarComplexField, PolarGrid, RadialComplexField,
};
use crate::nonlocal::{certificate_sweep, lambda_star, CertificateReport};
use crate::reduced::{b0_apply, moment_table, param_feasible, GluingParams, RateProfile};
use crate::spectral::{
    distorted_eigenfunction, envelope_constants, mode_minus_one_zero_solution, principal_eigenvalue, SpectralProblem,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

pub const MOMENT_TOL: f64 = 1e-8;
pub const MOMENT_SECONDS: f64 = 1.0;
pub const KERNEL_NODES: usize = 2000;
pub const KERNEL_RESIDUAL_TOL: f64 = 1e-4;
pub const KERNEL_MIN_SLOPE: f64 = 1.9;
pub const WRONSKIAN_TOL: f64 = 1e-9;
pub const COMPLEX_FIELDS: usize = 20;
pub const COMPLEX_FACTOR: f64 = 10.0;
pub const COMPLEX_SECONDS: f64 = 10.0;
pub const EIG_RADII: [f64; 5] = [50.0, 100.0, 200.0, 400.0, 800.0];
pub const EIG_MODE0_SPREAD: f64 = 0.3;
pub const EIG_MODE1_SLOPE: [f64; 2] = [-4.3, -3.7];
pub const ZERO_ENERGY_TOL: f64 = 1e-8;
pub const ENVELOPE_MAX: f64 = 5.0;
pub const CERT_GRID: usize = 40;
pub const CERT_TIMES: [f64; 2] = [1e-3, 1e-4];
pub const CERT_FACTOR: f64 = 1.5;
pub const B0_KAPPA: f64 = 0.7;
pub const B0_TIMES: [f64; 2] = [1e-3, 1e-5];
pub const B0_FRACTIONS: [f64; 3] = [0.9, 0.99, 0.999];
pub const BOX_SAMPLES: usize = 100;
pub const DRIFT_PER_STEP: f64 = 1e-10;
pub const ENERGY_STEP_TOL: f64 = 1e-8;
pub const BUBBLE_ENERGY_TOL: f64 = 1e-6;
pub const RESIDUAL_MIN_ORDER: f64 = 1.9;
pub const BLOWUP_DECADES: f64 = 2.0;
pub const BLOWUP_ALPHA: [f64; 2] = [0.8, 1.2];
pub const BLOWUP_SECONDS: f64 = 600.0;

/// Recorded maxima of `(phi0, phi0_star, sj)` on the 40 x 40 grid, keyed by
/// `(a, b, T)`. Later runs must stay within [`CERT_FACTOR`] of these.
pub const CERT_REGRESSION: [(f64, f64, f64, [f64; 3]); 4] = [
    (1.0, 0.0, 1e-3, [9.3926, 2.2245, 5.4870]),
    (1.0, 0.0, 1e-4, [9.0807, 0.73998, 4.9968]),
    (0.8, 0.6, 1e-3, [10.322, 2.3309, 4.7108]),
    (0.8, 0.6, 1e-4, [9.7167, 0.74062, 4.2702]),
];

pub const PHYS_PAIRS: [(f64, f64); 2] = [(1.0, 0.0), (0.8, 0.6)];

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "[{tag}] {:>2} {}: {}", c.id, c.name, c.detail);
        }
        let n = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(s, "{n}/{} passed (seed {})", self.checks.len(), self.seed);
        s
    }
}

pub const CHECK_IDS: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

type CheckFn = dyn Fn() -> Result<(bool, String)>;

/// Runs one check by id; unknown ids yield `None`.
pub fn run_check(id: u8, seed: u64) -> Option<CheckResult> {
    let (name, f): (&'static str, Box<CheckFn>) = match id {
        1 => ("moment constants", Box::new(moments)),
        2 => ("kernel annihilation", Box::new(kernels)),
        3 => ("vector/complex equivalence", Box::new(move || complex_equivalence(seed))),
        4 => ("eigenvalue scalings", Box::new(eigen_scalings)),
        5 => ("distorted mode -1", Box::new(distorted_mode)),
        6 => ("correction certificates", Box::new(certificates)),
        7 => ("reduced operator", Box::new(reduced_operator)),
        8 => ("parameter feasibility", Box::new(move || feasibility(seed))),
        9 => ("simulator invariants", Box::new(simulator_invariants)),
        10 => ("blow-up signature", Box::new(blowup_signature)),
        _ => return None,
    };
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    // the two timed criteria fold their runtime budget into the verdict
    let budget = match id {
        1 => Some(MOMENT_SECONDS),
        3 => Some(COMPLEX_SECONDS),
        _ => None,
    };
    let passed = passed && budget.is_none_or(|b| seconds < b);
    Some(CheckResult { id, name, passed, detail, seconds })
}

pub fn run_selected(ids: &[u8], seed: u64) -> Report {
    Report { seed, checks: ids.iter().filter_map(|&id| run_check(id, seed)).collect() }
}

pub fn run_all(seed: u64) -> Report {
    run_selected(&CHECK_IDS, seed)
}

fn moments() -> Result<(bool, String)> {
    let rows = moment_table()?;
    let worst = rows.iter().map(|r| r.abs_error()).fold(0.0, f64::max);
    Ok((rows.len() == 6 && worst <= MOMENT_TOL, format!("6 constants, max error {worst:.2e}")))
}

fn kernel_residuals(k: i32, n: usize) -> Result<[f64; 2]> {
    let g = RadialGrid::geometric(1e-2, 1e2, n)?;
    let kp = scalar_kernels(k);
    let mut out = [0.0; 2];
    for (q, slot) in out.iter_mut().enumerate() {
        let f = RadialComplexField::from_fn(g.clone(), |r| {
            Complex64::new(if q == 0 { kp.z1(r) } else { kp.z2(r) }, 0.0)
        });
        *slot = mode_residual_scaled(k, &f)?.into_iter().fold(0.0, f64::max);
    }
    Ok(out)
}

fn kernels() -> Result<(bool, String)> {
    let mut worst_res: f64 = 0.0;
    let mut worst_slope = f64::INFINITY;
    let mut worst_wr: f64 = 0.0;
    let fine = RadialGrid::geometric(1e-2, 1e2, KERNEL_NODES)?;
    for k in -3..=3 {
        let a = kernel_residuals(k, KERNEL_NODES / 2)?;
        let b = kernel_residuals(k, KERNEL_NODES)?;
        for q in 0..2 {
            worst_res = worst_res.max(b[q]);
            let h_ratio = fine.max_log_step() / RadialGrid::geometric(1e-2, 1e2, KERNEL_NODES / 2)?.max_log_step();
            worst_slope = worst_slope.min((a[q] / b[q]).ln() / (1.0 / h_ratio).ln());
        }
        let kp = scalar_kernels(k);
        for &r in fine.nodes() {
            worst_wr = worst_wr.max((kp.wronskian(r) - 1.0 / r).abs());
        }
    }
    let ok = worst_res <= KERNEL_RESIDUAL_TOL && worst_slope >= KERNEL_MIN_SLOPE && worst_wr <= WRONSKIAN_TOL;
    Ok((ok, format!("max scaled residual {worst_res:.2e}, min slope {worst_slope:.3}, Wronskian error {worst_wr:.2e}")))
}

/// Smooth random complex field: a few angular modes with Gaussian radial profiles.
fn random_field(rng: &mut ChaCha8Rng, grid: PolarGrid) -> PolarComplexField {
    let c: Vec<Complex64> = (0..10).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let width: f64 = rng.gen_range(0.5..2.0);
    PolarComplexField::from_fn(grid, |r, t| {
        let env = r * (-(r / width).powi(2)).exp();
        (-2i32..=2).fold(Complex64::new(0.0, 0.0), |acc, m| {
            let i = (m + 2) as usize;
            acc + (c[i] + c[i + 5] * r) * env * Complex64::from_polar(1.0, m as f64 * t)
        })
    })
}

fn complex_equivalence(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = PolarGrid::new(RadialGrid::geometric(0.05, 20.0, 300)?, 64)?;
    let h = grid.h();
    let mut worst: f64 = 0.0;
    for i in 0..COMPLEX_FIELDS {
        let (a, b) = PHYS_PAIRS[i % 2];
        let psi = random_field(&mut rng, grid.clone());
        let v = complex_to_field(&psi, BaseMap::W);
        let lv = apply_a_minus_b_wedge(&grid, BaseMap::W, a, b, &apply_l_in(&v)?);
        let lhs = field_to_complex(&grid, BaseMap::W, &lv);
        let rhs = apply_lin_complex(&psi)?;
        let c = Complex64::new(a, -b);
        let d = lhs.values.iter().zip(&rhs.values).map(|(x, y)| (x - c * y).norm()).fold(0.0, f64::max);
        worst = worst.max(d / (h * h * psi.c2_proxy()?));
    }
    Ok((worst <= COMPLEX_FACTOR, format!("{COMPLEX_FIELDS} fields, max error/(h^2 C2) {worst:.3}")))
}

fn eigen_scalings() -> Result<(bool, String)> {
    let mut min_lambda = f64::INFINITY;
    let mut c0 = Vec::new();
    let mut l1 = Vec::new();
    for k in -3..=3 {
        for &r in &EIG_RADII {
            let e = principal_eigenvalue(&SpectralProblem::new(k, r, 2000)?)?;
            min_lambda = min_lambda.min(e.lambda_min);
            match k {
                0 => c0.push(e.lambda_min * r * r * r.ln()),
                1 => l1.push(e.lambda_min),
                _ => {}
            }
        }
    }
    let mean = c0.iter().sum::<f64>() / c0.len() as f64;
    let spread = c0.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
    let lx: Vec<f64> = EIG_RADII.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = l1.iter().map(|v| v.ln()).collect();
    let s1 = crate::grid::slope(&lx, &ly);
    let ok = spread <= EIG_MODE0_SPREAD
        && (EIG_MODE1_SLOPE[0]..=EIG_MODE1_SLOPE[1]).contains(&s1)
        && min_lambda >= 0.0;
    Ok((ok, format!("mode-0 R^2 lnR spread {spread:.3}, mode-1 slope {s1:.3}, min eigenvalue {min_lambda:.3e}")))
}

fn distorted_mode() -> Result<(bool, String)> {
    let g = RadialGrid::geometric(0.01, 50.0, 500)?;
    let e = distorted_eigenfunction(0.0, &g)?;
    let zero_err = g
        .nodes()
        .iter()
        .zip(&e.values)
        .map(|(&r, v)| ((v - mode_minus_one_zero_solution(r)) / mode_minus_one_zero_solution(r)).abs())
        .fold(0.0, f64::max);
    let (mut inner, mut outer) = (0.0f64, 0.0f64);
    for i in 0..=8 {
        let xi = 10f64.powi(i - 4);
        // reach well into the oscillatory regime rho^2 xi > 1
        let grid = RadialGrid::geometric(1e-3, (30.0 / xi.sqrt()).max(10.0), 4000)?;
        let c = envelope_constants(&distorted_eigenfunction(xi, &grid)?);
        inner = inner.max(c.inner);
        outer = outer.max(c.outer);
    }
    let ok = zero_err <= ZERO_ENERGY_TOL && inner <= ENVELOPE_MAX && outer <= ENVELOPE_MAX;
    Ok((ok, format!("xi=0 error {zero_err:.2e}, envelope constants inner {inner:.3} outer {outer:.3}")))
}

fn regression_for(a: f64, b: f64, t: f64) -> Option<[f64; 3]> {
    CERT_REGRESSION.iter().find(|r| r.0 == a && r.1 == b && r.2 == t).map(|r| r.3)
}

fn certificates() -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for &(a, b) in &PHYS_PAIRS {
        let pp = PhysParams::new(a, b)?;
        for &t in &CERT_TIMES {
            let rep: CertificateReport = certificate_sweep(t, CERT_GRID, &pp)?;
            let got = [rep.phi0_max, rep.phi0_star_max, rep.sj_max];
            let reg = regression_for(a, b, t).expect("regression table covers every case");
            for (g, r) in got.iter().zip(&reg) {
                ok &= g.is_finite() && *g <= CERT_FACTOR * r;
                worst = worst.max(g / r);
            }
        }
    }
    Ok((ok, format!("4 cases, worst ratio to recorded constant {worst:.3}")))
}

fn reduced_operator() -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for &t_final in &B0_TIMES {
        let prof = RateProfile::new(t_final, B0_KAPPA, 20)?;
        for &frac in &B0_FRACTIONS {
            let t = frac * t_final;
            let v = b0_apply(&prof, t, lambda_star(t_final, t))?;
            let ll = (t_final - t).ln().abs();
            let tol = 3.0 * ll.ln() / ll;
            let rel = (v.re + B0_KAPPA).abs() / B0_KAPPA;
            ok &= rel <= tol;
            worst = worst.max(rel / tol);
        }
    }
    Ok((ok, format!("6 points, worst error/tolerance {worst:.3}")))
}

fn out_of_box_samples() -> [GluingParams; 10] {
    let m = GluingParams::box_midpoint();
    [
        GluingParams { theta: 0.5, ..m },
        GluingParams { theta: -0.05, ..m },
        GluingParams { beta: 0.6, ..m },
        GluingParams { beta: 0.2, ..m },
        GluingParams { sigma0: -0.01, ..m },
        GluingParams { delta0: 0.3, ..m },
        GluingParams { nu: 1.1, ..m },
        GluingParams { l: 1.2, ..m },
        GluingParams { alpha0: 0.7, ..m },
        GluingParams { alpha: 0.3, ..m },
    ]
}

fn feasibility(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inside = (0..BOX_SAMPLES).filter(|_| param_feasible(&GluingParams::sample_box(&mut rng)).feasible).count();
    let flagged = out_of_box_samples().iter().filter(|g| !param_feasible(g).violations.is_empty()).count();
    Ok((
        inside == BOX_SAMPLES && flagged == 10,
        format!("{inside}/{BOX_SAMPLES} box samples feasible, {flagged}/10 outside samples flagged"),
    ))
}

fn simulator_invariants() -> Result<(bool, String)> {
    // per-step constraint drift and energy monotonicity of the production integrator
    let mut drift: f64 = 0.0;
    let mut rise: f64 = 0.0;
    for &(a, b) in &PHYS_PAIRS {
        let cfg = SimConfig::blowup(PhysParams::new(a, b)?);
        let m = Mesh::new(cfg.mesh)?;
        let mut st = initial_state(&m, &InitialData::BubbleInField { lambda: 0.2, tilt: 1.0, phase: 0.3 })?;
        let e0 = energy(&m, &st.v);
        let mut e_prev = e0;
        for _ in 0..2000 {
            let d0 = st.constraint_defect();
            st = step(&m, &st, 1e-4, &cfg)?;
            drift = drift.max((st.constraint_defect() - d0).abs());
            let e = energy(&m, &st.v);
            rise = rise.max((e - e_prev) / e0);
            e_prev = e;
        }
    }
    // energy of the bubble on a large disc
    let m = Mesh::new(MeshSpec { r_outer: 1e4, intervals: 30000, core: 0.05 })?;
    let e_w = energy(&m, &initial_state(&m, &InitialData::Bubble { lambda: 1.0, gamma: 0.0 })?.v);
    let e_err = (e_w - 4.0 * PI).abs();
    // stationary residual under mesh halving
    let pp = PhysParams::new(0.8, 0.6)?;
    let res = |n: usize| -> Result<(f64, f64)> {
        let m = Mesh::new(MeshSpec { r_outer: 20.0, intervals: n, core: 0.2 })?;
        let st = initial_state(&m, &InitialData::Bubble { lambda: 1.0, gamma: 0.4 })?;
        let f = equivariant_rhs(&m, &st.v, &pp);
        Ok((f.iter().map(|x| x.max_abs()).fold(0.0, f64::max), m.h()))
    };
    let (r1, h1) = res(200)?;
    let (r2, h2) = res(400)?;
    let order = (r1 / r2).ln() / (h1 / h2).ln();
    let ok = drift <= DRIFT_PER_STEP && rise <= ENERGY_STEP_TOL && e_err <= BUBBLE_ENERGY_TOL && order >= RESIDUAL_MIN_ORDER;
    Ok((
        ok,
        format!(
            "drift/step {drift:.1e}, max energy rise/E0 {rise:.1e}, |E(W)-4pi| {e_err:.1e}, residual order {order:.3}"
        ),
    ))
}

/// Outcome of one tuned blow-up run.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupSummary {
    pub a: f64,
    pub b: f64,
    pub phase: f64,
    pub decades: f64,
    pub exponent: f64,
    /// `lambda_est / sqrt(T_est - t)` at the start and end of the fit window
    pub ratio: [f64; 2],
    pub ratio_monotone: bool,
    pub seconds: f64,
    pub passed: bool,
}

pub fn blowup_run(a: f64, b: f64) -> Result<BlowupSummary> {
    let start = Instant::now();
    let cfg = SimConfig::blowup(PhysParams::new(a, b)?);
    let (tuning, d) = shoot_and_fit(&cfg, &ShootingSpec::default())?;
    let seconds = start.elapsed().as_secs_f64();
    let first = d.samples.first().map_or(f64::NAN, |s| s.lambda_est);
    let last = d.samples.last().map_or(f64::NAN, |s| s.lambda_est);
    let decades = (first / last).log10();
    let (exponent, ratio, monotone) = match d.fit {
        Some(fit) => {
            let q: Vec<f64> = d
                .samples
                .iter()
                .filter(|s| s.t >= fit.window[0])
                .map(|s| s.lambda_est / (fit.t_est - s.t).sqrt())
                .collect();
            let mono = q.windows(2).all(|w| w[1] <= w[0]);
            (fit.exponent, [q[0], q[q.len() - 1]], mono)
        }
        None => (f64::NAN, [f64::NAN; 2], false),
    };
    let passed = d.stop == StopReason::LambdaThreshold
        && decades >= BLOWUP_DECADES
        && (BLOWUP_ALPHA[0]..=BLOWUP_ALPHA[1]).contains(&exponent)
        && monotone
        && ratio[1] < 0.5 * ratio[0]
        && seconds <= BLOWUP_SECONDS;
    Ok(BlowupSummary { a, b, phase: tuning.phase, decades, exponent, ratio, ratio_monotone: monotone, seconds, passed })
}

fn blowup_signature() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(a, b) in &PHYS_PAIRS {
        let s = blowup_run(a, b)?;
        ok &= s.passed;
        parts.push(format!(
            "(a,b)=({a},{b}) decades {:.2} alpha {:.3} lambda/sqrt(T-t) {:.2e}->{:.2e}",
            s.decades, s.exponent, s.ratio[0], s.ratio[1]
        ));
    }
    Ok((ok, parts.join("; ")))
}
