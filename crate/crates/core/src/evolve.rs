//! 1-equivariant LLG flow `u(r, theta) = e^{theta J} v(r)` on a sinh-graded
//! radial mesh, with energy and scale diagnostics and rate fitting.

use crate::error::{Error, Result};
use crate::geometry::PhysParams;
use crate::linalg::{solve_block_tridiagonal, Mat3};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::PI;

/// `r = A sinh(s)` on a uniform `s` grid; `A` sets the width of the
/// near-uniform core around the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub r_outer: f64,
    /// number of intervals
    pub intervals: usize,
    pub core: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub spec: MeshSpec,
    pub ds: f64,
    pub r: Vec<f64>,
    /// `dr/ds`
    pub rs: Vec<f64>,
    /// `r` and `dr/ds` at the interval midpoints
    pub r_half: Vec<f64>,
    pub rs_half: Vec<f64>,
}

impl Mesh {
    pub fn new(spec: MeshSpec) -> Result<Self> {
        if !(spec.r_outer > 0.0 && spec.core > 0.0) || spec.intervals < 8 {
            return Err(Error::InvalidParam(format!("bad mesh {spec:?}")));
        }
        let n = spec.intervals;
        let ds = (spec.r_outer / spec.core).asinh() / n as f64;
        let s = |i: usize| i as f64 * ds;
        let r: Vec<f64> = (0..=n).map(|i| spec.core * s(i).sinh()).collect();
        let rs = (0..=n).map(|i| spec.core * s(i).cosh()).collect();
        let r_half = (0..n).map(|i| spec.core * ((i as f64 + 0.5) * ds).sinh()).collect();
        let rs_half = (0..n).map(|i| spec.core * ((i as f64 + 0.5) * ds).cosh()).collect();
        Ok(Self { spec, ds, r, rs, r_half, rs_half })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Radius of the first node off the origin.
    pub fn first_node(&self) -> f64 {
        self.r[1]
    }

    /// Smallest `dr` of the mesh.
    pub fn min_step(&self) -> f64 {
        self.r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Representative mesh width `ds` (the grid is uniform in `s`).
    pub fn h(&self) -> f64 {
        self.ds
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtPolicy {
    Fixed { dt: f64 },
    /// `dt = min(c lambda_est^2, dt_max)`
    SelfSimilar { c: f64, dt_max: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// classical RK4, subject to the explicit stability bound
    Rk4,
    /// linearly implicit Euler in the Laplacian followed by projection to the sphere
    SemiImplicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(with = "pp_serde")]
    pub pp: PhysParams,
    pub mesh: MeshSpec,
    pub dt: DtPolicy,
    pub integrator: Integrator,
    pub renormalize: bool,
    pub t_max: f64,
    /// stop once `lambda_est` falls below this value
    pub lambda_stop: f64,
    /// explicit bound `dt <= cfl (min dr)^2`
    pub cfl: f64,
    /// record a diagnostic sample every this many steps
    pub sample_every: usize,
    pub max_steps: usize,
}

mod pp_serde {
    use crate::geometry::PhysParams;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Ab {
        a: f64,
        b: f64,
    }

    pub fn serialize<S: Serializer>(pp: &PhysParams, s: S) -> Result<S::Ok, S::Error> {
        Ab { a: pp.a(), b: pp.b() }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PhysParams, D::Error> {
        let ab = Ab::deserialize(d)?;
        PhysParams::new(ab.a, ab.b).map_err(serde::de::Error::custom)
    }
}

impl SimConfig {
    /// Settings used for the blow-up experiments.
    pub fn blowup(pp: PhysParams) -> Self {
        Self {
            pp,
            mesh: MeshSpec { r_outer: 1.0, intervals: 600, core: 2e-6 },
            dt: DtPolicy::SelfSimilar { c: 1.0, dt_max: 1e-3 },
            integrator: Integrator::SemiImplicit,
            renormalize: true,
            t_max: 5.0,
            lambda_stop: 2e-4,
            cfl: 0.2,
            sample_every: 10,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagSample {
    pub t: f64,
    pub lambda_est: f64,
    #[serde(default)]
    pub energy: f64,
    #[serde(default)]
    pub max_grad: f64,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub v: Vec<Vec3>,
    pub recent: VecDeque<DiagSample>,
}

const RING: usize = 64;

impl SimState {
    pub fn new(v: Vec<Vec3>) -> Self {
        Self { t: 0.0, v, recent: VecDeque::with_capacity(RING) }
    }

    pub fn push_sample(&mut self, s: DiagSample) {
        if self.recent.len() == RING {
            self.recent.pop_front();
        }
        self.recent.push_back(s);
    }

    /// `max_i ||v_i| - 1|`
    pub fn constraint_defect(&self) -> f64 {
        self.v.iter().map(|x| (x.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// rescaled and rotated bubble `w = pi - 2 arctan(r/lambda)`
    Bubble { lambda: f64, gamma: f64 },
    /// bubble whose polar angle is lowered by `twist g(r/width)` and whose
    /// azimuth is turned by `phase g(r/width)`, with `g(x) = x^2/(1+x^2)`
    TwistedBubble { lambda: f64, twist: f64, width: f64, phase: f64 },
    /// bubble placed in the harmonic background field whose complex polar
    /// angle is `-tilt r e^{i phase}`: `z = pi - 2 arctan(r/lambda) - tilt r e^{i phase}`
    BubbleInField { lambda: f64, tilt: f64, phase: f64 },
}

fn rotate(v: Vec3, gamma: f64) -> Vec3 {
    let (s, c) = gamma.sin_cos();
    Vec3([c * v.0[0] - s * v.0[1], s * v.0[0] + c * v.0[1], v.0[2]])
}

pub fn initial_state(mesh: &Mesh, init: &InitialData) -> Result<SimState> {
    let v = match *init {
        InitialData::Bubble { lambda, gamma } => {
            if !(lambda > 0.0) {
                return Err(Error::InvalidParam("bubble scale must be positive".into()));
            }
            mesh.r
                .iter()
                .map(|&r| {
                    let w = PI - 2.0 * (r / lambda).atan();
                    rotate(Vec3([w.sin(), 0.0, w.cos()]), gamma)
                })
                .collect()
        }
        InitialData::TwistedBubble { lambda, twist, width, phase } => {
            if !(lambda > 0.0 && width > 0.0) {
                return Err(Error::InvalidParam("bubble scale and twist width must be positive".into()));
            }
            mesh.r
                .iter()
                .map(|&r| {
                    let x = (r / width).powi(2);
                    let g = x / (1.0 + x);
                    let w = PI - 2.0 * (r / lambda).atan() - twist * g;
                    rotate(Vec3([w.sin(), 0.0, w.cos()]), phase * g)
                })
                .collect()
        }
        InitialData::BubbleInField { lambda, tilt, phase } => {
            if !(lambda > 0.0) {
                return Err(Error::InvalidParam("bubble scale must be positive".into()));
            }
            let (s, c) = phase.sin_cos();
            mesh.r
                .iter()
                .map(|&r| {
                    let re = PI - 2.0 * (r / lambda).atan() - tilt * r * c;
                    let im = -tilt * r * s;
                    let w = re.hypot(im);
                    rotate(Vec3([w.sin(), 0.0, w.cos()]), im.atan2(re))
                })
                .collect()
        }
    };
    let mut st = SimState::new(v);
    // the origin sits exactly on a pole
    let z = st.v[0].0[2].signum();
    st.v[0] = Vec3([0.0, 0.0, z]);
    Ok(st)
}

/// Reflection across the origin, `v(-r) = (-v1, -v2, v3)`.
fn reflect(v: &Vec3) -> Vec3 {
    Vec3([-v.0[0], -v.0[1], v.0[2]])
}

/// Per-component weights `(w_minus, w_center, w_plus)` of `L` at an
/// interior node. The in-plane components use `L = d/dr (1/r) d/dr (r .)`,
/// which equals `v'' + v'/r - v/r^2` and is exact for `c1 r + c3 r^3`; the
/// axial component uses `(1/r) d/dr (r d/dr .)`.
fn stencil(mesh: &Mesh, i: usize) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let ds2 = mesh.ds * mesh.ds;
    let (r, rs) = (mesh.r[i], mesh.rs[i]);
    let (rm, rsm) = (mesh.r_half[i - 1], mesh.rs_half[i - 1]);
    let (rp, rsp) = (mesh.r_half[i], mesh.rs_half[i]);
    let fm = 1.0 / (ds2 * rs * rsm * rm);
    let fp = 1.0 / (ds2 * rs * rsp * rp);
    let (pm, pp) = (fm * mesh.r[i - 1], fp * mesh.r[i + 1]);
    let pc = -(fm + fp) * r;
    let gm = rm / (ds2 * r * rs * rsm);
    let gp = rp / (ds2 * r * rs * rsp);
    ([pm, pm, gm], [pc, pc, -(gm + gp)], [pp, pp, gp])
}

/// `dv/dr` at every node: centered inside, mirror ghost at the origin,
/// one-sided at the outer edge.
fn radial_derivative(mesh: &Mesh, v: &[Vec3]) -> Vec<Vec3> {
    let n = v.len() - 1;
    let ds = mesh.ds;
    (0..=n)
        .map(|i| {
            let vs = if i == 0 {
                (v[1] - reflect(&v[1])) * (0.5 / ds)
            } else if i == n {
                (v[n] * 3.0 - v[n - 1] * 4.0 + v[n - 2]) * (0.5 / ds)
            } else {
                (v[i + 1] - v[i - 1]) * (0.5 / ds)
            };
            vs * (1.0 / mesh.rs[i])
        })
        .collect()
}

/// `|grad u|^2 = |v'|^2 + (v1^2 + v2^2)/r^2`, with the limit `2 |(v1', v2')|^2` at the origin.
fn grad_sq(mesh: &Mesh, v: &[Vec3], vr: &[Vec3]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            if i == 0 {
                2.0 * (vr[0].0[0].powi(2) + vr[0].0[1].powi(2))
            } else {
                vr[i].norm_sq() + (v[i].0[0].powi(2) + v[i].0[1].powi(2)) / mesh.r[i].powi(2)
            }
        })
        .collect()
}

fn laplacian(mesh: &Mesh, v: &[Vec3]) -> Vec<Vec3> {
    let n = v.len() - 1;
    let mut out = vec![Vec3::ZERO; n + 1];
    for i in 1..n {
        let (wm, wc, wp) = stencil(mesh, i);
        let (a, b, c) = (v[i - 1].0, v[i].0, v[i + 1].0);
        let mut o = [0.0; 3];
        for k in 0..2 {
            o[k] = wm[k] * a[k] + wc[k] * b[k] + wp[k] * c[k];
        }
        // difference form keeps constants exactly in the kernel
        o[2] = wm[2] * (a[2] - b[2]) + wp[2] * (c[2] - b[2]);
        out[i] = Vec3(o);
    }
    out
}

/// `F(v) = a (L v + |grad u|^2 v) - b v x L v` at every node; the pole at the
/// origin and the clamped outer node carry zero.
pub fn equivariant_rhs(mesh: &Mesh, v: &[Vec3], pp: &PhysParams) -> Vec<Vec3> {
    let lv = laplacian(mesh, v);
    let g = grad_sq(mesh, v, &radial_derivative(mesh, v));
    let (a, b) = (pp.a(), pp.b());
    let n = v.len() - 1;
    (0..=n)
        .map(|i| if i == 0 || i == n { Vec3::ZERO } else { (lv[i] + v[i] * g[i]) * a - v[i].cross(&lv[i]) * b })
        .collect()
}

/// Tension `L v + |grad u|^2 v` (zero at the fixed nodes).
pub fn tension(mesh: &Mesh, v: &[Vec3]) -> Vec<Vec3> {
    let lv = laplacian(mesh, v);
    let g = grad_sq(mesh, v, &radial_derivative(mesh, v));
    let n = v.len() - 1;
    (0..=n).map(|i| if i == 0 || i == n { Vec3::ZERO } else { lv[i] + v[i] * g[i] }).collect()
}

/// Trapezoid rule in `s` for `2 pi int f(r) r dr`.
fn planar_integral(mesh: &Mesh, f: &[f64]) -> f64 {
    let n = f.len() - 1;
    let mut s = 0.0;
    for (i, fi) in f.iter().enumerate() {
        let w = if i == n { 0.5 } else { 1.0 };
        // the node at the origin carries weight r = 0
        s += w * fi * mesh.r[i] * mesh.rs[i];
    }
    2.0 * PI * s * mesh.ds
}

/// Dirichlet energy `E = pi int (|v'|^2 + |Jv|^2/r^2) r dr`.
pub fn energy(mesh: &Mesh, v: &[Vec3]) -> f64 {
    let g = grad_sq(mesh, v, &radial_derivative(mesh, v));
    0.5 * planar_integral(mesh, &g)
}

/// Dissipation rate `a int |tension|^2 dx`, which equals `-dE/dt`.
pub fn dissipation(mesh: &Mesh, v: &[Vec3], pp: &PhysParams) -> f64 {
    let t: Vec<f64> = tension(mesh, v).iter().map(|x| x.norm_sq()).collect();
    pp.a() * planar_integral(mesh, &t)
}

/// `max |grad u|` over the mesh.
pub fn max_grad(mesh: &Mesh, v: &[Vec3]) -> f64 {
    grad_sq(mesh, v, &radial_derivative(mesh, v)).into_iter().fold(0.0, f64::max).sqrt()
}

/// Bubble scale read off the peak gradient, `sqrt(8)/max |grad u|`.
pub fn lambda_estimate(mesh: &Mesh, v: &[Vec3]) -> f64 {
    8f64.sqrt() / max_grad(mesh, v)
}

fn normalize_interior(v: &mut [Vec3]) {
    let n = v.len() - 1;
    for x in v[1..n].iter_mut() {
        *x = x.normalized();
    }
}

fn check_finite(state: &SimState, v: &[Vec3]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Underresolved { t: state.t, reason: "non-finite values".into() })
    }
}

/// Explicit stability limit `cfl (min dr)^2`.
pub fn explicit_dt_limit(mesh: &Mesh, cfl: f64) -> f64 {
    cfl * mesh.min_step().powi(2)
}

/// One classical RK4 step; stage values are projected to the sphere when
/// `cfg.renormalize` is set.
pub fn step_rk4(mesh: &Mesh, state: &SimState, dt: f64, cfg: &SimConfig) -> Result<SimState> {
    let max = explicit_dt_limit(mesh, cfg.cfl);
    if dt > max {
        return Err(Error::Unstable { dt, max });
    }
    let pp = &cfg.pp;
    let v = &state.v;
    let stage = |base: &[Vec3], k: &[Vec3], h: f64| -> Vec<Vec3> {
        let mut w: Vec<Vec3> = base.iter().zip(k).map(|(x, y)| *x + *y * h).collect();
        if cfg.renormalize {
            normalize_interior(&mut w);
        }
        w
    };
    let k1 = equivariant_rhs(mesh, v, pp);
    let k2 = equivariant_rhs(mesh, &stage(v, &k1, 0.5 * dt), pp);
    let k3 = equivariant_rhs(mesh, &stage(v, &k2, 0.5 * dt), pp);
    let k4 = equivariant_rhs(mesh, &stage(v, &k3, dt), pp);
    let mut out: Vec<Vec3> = (0..v.len())
        .map(|i| v[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0))
        .collect();
    if cfg.renormalize {
        normalize_interior(&mut out);
    }
    check_finite(state, &out)?;
    Ok(SimState { t: state.t + dt, v: out, recent: state.recent.clone() })
}

fn cross_matrix(v: &Vec3) -> Mat3 {
    let [x, y, z] = v.0;
    [[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]]
}

/// One linearly implicit step: solves
/// `v* - dt (a - b v^n x) L v* = v^n + dt a |grad u^n|^2 v^n`
/// as a 3x3-block tridiagonal system and projects `v*` to the sphere.
pub fn step_semi_implicit(mesh: &Mesh, state: &SimState, dt: f64, cfg: &SimConfig) -> Result<SimState> {
    let v = &state.v;
    let n = v.len() - 1;
    let (a, b) = (cfg.pp.a(), cfg.pp.b());
    let g = grad_sq(mesh, v, &radial_derivative(mesh, v));
    let m = n - 1;
    let mut lo = vec![[[0.0; 3]; 3]; m];
    let mut di = vec![[[0.0; 3]; 3]; m];
    let mut up = vec![[[0.0; 3]; 3]; m];
    let mut rhs = vec![[0.0; 3]; m];
    for i in 1..n {
        let (wm, wc, wp) = stencil(mesh, i);
        let cx = cross_matrix(&v[i]);
        // M = a I - b [v]x
        let mut mm = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                mm[r][c] = -b * cx[r][c] + if r == c { a } else { 0.0 };
            }
        }
        let k = i - 1;
        for r in 0..3 {
            for c in 0..3 {
                lo[k][r][c] = -dt * wm[c] * mm[r][c];
                up[k][r][c] = -dt * wp[c] * mm[r][c];
                di[k][r][c] = -dt * wc[c] * mm[r][c] + if r == c { 1.0 } else { 0.0 };
            }
        }
        let mut f = v[i] + v[i] * (dt * a * g[i]);
        let scaled = |x: &Vec3, w: &[f64; 3]| Vec3([x.0[0] * w[0], x.0[1] * w[1], x.0[2] * w[2]]);
        if i == 1 {
            f += mat_apply(&mm, &scaled(&v[0], &wm)) * dt;
        }
        if i == n - 1 {
            f += mat_apply(&mm, &scaled(&v[n], &wp)) * dt;
        }
        rhs[k] = f.0;
    }
    let sol = solve_block_tridiagonal(&lo, &di, &up, &rhs)?;
    let mut out = v.clone();
    for (k, s) in sol.into_iter().enumerate() {
        out[k + 1] = Vec3(s).normalized();
    }
    check_finite(state, &out)?;
    Ok(SimState { t: state.t + dt, v: out, recent: state.recent.clone() })
}

fn mat_apply(m: &Mat3, v: &Vec3) -> Vec3 {
    let mut o = [0.0; 3];
    for (r, row) in m.iter().enumerate() {
        o[r] = row[0] * v.0[0] + row[1] * v.0[1] + row[2] * v.0[2];
    }
    Vec3(o)
}

/// Dispatches on the configured integrator.
pub fn step(mesh: &Mesh, state: &SimState, dt: f64, cfg: &SimConfig) -> Result<SimState> {
    match cfg.integrator {
        Integrator::Rk4 => step_rk4(mesh, state, dt, cfg),
        Integrator::SemiImplicit => step_semi_implicit(mesh, state, dt, cfg),
    }
}

/// Least-squares fit `ln lambda = alpha ln(T - t) + c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    #[serde(rename = "T_est")]
    pub t_est: f64,
    pub exponent: f64,
    /// `e^c`
    pub prefactor: f64,
    /// time window of the samples used
    pub window: [f64; 2],
    /// root-mean-square residual in `ln lambda`
    pub rms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    LambdaThreshold,
    TimeLimit,
    StepLimit,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowupDiagnostics {
    pub samples: Vec<DiagSample>,
    pub fit: Option<RateFit>,
    pub stop: StopReason,
    pub steps: usize,
    /// largest per-step energy increase relative to `E(0)`
    pub max_energy_increase: f64,
    /// largest `||v| - 1|` seen after a step
    pub max_constraint_defect: f64,
}

fn linear_ls(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ssr = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (slope, icpt, ssr)
}

/// Fits the power law over the samples whose `lambda` lies within one decade
/// of the last one. For each trial `T` the exponent and prefactor are a
/// linear least-squares problem; `T` itself is found by a scan in
/// `ln(T - t_last)` followed by golden-section refinement.
pub fn fit_rate(samples: &[DiagSample]) -> Option<RateFit> {
    let last = samples.last()?;
    let win: Vec<&DiagSample> = samples.iter().filter(|s| s.lambda_est <= 10.0 * last.lambda_est).collect();
    if win.len() < 6 {
        return None;
    }
    let t0 = win[0].t;
    let span = last.t - t0;
    if !(span > 0.0) {
        return None;
    }
    let y: Vec<f64> = win.iter().map(|s| s.lambda_est.ln()).collect();
    let ssr = |ld: f64| -> f64 {
        let d = ld.exp();
        let x: Vec<f64> = win.iter().map(|s| (last.t + d - s.t).ln()).collect();
        linear_ls(&x, &y).2
    };
    let (lo, hi) = ((span * 1e-8).ln(), (span * 1e3).ln());
    let n = 400;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=n {
        let ld = lo + (hi - lo) * i as f64 / n as f64;
        let v = ssr(ld);
        if v < best.1 {
            best = (ld, v);
        }
    }
    let step = (hi - lo) / n as f64;
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if ssr(c) < ssr(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let ld = 0.5 * (a + b);
    let dlt = ld.exp();
    let x: Vec<f64> = win.iter().map(|s| (last.t + dlt - s.t).ln()).collect();
    let (alpha, c, r) = linear_ls(&x, &y);
    Some(RateFit {
        t_est: last.t + dlt,
        exponent: alpha,
        prefactor: c.exp(),
        window: [t0, last.t],
        rms: (r / win.len() as f64).sqrt(),
    })
}

/// Integrates until `lambda_est < cfg.lambda_stop`, `t_max` or the step
/// limit, recording diagnostics, then fits the rate when the scale fell.
pub fn run_and_fit(cfg: &SimConfig, init: &InitialData) -> Result<BlowupDiagnostics> {
    let mesh = Mesh::new(cfg.mesh)?;
    let mut st = initial_state(&mesh, init)?;
    let e0 = energy(&mesh, &st.v);
    let sample = |st: &SimState| DiagSample {
        t: st.t,
        lambda_est: lambda_estimate(&mesh, &st.v),
        energy: energy(&mesh, &st.v),
        max_grad: max_grad(&mesh, &st.v),
    };
    let mut samples = vec![sample(&st)];
    st.push_sample(samples[0]);
    let mut e_prev = e0;
    let mut max_inc: f64 = 0.0;
    let mut max_defect = st.constraint_defect();
    let mut steps = 0;
    let stop = loop {
        let lam = lambda_estimate(&mesh, &st.v);
        if lam < cfg.lambda_stop {
            break StopReason::LambdaThreshold;
        }
        if st.t >= cfg.t_max {
            break StopReason::TimeLimit;
        }
        if steps >= cfg.max_steps {
            break StopReason::StepLimit;
        }
        if mesh.first_node() > 0.1 * lam {
            return Err(Error::NeedsRefinement { first: mesh.first_node(), limit: 0.1 * lam });
        }
        st = step(&mesh, &st, next_dt(cfg, lam, st.t), cfg)?;
        steps += 1;
        max_defect = max_defect.max(st.constraint_defect());
        let e = energy(&mesh, &st.v);
        max_inc = max_inc.max((e - e_prev) / e0);
        e_prev = e;
        if steps % cfg.sample_every == 0 {
            let s = sample(&st);
            samples.push(s);
            st.push_sample(s);
        }
    };
    if samples.last().map(|s| s.t) != Some(st.t) {
        samples.push(sample(&st));
    }
    let fit = if stop == StopReason::LambdaThreshold { fit_rate(&samples) } else { None };
    Ok(BlowupDiagnostics { samples, fit, stop, steps, max_energy_increase: max_inc, max_constraint_defect: max_defect })
}

/// Outcome of a trial run used to tune initial data onto the collapsing
/// trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Shot {
    /// `lambda_est` fell below `cfg.lambda_stop`; `late_winding` is the phase
    /// turned since the scale was ten times the threshold
    Collapsed { t: f64, late_winding: f64 },
    /// the scale turned back (or `t_max` passed); the sign records the
    /// direction in which the bubble phase was winding
    Turned { winding: f64, lambda_min: f64 },
}

/// Azimuth of `v` at the first node beyond `lambda_est`.
pub fn bubble_phase(mesh: &Mesh, v: &[Vec3]) -> f64 {
    let lam = lambda_estimate(mesh, v);
    let i = mesh.r.iter().position(|&r| r > lam).unwrap_or(mesh.len() - 1);
    v[i].0[1].atan2(v[i].0[0])
}

fn next_dt(cfg: &SimConfig, lam: f64, t: f64) -> f64 {
    let dt = match cfg.dt {
        DtPolicy::Fixed { dt } => dt,
        DtPolicy::SelfSimilar { c, dt_max } => (c * lam * lam).min(dt_max),
    };
    dt.min(cfg.t_max - t)
}

/// Runs until collapse, or until `lambda_est` exceeds 1.5 times its running
/// minimum, tracking the unwrapped bubble phase.
pub fn shoot(cfg: &SimConfig, init: &InitialData) -> Result<Shot> {
    let mesh = Mesh::new(cfg.mesh)?;
    let mut st = initial_state(&mesh, init)?;
    let mut g_prev = bubble_phase(&mesh, &st.v);
    let (mut winding, mut lmin, mut steps) = (0.0, f64::INFINITY, 0);
    let mut w_late = None;
    loop {
        let lam = lambda_estimate(&mesh, &st.v);
        let g = bubble_phase(&mesh, &st.v);
        winding += (g - g_prev + PI).rem_euclid(2.0 * PI) - PI;
        g_prev = g;
        lmin = lmin.min(lam);
        if lam < 10.0 * cfg.lambda_stop && w_late.is_none() {
            w_late = Some(winding);
        }
        if lam < cfg.lambda_stop {
            return Ok(Shot::Collapsed { t: st.t, late_winding: winding - w_late.unwrap_or(winding) });
        }
        if lam > 1.5 * lmin || st.t >= cfg.t_max || steps >= cfg.max_steps {
            return Ok(Shot::Turned { winding, lambda_min: lmin });
        }
        if mesh.first_node() > 0.1 * lam {
            return Err(Error::NeedsRefinement { first: mesh.first_node(), limit: 0.1 * lam });
        }
        st = step(&mesh, &st, next_dt(cfg, lam, st.t), cfg)?;
        steps += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseTuning {
    pub phase: f64,
    pub bracket: [f64; 2],
    pub trials: usize,
    /// outcome of the last trial
    pub last: Shot,
}

impl Shot {
    /// Direction of the phase winding: the total winding of a turned run,
    /// the late winding of a collapsed one.
    pub fn side(&self) -> f64 {
        match *self {
            Shot::Collapsed { late_winding, .. } => late_winding.signum(),
            Shot::Turned { winding, .. } => winding.signum(),
        }
    }
}

/// Narrows the background phase of [`InitialData::BubbleInField`] until the
/// bracket is narrower than `tol`. The two ends must wind in opposite
/// directions. With precession the complex scale `lambda e^{i gamma}` only
/// reaches zero without spinning for one phase, so blow-up is found by
/// shooting on the sign of the winding. Each round runs one trial per
/// available thread at equally spaced interior phases.
pub fn tune_phase(cfg: &SimConfig, lambda: f64, tilt: f64, bracket: [f64; 2], tol: f64) -> Result<PhaseTuning> {
    if !(tol > 0.0) || !(bracket[0] < bracket[1]) {
        return Err(Error::InvalidParam(format!("bad phase bracket {bracket:?} or tolerance {tol}")));
    }
    let trial = |phase: f64| shoot(cfg, &InitialData::BubbleInField { lambda, tilt, phase });
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).clamp(1, 8);
    let [mut lo, mut hi] = bracket;
    let ends = run_trials(&trial, &[lo, hi])?;
    let s_lo = ends[0].side();
    if s_lo * ends[1].side() >= 0.0 {
        return Err(Error::InvalidParam(format!("phase bracket [{lo}, {hi}] does not straddle the collapsing trajectory")));
    }
    let mut trials = 2;
    loop {
        let h = (hi - lo) / (workers + 1) as f64;
        let phases: Vec<f64> = (1..=workers).map(|i| lo + h * i as f64).collect();
        let shots = run_trials(&trial, &phases)?;
        trials += workers;
        // first interior point on the far side of the crossing
        let k = shots.iter().position(|s| s.side() != s_lo).unwrap_or(workers);
        let new_lo = if k == 0 { lo } else { phases[k - 1] };
        let new_hi = if k == workers { hi } else { phases[k] };
        if let Some(s) = shots.get(k).filter(|s| s.side() == 0.0) {
            return Ok(PhaseTuning { phase: phases[k], bracket: [new_lo, new_hi], trials, last: *s });
        }
        lo = new_lo;
        hi = new_hi;
        if hi - lo < tol {
            let phase = 0.5 * (lo + hi);
            let last = trial(phase)?;
            return Ok(PhaseTuning { phase, bracket: [lo, hi], trials: trials + 1, last });
        }
    }
}

fn run_trials<F>(trial: &F, phases: &[f64]) -> Result<Vec<Shot>>
where
    F: Fn(f64) -> Result<Shot> + Sync,
{
    std::thread::scope(|sc| {
        let handles: Vec<_> = phases.iter().map(|&p| sc.spawn(move || trial(p))).collect();
        handles.into_iter().map(|h| h.join().expect("trial thread panicked")).collect()
    })
}

/// Initial data family and tuning settings for a blow-up experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingSpec {
    pub lambda: f64,
    pub tilt: f64,
    pub bracket: [f64; 2],
    pub tol: f64,
    /// collapse threshold used by the tuning trials
    pub tune_stop: f64,
}

impl Default for ShootingSpec {
    fn default() -> Self {
        Self { lambda: 0.2, tilt: 1.0, bracket: [-1.5, 1.5], tol: 1e-5, tune_stop: 1e-3 }
    }
}

/// Tunes the background phase onto the collapsing trajectory and then runs
/// [`run_and_fit`] from the tuned data.
pub fn shoot_and_fit(cfg: &SimConfig, spec: &ShootingSpec) -> Result<(PhaseTuning, BlowupDiagnostics)> {
    let mut trial_cfg = *cfg;
    trial_cfg.lambda_stop = spec.tune_stop.max(cfg.lambda_stop);
    let tuning = tune_phase(&trial_cfg, spec.lambda, spec.tilt, spec.bracket, spec.tol)?;
    let init = InitialData::BubbleInField { lambda: spec.lambda, tilt: spec.tilt, phase: tuning.phase };
    Ok((tuning, run_and_fit(cfg, &init)?))
}
