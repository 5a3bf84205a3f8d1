//! Principal eigenvalues of the mode quadratic forms on balls, complex heat
//! kernels, radial Duhamel solvers and distorted eigenfunctions of mode -1.

use crate::error::{Error, Result};
use crate::geometry::PhysParams;
use crate::grid::{RadialGrid, Spacing};
use crate::linalg::solve_tridiagonal;
use crate::linops::{potential_v, scalar_kernels, RadialComplexField};
use crate::ode::{dopri5, OdeOptions};
use crate::quad::{gauss_legendre, integrate, QuadOptions};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Discretized quadratic form `Q_{R,k}(f,f) = 2 pi int_0^R (|f'|^2 - V_k f^2) rho d rho`
/// with `f(R) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralProblem {
    pub k: i32,
    pub r_max: f64,
    pub n: usize,
}

impl SpectralProblem {
    pub fn new(k: i32, r_max: f64, n: usize) -> Result<Self> {
        if !(r_max >= 10.0) || n < 200 {
            return Err(Error::InvalidParam(format!("need R >= 10 and n >= 200, got R={r_max}, n={n}")));
        }
        Ok(Self { k, r_max, n })
    }

    /// Modes `-1, 0, 1` are solved for `g = f/Z_{k,1}`; the others directly.
    fn uses_ground_state(&self) -> bool {
        (-1..=1).contains(&self.k)
    }

    /// Finite-element nodes. With the ground-state substitution the first
    /// node is the origin; otherwise the grid starts at `R * 1e-4`.
    fn nodes(&self) -> Vec<f64> {
        if self.uses_ground_state() {
            let lo = 1e-3 / (self.r_max * self.r_max);
            let g = RadialGrid::geometric(lo, self.r_max, self.n - 1).expect("valid range");
            std::iter::once(0.0).chain(g.nodes().iter().copied()).collect()
        } else {
            RadialGrid::geometric(self.r_max * 1e-4, self.r_max, self.n).expect("valid range").nodes().to_vec()
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenEstimate {
    pub lambda_min: f64,
    /// Ground state `f` (real-valued), normalized to unit mass and positive peak.
    pub eigvec: RadialComplexField,
    /// `|x - lambda A^{-1} B x|_B` for the `B`-normalized discrete eigenvector.
    pub residual: f64,
    pub iterations: usize,
}

/// Symmetric tridiagonal matrix stored by diagonals.
struct SymTri {
    di: Vec<f64>,
    off: Vec<f64>,
}

impl SymTri {
    fn zeros(n: usize) -> Self {
        Self { di: vec![0.0; n], off: vec![0.0; n] }
    }
    fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = self.di[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let lo: Vec<f64> = (0..n).map(|i| if i > 0 { self.off[i - 1] } else { 0.0 }).collect();
        solve_tridiagonal(&lo, &self.di, &self.off, b)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Assembles stiffness and mass matrices for linear elements on `x`, keeping
/// the unknowns `first..x.len()-1` (the last node carries the Dirichlet value).
fn assemble(x: &[f64], first: usize, stiff_w: impl Fn(f64) -> f64, pot_w: impl Fn(f64) -> f64, mass_w: impl Fn(f64) -> f64) -> (SymTri, SymTri, Vec<f64>) {
    let (gx, gw) = gauss_legendre(4);
    let m = x.len() - 1 - first;
    let mut a = SymTri::zeros(m);
    let mut b = SymTri::zeros(m);
    let mut elem = Vec::with_capacity(x.len() - 1);
    for e in 0..x.len() - 1 {
        let (x0, x1) = (x[e], x[e + 1]);
        let h = x1 - x0;
        let (mut ks, mut kp00, mut kp01, mut kp11, mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (q, w) in gx.iter().zip(&gw) {
            let s = 0.5 * (q + 1.0);
            let r = x0 + s * h;
            let wq = 0.5 * h * w;
            let (p0, p1) = (1.0 - s, s);
            ks += wq * stiff_w(r) / (h * h);
            let pw = pot_w(r);
            kp00 += wq * pw * p0 * p0;
            kp01 += wq * pw * p0 * p1;
            kp11 += wq * pw * p1 * p1;
            let mw = mass_w(r);
            m00 += wq * mw * p0 * p0;
            m01 += wq * mw * p0 * p1;
            m11 += wq * mw * p1 * p1;
        }
        elem.push(ks);
        let idx = |node: usize| -> Option<usize> { (node >= first && node < x.len() - 1).then(|| node - first) };
        if let Some(i) = idx(e) {
            a.di[i] += ks + kp00;
            b.di[i] += m00;
        }
        if let Some(j) = idx(e + 1) {
            a.di[j] += ks + kp11;
            b.di[j] += m11;
        }
        if let (Some(i), Some(_)) = (idx(e), idx(e + 1)) {
            a.off[i] += -ks + kp01;
            b.off[i] += m01;
        }
    }
    (a, b, elem)
}

/// Stiffness operator of the pencil.
enum Stiffness {
    /// Pure weighted Laplacian `sum_e k_e (g_{e+1} - g_e)^2` with the last node
    /// clamped. Solved by two cumulative sums, which stays accurate when the
    /// smallest eigenvalue is far below the element stiffnesses.
    Ladder(Vec<f64>),
    Banded(SymTri),
}

impl Stiffness {
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        match self {
            Stiffness::Banded(a) => a.solve(r),
            Stiffness::Ladder(ks) => {
                let m = r.len();
                let mut g = vec![0.0; m];
                let mut flux = 0.0;
                let mut fl = vec![0.0; m];
                for e in 0..m {
                    flux += r[e];
                    fl[e] = flux / ks[e];
                }
                let mut acc = 0.0;
                for e in (0..m).rev() {
                    acc += fl[e];
                    g[e] = acc;
                }
                Ok(g)
            }
        }
    }
}

/// Smallest eigenvalue of the discretized form by inverse iteration on the
/// banded pencil `(A, B)`, refined by the Rayleigh quotient.
pub fn principal_eigenvalue(prob: &SpectralProblem) -> Result<EigenEstimate> {
    let x = prob.nodes();
    let k = prob.k;
    let (a, b, first) = if prob.uses_ground_state() {
        let z = scalar_kernels(k);
        let w = move |r: f64| z.z1(r).powi(2) * r;
        let (_, b, ks) = assemble(&x, 0, w, |_| 0.0, w);
        (Stiffness::Ladder(ks), b, 0)
    } else {
        let (a, b, _) = assemble(&x, 1, |r| r, move |r| -potential_v(k, r).unwrap_or(0.0) * r, |r| r);
        (Stiffness::Banded(a), b, 1)
    };
    let m = b.di.len();
    let mut v = vec![1.0; m];
    let mut lambda = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let max_iter = 2000;
    let mut iters = 0;
    while iters < max_iter {
        iters += 1;
        let bv = b.mul(&v);
        let mut w = a.solve(&bv)?;
        let nb = dot(&w, &b.mul(&w)).sqrt();
        w.iter_mut().for_each(|e| *e /= nb);
        // Rayleigh quotient and residual of the inverted pencil: with
        // y = A^{-1} B w, lambda = <w,Bw>/<w,By> and r = |w - lambda y|_B.
        // Products with A itself lose all digits once lambda sits many
        // orders below the stiffness scale.
        let bw = b.mul(&w);
        let y = a.solve(&bw)?;
        lambda = dot(&w, &bw) / dot(&y, &bw);
        let d: Vec<f64> = w.iter().zip(&y).map(|(p, q)| p - lambda * q).collect();
        residual = dot(&d, &b.mul(&d)).max(0.0).sqrt();
        v = w;
        if residual <= 1e-10 {
            break;
        }
    }
    if residual > 1e-10 {
        return Err(Error::NoConvergence(max_iter));
    }
    if lambda < 0.0 {
        if lambda > -1e-12 {
            lambda = 0.0;
        } else {
            return Err(Error::Degenerate(format!("negative eigenvalue {lambda:.3e} of a nonnegative form")));
        }
    }
    // back to f on the positive nodes; the mass matrix carries no 2 pi, so
    // the discrete eigenvalue equals Q/|f|^2 directly
    let mut full = vec![0.0; x.len()];
    full[first..first + m].copy_from_slice(&v);
    let mut pos = Vec::new();
    let mut vals = Vec::new();
    for (i, &r) in x.iter().enumerate() {
        if r <= 0.0 {
            continue;
        }
        let f = if prob.uses_ground_state() { scalar_kernels(k).z1(r) * full[i] } else { full[i] };
        pos.push(r);
        vals.push(f);
    }
    let peak = vals.iter().fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
    let sign = if peak < 0.0 { -1.0 } else { 1.0 };
    let grid = RadialGrid::from_nodes(pos, Spacing::Graded)?;
    let values = vals.iter().map(|f| Complex64::new(sign * f / (2.0 * PI).sqrt(), 0.0)).collect();
    Ok(EigenEstimate { lambda_min: lambda, eigvec: RadialComplexField::new(grid, values)?, residual, iterations: iters })
}

/// `sup f^2`, `||f/rho|| ||f'||` and `||f||_X^2 = ||f'||^2 + ||f/rho||^2`
/// with planar `L^2` norms, for a real radial profile vanishing at `R`.
pub fn sobolev_diagnostic(f: &RadialComplexField) -> (f64, f64, f64) {
    let x = f.grid.nodes();
    let v: Vec<f64> = f.values.iter().map(|c| c.re).collect();
    let (mut a, mut d) = (0.0, 0.0);
    for i in 0..x.len() - 1 {
        let h = x[i + 1] - x[i];
        let slope = (v[i + 1] - v[i]) / h;
        let rm = 0.5 * (x[i] + x[i + 1]);
        d += slope * slope * rm * h;
        a += 0.5 * (v[i] * v[i] / x[i] + v[i + 1] * v[i + 1] / x[i + 1]) * h;
    }
    // segment from 0 to the first node, f ~ rho there
    a += 0.5 * v[0] * v[0] / x[0] * x[0];
    let (a, d) = (2.0 * PI * a, 2.0 * PI * d);
    let sup = v.iter().fold(0.0f64, |m, y| m.max(y * y));
    (sup, (a * d).sqrt(), a + d)
}

/// Smooth cutoff equal to 1 on `[0, R/2]` and 0 at `R`.
fn cutoff(r: f64, r_max: f64) -> (f64, f64) {
    let h = 0.5 * r_max;
    if r <= h {
        return (1.0, 0.0);
    }
    let s = ((r - h) / h).min(1.0);
    let p = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let dp = 30.0 * s * s * (1.0 - s) * (1.0 - s) / h;
    (1.0 - p, -dp)
}

/// Rayleigh pair `(Q_{R,k}(f,f), ||f||^2)` for `f = eta_{R/2} Z_{k,1}`.
///
/// Because `Z_{k,1}` is annihilated by the mode operator, integration by
/// parts leaves `Q = 2 pi int eta'^2 Z^2 rho d rho`, which avoids the
/// cancellation of the two large terms of the form.
pub fn rayleigh_test_function(k: i32, r_max: f64) -> Result<(f64, f64)> {
    if !(k == 0 || k == 1) {
        return Err(Error::InvalidParam(format!("test functions exist for modes 0 and 1, not {k}")));
    }
    let z = scalar_kernels(k);
    let opts = QuadOptions::tol(0.0, 1e-12);
    let q = integrate(|r: f64| cutoff(r, r_max).1.powi(2) * z.z1(r).powi(2) * r, 0.5 * r_max, r_max, opts)?;
    let pieces = [0.0, 1.0, 0.5 * r_max, r_max];
    let mass = crate::quad::integrate_pieces(|r: f64| cutoff(r, r_max).0.powi(2) * z.z1(r).powi(2) * r, &pieces, opts)?;
    Ok((2.0 * PI * q.value, 2.0 * PI * mass.value))
}

/// Direct evaluation of `Q_{R,k}(eta Z, eta Z)` from the definition; used to
/// cross-check the integrated-by-parts form of [`rayleigh_test_function`].
pub fn rayleigh_direct(k: i32, r_max: f64) -> Result<f64> {
    let z = scalar_kernels(k);
    let opts = QuadOptions::tol(1e-15, 1e-13);
    let pieces = [1e-12, 1.0, 0.5 * r_max, r_max];
    let r = crate::quad::integrate_pieces(
        |r: f64| {
            let (e, de) = cutoff(r, r_max);
            let f = e * z.z1(r);
            let df = de * z.z1(r) + e * z.dz1(r);
            (df * df - potential_v(k, r).unwrap_or(0.0) * f * f) * r
        },
        &pieces,
        opts,
    )?;
    Ok(2.0 * PI * r.value)
}

/// `Gamma_d(x,t) = (a-ib)^{-d/2} (4 pi t)^{-d/2} exp(-|x|^2/(4 (a-ib) t))`, principal branch.
pub fn heat_kernel_gamma(d: usize, x: &[f64], t: f64, pp: &PhysParams) -> Result<Complex64> {
    if d == 0 || x.len() != d || !(t > 0.0) {
        return Err(Error::InvalidParam(format!("heat kernel needs d >= 1, |x| = d and t > 0 (d={d}, t={t})")));
    }
    let c = pp.c_conj();
    let half = d as f64 / 2.0;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok(c.powf(-half) * (4.0 * PI * t).powf(-half) * (-(r2 / (4.0 * t)) / c).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DuhamelMethod {
    /// `phi = rho^k psi` with `psi` solving the radial heat equation in dimension `2k+2`.
    Lifted,
    /// Finite differences of `phi'' + phi'/rho - k^2 phi/rho^2` directly.
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeScheme {
    ForwardEuler,
    CrankNicolson,
}

#[derive(Clone, Copy, Debug)]
pub struct DuhamelOptions {
    pub rho_max: f64,
    /// number of intervals on `[0, rho_max]`
    pub n: usize,
    pub dt: f64,
    pub method: DuhamelMethod,
    pub scheme: TimeScheme,
}

impl Default for DuhamelOptions {
    fn default() -> Self {
        Self { rho_max: 10.0, n: 2000, dt: 1e-3, method: DuhamelMethod::Lifted, scheme: TimeScheme::CrankNicolson }
    }
}

/// Solves `phi_tau = (a-ib)(phi'' + phi'/rho - k^2 phi/rho^2) + h` from zero
/// data at `tau0` up to `tau1` on `[0, rho_max]` with `phi(rho_max) = 0`.
pub fn duhamel_mode_solve(
    k: u32,
    h: &dyn Fn(f64, f64) -> Complex64,
    tau0: f64,
    tau1: f64,
    pp: &PhysParams,
    opts: DuhamelOptions,
) -> Result<RadialComplexField> {
    if !(tau1 >= tau0) || opts.n < 4 || !(opts.dt > 0.0) {
        return Err(Error::InvalidParam("bad Duhamel time interval or discretization".into()));
    }
    let dr = opts.rho_max / opts.n as f64;
    let c = pp.c_conj();
    if opts.scheme == TimeScheme::ForwardEuler {
        let max = 0.4 * dr * dr / (2.0 * k as f64 + 2.0);
        if opts.dt > max {
            return Err(Error::Unstable { dt: opts.dt, max });
        }
    }
    let kf = k as f64;
    let lifted = opts.method == DuhamelMethod::Lifted;
    // unknowns: nodes 0..n-1 with a regular origin row, except for the
    // direct form with k >= 1 where phi(0) = 0 removes node 0
    let first = if lifted || k == 0 { 0 } else { 1 };
    let m = opts.n - first;
    let rho = |i: usize| (i + first) as f64 * dr;
    let mut lo = vec![Complex64::default(); m];
    let mut di = vec![Complex64::default(); m];
    let mut up = vec![Complex64::default(); m];
    for i in 0..m {
        let r = rho(i);
        let (l, d, u) = if lifted {
            if i + first == 0 {
                // (2k+2) psi''(0) with the symmetric ghost psi(-dr) = psi(dr)
                let s = (2.0 * kf + 2.0) / (dr * dr);
                (0.0, -2.0 * s, 2.0 * s)
            } else {
                let g = (2.0 * kf + 1.0) / (2.0 * r * dr);
                (1.0 / (dr * dr) - g, -2.0 / (dr * dr), 1.0 / (dr * dr) + g)
            }
        } else if i + first == 0 {
            // k = 0: 2D Laplacian at the origin, 4 phi''(0)
            (0.0, -4.0 / (dr * dr), 4.0 / (dr * dr))
        } else {
            let g = 1.0 / (2.0 * r * dr);
            (1.0 / (dr * dr) - g, -2.0 / (dr * dr) - kf * kf / (r * r), 1.0 / (dr * dr) + g)
        };
        lo[i] = c * l;
        di[i] = c * d;
        up[i] = c * u;
    }
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        (0..m)
            .map(|i| {
                let mut s = di[i] * v[i];
                if i > 0 {
                    s += lo[i] * v[i - 1];
                }
                if i + 1 < m {
                    s += up[i] * v[i + 1];
                }
                s
            })
            .collect()
    };
    let source = |tau: f64| -> Vec<Complex64> {
        (0..m)
            .map(|i| {
                let r = rho(i);
                let hv = h(r, tau);
                if lifted {
                    if r == 0.0 {
                        // h/rho^k at the origin from the nearest node's ratio, exact for h ~ rho^k
                        if k == 0 {
                            hv
                        } else {
                            h(dr, tau) / dr.powi(k as i32)
                        }
                    } else {
                        hv / r.powi(k as i32)
                    }
                } else {
                    hv
                }
            })
            .collect()
    };
    let steps = ((tau1 - tau0) / opts.dt).ceil().max(1.0) as usize;
    let dt = (tau1 - tau0) / steps as f64;
    let mut v = vec![Complex64::default(); m];
    let (ilo, idi, iup): (Vec<_>, Vec<_>, Vec<_>) = (
        lo.iter().map(|x| -x * (0.5 * dt)).collect(),
        di.iter().map(|x| Complex64::new(1.0, 0.0) - x * (0.5 * dt)).collect(),
        up.iter().map(|x| -x * (0.5 * dt)).collect(),
    );
    for s in 0..steps {
        let t0 = tau0 + s as f64 * dt;
        match opts.scheme {
            TimeScheme::ForwardEuler => {
                let lv = apply(&v);
                let src = source(t0);
                for i in 0..m {
                    v[i] += (lv[i] + src[i]) * dt;
                }
            }
            TimeScheme::CrankNicolson => {
                let lv = apply(&v);
                let (s0, s1) = (source(t0), source(t0 + dt));
                let rhs: Vec<Complex64> = (0..m).map(|i| v[i] + lv[i] * (0.5 * dt) + (s0[i] + s1[i]) * (0.5 * dt)).collect();
                v = solve_tridiagonal(&ilo, &idi, &iup, &rhs)?;
            }
        }
        if v.iter().any(|z| !z.is_finite()) {
            return Err(Error::Unstable { dt, max: f64::NAN });
        }
    }
    let nodes: Vec<f64> = (1..=opts.n).map(|i| i as f64 * dr).collect();
    let values = nodes
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let i = j + 1; // node index
            if i == opts.n {
                return Complex64::default();
            }
            let val = v[i - first];
            if lifted {
                val * r.powi(k as i32)
            } else {
                val
            }
        })
        .collect();
    RadialComplexField::new(RadialGrid::from_nodes(nodes, Spacing::Uniform)?, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EigNormalization {
    /// leading coefficient of `rho^{5/2}` at the origin equals 1
    UnitLeadingPower,
}

/// Regular solution of `-(d_rr - 15/(4 rho^2) + q) Phi = xi Phi` with
/// `q = 4/(rho^2+1) + 8/(rho^2+1)^2`.
#[derive(Clone, Debug)]
pub struct DistortedEig {
    pub xi: f64,
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    pub normalization: EigNormalization,
}

/// Zero-energy solution `rho^{5/2}/(1+rho^2)`.
pub fn mode_minus_one_zero_solution(rho: f64) -> f64 {
    rho.powf(2.5) / (1.0 + rho * rho)
}

/// Frobenius coefficients of `G = Phi/rho^{5/2}`, which solves
/// `G'' + 5 G'/rho + (q + xi) G = 0` with `G(0) = 1`.
fn frobenius(xi: f64, terms: usize) -> Vec<f64> {
    let q = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 } * (4.0 + 8.0 * (j as f64 + 1.0));
    let mut c = vec![0.0; terms];
    c[0] = 1.0;
    for m in 1..terms {
        let mut s = xi * c[m - 1];
        for (j, cj) in c.iter().enumerate().take(m) {
            s += q(m - 1 - j) * cj;
        }
        let mf = m as f64;
        c[m] = -s / (2.0 * mf * (2.0 * mf + 4.0));
    }
    c
}

/// Value and derivative of `rho^{5/2} G(rho)` from the series.
fn series_eval(c: &[f64], rho: f64) -> (f64, f64) {
    let u = rho * rho;
    let (mut g, mut dg) = (0.0, 0.0);
    let mut p = 1.0;
    for (m, cm) in c.iter().enumerate() {
        g += cm * p;
        if m > 0 {
            dg += cm * 2.0 * m as f64 * p / rho;
        }
        p *= u;
    }
    let s = rho.powf(2.5);
    (s * g, s * dg + 2.5 * rho.powf(1.5) * g)
}

pub fn distorted_eigenfunction(xi: f64, grid: &RadialGrid) -> Result<DistortedEig> {
    if !(xi >= 0.0) {
        return Err(Error::InvalidParam(format!("spectral parameter must be >= 0, got {xi}")));
    }
    let handoff = 0.2f64.min(0.2 / xi.sqrt());
    let c = frobenius(xi, 60);
    let tail = c[59].abs() * handoff.powi(118);
    if !(tail < 1e-18) {
        return Err(Error::Ode(format!("series not converged at handoff radius {handoff:.3e}")));
    }
    let mut values = Vec::with_capacity(grid.len());
    let outside: Vec<f64> = grid.nodes().iter().copied().filter(|&r| r > handoff).collect();
    for &r in grid.nodes().iter().filter(|&&r| r <= handoff) {
        values.push(series_eval(&c, r).0);
    }
    if !outside.is_empty() {
        let (p0, d0) = series_eval(&c, handoff);
        let rhs = |r: f64, y: &[f64; 2]| {
            let d = r * r + 1.0;
            let q = 4.0 / d + 8.0 / (d * d);
            [y[1], (15.0 / (4.0 * r * r) - q - xi) * y[0]]
        };
        let ys = dopri5(rhs, handoff, [p0, d0], &outside, OdeOptions { rtol: 1e-12, atol: 1e-300, max_steps: 5_000_000 })?;
        values.extend(ys.iter().map(|y| y[0]));
    }
    Ok(DistortedEig { xi, grid: grid.clone(), values, normalization: EigNormalization::UnitLeadingPower })
}

/// Measured constants of the two-regime envelope
/// `|Phi| <= C1 rho^{5/2} <rho>^{-2}` (`rho^2 xi <= 1`) and
/// `|Phi| <= C2 xi^{-1/4} <xi>^{-1}` (`rho^2 xi > 1`).
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct EnvelopeConstants {
    pub inner: f64,
    pub outer: f64,
}

pub fn envelope_constants(e: &DistortedEig) -> EnvelopeConstants {
    let mut out = EnvelopeConstants::default();
    for (&r, &v) in e.grid.nodes().iter().zip(&e.values) {
        if r * r * e.xi <= 1.0 {
            let bound = r.powf(2.5) / (1.0 + r * r);
            out.inner = out.inner.max(v.abs() / bound);
        } else {
            let bound = e.xi.powf(-0.25) / (1.0 + e.xi * e.xi).sqrt();
            out.outer = out.outer.max(v.abs() / bound);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_validation() {
        assert!(SpectralProblem::new(0, 5.0, 400).is_err());
        assert!(SpectralProblem::new(0, 50.0, 100).is_err());
    }

    #[test]
    fn frobenius_zero_energy_is_geometric() {
        let c = frobenius(0.0, 10);
        for (m, v) in c.iter().enumerate() {
            let expect = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v - expect).abs() < 1e-13);
        }
        assert!((frobenius(2.0, 2)[1] + 14.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn heat_kernel_reduces_to_gaussian() {
        let pp = PhysParams::heat_flow();
        let g = heat_kernel_gamma(1, &[0.3], 0.2, &pp).unwrap();
        let expect = (4.0 * PI * 0.2f64).powf(-0.5) * (-0.09f64 / 0.8).exp();
        assert!((g.re - expect).abs() < 1e-15 && g.im.abs() < 1e-15);
    }

    #[test]
    fn duhamel_zero_source() {
        let pp = PhysParams::new(0.6, 0.8).unwrap();
        let f = duhamel_mode_solve(2, &|_, _| Complex64::default(), 0.0, 0.1, &pp, DuhamelOptions { n: 50, ..Default::default() }).unwrap();
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn forward_euler_stability_guard() {
        let pp = PhysParams::heat_flow();
        let o = DuhamelOptions { n: 100, dt: 1e-2, scheme: TimeScheme::ForwardEuler, ..Default::default() };
        assert!(matches!(duhamel_mode_solve(1, &|_, _| Complex64::default(), 0.0, 0.1, &pp, o), Err(Error::Unstable { .. })));
    }

    #[test]
    fn cutoff_vanishes_at_radius() {
        assert_eq!(cutoff(200.0, 200.0).0, 0.0);
        assert_eq!(cutoff(50.0, 200.0), (1.0, 0.0));
    }
}
