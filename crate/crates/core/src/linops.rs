//! Linearized harmonic-map operators around a bubble, their kernels, the
//! mode potentials and the angular Fourier decomposition of tangent fields.

use crate::error::{Error, Result};
use crate::geometry::{frame_polar, profile_w, rotate_z, FrameSample};
use crate::grid::{derivatives, periodic_derivatives, RadialGrid};
use crate::vec3::Vec3;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Kernel `Z_{p,q}` of the linearization around W at the rescaled point `y`,
/// for `p` in `{-1, 0, 1}` and `q` in `{1, 2}`.
pub fn vector_kernels(p: i32, q: i32, y: [f64; 2]) -> Result<Vec3> {
    let f = crate::geometry::bubble_frame(y);
    vector_kernel_polar(p, q, &f)
}

pub(crate) fn vector_kernel_polar(p: i32, q: i32, f: &FrameSample) -> Result<Vec3> {
    let (s, c) = f.theta.sin_cos();
    let r = f.rho;
    let v = match (p, q) {
        (0, 1) => f.e1 * (r * f.w_rho),
        (0, 2) => f.e2 * (r * f.w_rho),
        (1, 1) => (f.e1 * c + f.e2 * s) * f.w_rho,
        (1, 2) => (f.e1 * s - f.e2 * c) * f.w_rho,
        (-1, 1) => (f.e1 * c - f.e2 * s) * (r * r * f.w_rho),
        (-1, 2) => (f.e1 * s + f.e2 * c) * (r * r * f.w_rho),
        _ => return Err(Error::InvalidParam(format!("no kernel Z_({p},{q})"))),
    };
    Ok(v)
}

/// The closed-form fundamental pair of the mode-`k` operator with
/// Wronskian `1/rho`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeKernelPair {
    pub k: i32,
}

pub fn scalar_kernels(k: i32) -> ModeKernelPair {
    ModeKernelPair { k }
}

/// `(N, N')` for kernels written as `N(rho)/(rho^2+1)`.
fn numerators(k: i32, r: f64) -> [(f64, f64); 2] {
    let l = r.ln();
    match k {
        -1 => [
            (r * r, 2.0 * r),
            (r * r * l - 1.0 - 0.25 / (r * r), 2.0 * r * l + r + 0.5 / (r * r * r)),
        ],
        0 => [
            (r, 1.0),
            (
                0.5 * r.powi(3) + 2.0 * r * l - 0.5 / r,
                1.5 * r * r + 2.0 * l + 2.0 + 0.5 / (r * r),
            ),
        ],
        1 => [(1.0, 0.0), (0.25 * (r.powi(4) + 4.0 * r * r + 4.0 * l), r.powi(3) + 2.0 * r + 1.0 / r)],
        _ => {
            let kf = k as f64;
            let p = r.powi(4) / (2.0 * kf + 2.0) + r * r / kf + 1.0 / (2.0 * kf - 2.0);
            let dp = 4.0 * r.powi(3) / (2.0 * kf + 2.0) + 2.0 * r / kf;
            [
                (r.powi(1 - k), (1.0 - kf) * r.powi(-k)),
                (r.powi(k - 1) * p, (kf - 1.0) * r.powi(k - 2) * p + r.powi(k - 1) * dp),
            ]
        }
    }
}

impl ModeKernelPair {
    fn eval(&self, which: usize, r: f64) -> (f64, f64) {
        let (n, dn) = numerators(self.k, r)[which];
        let d = r * r + 1.0;
        (n / d, dn / d - 2.0 * r * n / (d * d))
    }
    pub fn z1(&self, r: f64) -> f64 {
        self.eval(0, r).0
    }
    pub fn z2(&self, r: f64) -> f64 {
        self.eval(1, r).0
    }
    pub fn dz1(&self, r: f64) -> f64 {
        self.eval(0, r).1
    }
    pub fn dz2(&self, r: f64) -> f64 {
        self.eval(1, r).1
    }
    /// `Z1 Z2' - Z1' Z2`, which equals `1/rho`.
    pub fn wronskian(&self, r: f64) -> f64 {
        let (a, da) = self.eval(0, r);
        let (b, db) = self.eval(1, r);
        a * db - da * b
    }
}

/// Potential `V_k` of the mode operator `f'' + f'/rho + V_k f`.
/// At `rho = 0` only the finite mode-1 limit `V_1(0) = 4` is returned.
pub fn potential_v(k: i32, rho: f64) -> Result<f64> {
    if k == 1 {
        let d = rho * rho + 1.0;
        return Ok(4.0 * (1.0 - rho * rho) / (d * d));
    }
    if !(rho > 0.0) {
        return Err(Error::Pole(k));
    }
    let kf = k as f64;
    let r2 = rho * rho;
    let d = r2 + 1.0;
    Ok(-((kf + 1.0).powi(2) * r2 * r2 + (2.0 * kf * kf - 6.0) * r2 + (kf - 1.0).powi(2)) / (d * d * r2))
}

/// Complex samples on a radial grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialComplexField {
    pub grid: RadialGrid,
    pub values: Vec<Complex64>,
}

impl RadialComplexField {
    pub fn new(grid: RadialGrid, values: Vec<Complex64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidParam("field length does not match grid".into()));
        }
        Ok(Self { grid, values })
    }
    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `f'' + f'/rho + V_k f` by finite differences.
pub fn apply_mode(k: i32, f: &RadialComplexField) -> Result<RadialComplexField> {
    let x = f.grid.nodes();
    let (d1, d2) = derivatives(x, &f.values)?;
    let mut out = Vec::with_capacity(x.len());
    for (i, &r) in x.iter().enumerate() {
        out.push(d2[i] + d1[i] / r + f.values[i] * potential_v(k, r)?);
    }
    Ok(RadialComplexField { grid: f.grid.clone(), values: out })
}

/// Residual of `apply_mode` measured against the natural size
/// `|f''| + |f'|/rho + |V_k f|` of its three terms, at the interior nodes
/// where the stencil is centered.
pub fn mode_residual_scaled(k: i32, f: &RadialComplexField) -> Result<Vec<f64>> {
    let x = f.grid.nodes();
    let (d1, d2) = derivatives(x, &f.values)?;
    let mut out = Vec::with_capacity(x.len());
    for (i, &r) in x.iter().enumerate().take(x.len() - 1).skip(1) {
        let vf = f.values[i] * potential_v(k, r)?;
        let scale = d2[i].norm() + d1[i].norm() / r + vf.norm();
        out.push((d2[i] + d1[i] / r + vf).norm() / scale);
    }
    Ok(out)
}

/// Tensor grid of radii and uniformly spaced angles `2 pi j / n_theta`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarGrid {
    pub rho: RadialGrid,
    pub n_theta: usize,
}

impl PolarGrid {
    pub fn new(rho: RadialGrid, n_theta: usize) -> Result<Self> {
        if n_theta < 4 || rho.len() < 4 {
            return Err(Error::GridTooCoarse(format!(
                "polar grid {} x {n_theta} is below 4 x 4",
                rho.len()
            )));
        }
        Ok(Self { rho, n_theta })
    }
    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_theta as f64
    }
    pub fn d_theta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }
    pub fn len(&self) -> usize {
        self.rho.len() * self.n_theta
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }
    /// Mesh size used in error bounds: the larger of the radial and angular steps.
    pub fn h(&self) -> f64 {
        self.rho.max_step().max(self.d_theta())
    }
}

/// Base harmonic map of a tangent field: `W` itself or a rotated, rescaled bubble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaseMap {
    W,
    Bubble { lambda: f64, gamma: f64 },
}

impl BaseMap {
    fn scale_rot(&self) -> (f64, f64) {
        match *self {
            BaseMap::W => (1.0, 0.0),
            BaseMap::Bubble { lambda, gamma } => (lambda, gamma),
        }
    }
    /// Base value, `d_r`, `d_theta` and `|grad|^2` at polar point `(r, theta)`.
    fn jet(&self, r: f64, theta: f64) -> (Vec3, Vec3, Vec3, f64) {
        let (lam, gam) = self.scale_rot();
        let f = frame_polar(r / lam, theta);
        let p = profile_w(r / lam);
        (
            rotate_z(gam, f.w_vec),
            rotate_z(gam, f.e1) * (f.w_rho / lam),
            rotate_z(gam, f.e2) * p.sin_w,
            f.grad_sq / (lam * lam),
        )
    }
    pub fn value(&self, r: f64, theta: f64) -> Vec3 {
        self.jet(r, theta).0
    }
}

/// R^3 samples on a polar grid, tangent to a base map.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentField {
    pub grid: PolarGrid,
    pub values: Vec<Vec3>,
    pub base: BaseMap,
}

impl TangentField {
    pub fn from_fn(grid: PolarGrid, base: BaseMap, f: impl Fn(f64, f64) -> Vec3) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &r in grid.rho.nodes() {
            for j in 0..grid.n_theta {
                values.push(f(r, grid.theta(j)));
            }
        }
        Self { grid, values, base }
    }

    /// Largest `|v.base|` relative to `max(1, |v|)`.
    pub fn tangency_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &r) in self.grid.rho.nodes().iter().enumerate() {
            for j in 0..self.grid.n_theta {
                let v = self.values[self.grid.index(i, j)];
                let b = self.base.value(r, self.grid.theta(j));
                worst = worst.max(v.dot(&b).abs() / v.norm().max(1.0));
            }
        }
        worst
    }

    pub fn check_tangent(&self, tol: f64) -> Result<()> {
        let d = self.tangency_defect();
        if d > tol {
            return Err(Error::NotTangent { dot: d, tol });
        }
        Ok(())
    }
}

/// Radial and angular first/second derivatives of any polar field.
struct PolarJets<T> {
    dr: Vec<T>,
    drr: Vec<T>,
    dt: Vec<T>,
    dtt: Vec<T>,
}

fn polar_jets<T: crate::vec3::Linear>(grid: &PolarGrid, v: &[T]) -> Result<PolarJets<T>> {
    let (nr, nt) = (grid.rho.len(), grid.n_theta);
    let zero = T::zero();
    let mut jets = PolarJets { dr: vec![zero; nr * nt], drr: vec![zero; nr * nt], dt: vec![zero; nr * nt], dtt: vec![zero; nr * nt] };
    for j in 0..nt {
        let col: Vec<T> = (0..nr).map(|i| v[grid.index(i, j)]).collect();
        let (d1, d2) = derivatives(grid.rho.nodes(), &col)?;
        for i in 0..nr {
            jets.dr[grid.index(i, j)] = d1[i];
            jets.drr[grid.index(i, j)] = d2[i];
        }
    }
    for i in 0..nr {
        let row = &v[i * nt..(i + 1) * nt];
        let (d1, d2) = periodic_derivatives(row, grid.d_theta());
        jets.dt[i * nt..(i + 1) * nt].copy_from_slice(&d1);
        jets.dtt[i * nt..(i + 1) * nt].copy_from_slice(&d2);
    }
    Ok(jets)
}

/// `L_U phi = Lap phi + |grad U|^2 phi + 2 (grad U . grad phi) U`.
pub fn apply_lw(phi: &TangentField) -> Result<Vec<Vec3>> {
    phi.check_tangent(1e-10)?;
    let g = &phi.grid;
    let jets = polar_jets(g, &phi.values)?;
    let mut out = Vec::with_capacity(g.len());
    for (i, &r) in g.rho.nodes().iter().enumerate() {
        for j in 0..g.n_theta {
            let k = g.index(i, j);
            let (u, ur, ut, gs) = phi.base.jet(r, g.theta(j));
            let lap = jets.drr[k] + jets.dr[k] * (1.0 / r) + jets.dtt[k] * (1.0 / (r * r));
            let gg = ur.dot(&jets.dr[k]) + ut.dot(&jets.dt[k]) / (r * r);
            out.push(lap + phi.values[k] * gs + u * (2.0 * gg));
        }
    }
    Ok(out)
}

/// `L_in f = Lap f + |grad U|^2 f - 2 grad(U.f) grad U + 2 (grad U . grad f) U`.
pub fn apply_l_in(phi: &TangentField) -> Result<Vec<Vec3>> {
    let g = &phi.grid;
    let jets = polar_jets(g, &phi.values)?;
    let mut dots = Vec::with_capacity(g.len());
    for (i, &r) in g.rho.nodes().iter().enumerate() {
        for j in 0..g.n_theta {
            dots.push(phi.base.value(r, g.theta(j)).dot(&phi.values[g.index(i, j)]));
        }
    }
    let djets = polar_jets(g, &dots)?;
    let mut out = Vec::with_capacity(g.len());
    for (i, &r) in g.rho.nodes().iter().enumerate() {
        for j in 0..g.n_theta {
            let k = g.index(i, j);
            let (u, ur, ut, gs) = phi.base.jet(r, g.theta(j));
            let lap = jets.drr[k] + jets.dr[k] * (1.0 / r) + jets.dtt[k] * (1.0 / (r * r));
            let gg = ur.dot(&jets.dr[k]) + ut.dot(&jets.dt[k]) / (r * r);
            let gd = ur * djets.dr[k] + ut * (djets.dt[k] / (r * r));
            out.push(lap + phi.values[k] * gs - gd * 2.0 + u * (2.0 * gg));
        }
    }
    Ok(out)
}

/// Complex samples on a polar grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarComplexField {
    pub grid: PolarGrid,
    pub values: Vec<Complex64>,
}

impl PolarComplexField {
    pub fn from_fn(grid: PolarGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &r in grid.rho.nodes() {
            for j in 0..grid.n_theta {
                values.push(f(r, grid.theta(j)));
            }
        }
        Self { grid, values }
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
    /// `max |Psi| + |Psi_r| + |Psi_rr| + |Psi_theta| + |Psi_theta theta|` from
    /// finite differences, used to normalize discretization errors.
    pub fn c2_proxy(&self) -> Result<f64> {
        let j = polar_jets(&self.grid, &self.values)?;
        Ok((0..self.values.len())
            .map(|k| {
                self.values[k].norm() + j.dr[k].norm() + j.drr[k].norm() + j.dt[k].norm() + j.dtt[k].norm()
            })
            .fold(0.0, f64::max))
    }
}

/// Complex operator
/// `d_rr + d_r/rho + d_tt/rho^2 - 1/rho^2 + i (2 cos w/rho^2) d_t + 8/(rho^2+1)^2`.
pub fn apply_lin_complex(psi: &PolarComplexField) -> Result<PolarComplexField> {
    let g = &psi.grid;
    let j = polar_jets(g, &psi.values)?;
    let mut out = Vec::with_capacity(g.len());
    for (i, &r) in g.rho.nodes().iter().enumerate() {
        let cw = profile_w(r).cos_w;
        let d = r * r + 1.0;
        for jj in 0..g.n_theta {
            let k = g.index(i, jj);
            let r2 = r * r;
            out.push(
                j.drr[k] + j.dr[k] / r + j.dtt[k] / r2 - psi.values[k] / r2
                    + j.dt[k] * Complex64::new(0.0, 2.0 * cw / r2)
                    + psi.values[k] * (8.0 / (d * d)),
            );
        }
    }
    Ok(PolarComplexField { grid: g.clone(), values: out })
}

fn base_frame(base: BaseMap, r: f64, theta: f64) -> (Vec3, Vec3, Vec3) {
    let (lam, gam) = base.scale_rot();
    let f = frame_polar(r / lam, theta);
    (rotate_z(gam, f.w_vec), rotate_z(gam, f.e1), rotate_z(gam, f.e2))
}

/// Complex form of an R^3 field in the frame of `base` (no tangency check).
pub fn field_to_complex(grid: &PolarGrid, base: BaseMap, v: &[Vec3]) -> PolarComplexField {
    let mut values = Vec::with_capacity(grid.len());
    for (i, &r) in grid.rho.nodes().iter().enumerate() {
        for j in 0..grid.n_theta {
            let (_, e1, e2) = base_frame(base, r, grid.theta(j));
            let x = v[grid.index(i, j)];
            values.push(Complex64::new(x.dot(&e1), x.dot(&e2)));
        }
    }
    PolarComplexField { grid: grid.clone(), values }
}

/// Tangent field `Re f E1 + Im f E2` from a complex field.
pub fn complex_to_field(psi: &PolarComplexField, base: BaseMap) -> TangentField {
    let g = &psi.grid;
    let mut values = Vec::with_capacity(g.len());
    for (i, &r) in g.rho.nodes().iter().enumerate() {
        for j in 0..g.n_theta {
            let (_, e1, e2) = base_frame(base, r, g.theta(j));
            let f = psi.values[g.index(i, j)];
            values.push(e1 * f.re + e2 * f.im);
        }
    }
    TangentField { grid: g.clone(), values, base }
}

/// `(a - b U x) v` applied pointwise.
pub fn apply_a_minus_b_wedge(grid: &PolarGrid, base: BaseMap, a: f64, b: f64, v: &[Vec3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(v.len());
    for (i, &r) in grid.rho.nodes().iter().enumerate() {
        for j in 0..grid.n_theta {
            let u = base.value(r, grid.theta(j));
            let x = v[grid.index(i, j)];
            out.push(x * a - u.cross(&x) * b);
        }
    }
    out
}

/// Angular Fourier coefficients `psi_k(rho)` for `|k| <= k_max`.
#[derive(Clone, Debug)]
pub struct FourierModes {
    pub modes: BTreeMap<i32, RadialComplexField>,
    pub n_theta: usize,
    /// Share of the discrete energy carried by the two extreme modes `|k| = k_max`.
    pub edge_energy_ratio: f64,
    pub aliasing_warning: bool,
}

pub fn fourier_modes(psi: &PolarComplexField, k_max: usize) -> Result<FourierModes> {
    let g = &psi.grid;
    let n = g.n_theta;
    if n < 4 * k_max.max(1) {
        return Err(Error::GridTooCoarse(format!("{n} angles cannot resolve k_max = {k_max}")));
    }
    let km = k_max as i32;
    let mut modes = BTreeMap::new();
    let mut total = 0.0;
    let mut edge = 0.0;
    for v in &psi.values {
        total += v.norm_sqr() / n as f64;
    }
    for k in -km..=km {
        let mut vals = Vec::with_capacity(g.rho.len());
        for i in 0..g.rho.len() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                s += psi.values[g.index(i, j)] * Complex64::from_polar(1.0, -(k as f64) * g.theta(j));
            }
            let c = s / n as f64;
            if k.abs() == km {
                edge += c.norm_sqr();
            }
            vals.push(c);
        }
        modes.insert(k, RadialComplexField { grid: g.rho.clone(), values: vals });
    }
    let ratio = if total > 0.0 { edge / total } else { 0.0 };
    let warn = ratio > 1e-8;
    if warn {
        log::warn!("mode |k| = {k_max} carries {ratio:.3e} of the energy; possible aliasing");
    }
    Ok(FourierModes { modes, n_theta: n, edge_energy_ratio: ratio, aliasing_warning: warn })
}

/// Inverse of [`fourier_modes`]: sums `psi_k(rho) e^{ik theta}`.
pub fn reconstruct(modes: &FourierModes) -> Result<PolarComplexField> {
    let first = modes.modes.values().next().ok_or_else(|| Error::InvalidParam("no modes".into()))?;
    let grid = PolarGrid::new(first.grid.clone(), modes.n_theta)?;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (&k, m) in &modes.modes {
        for i in 0..grid.rho.len() {
            for j in 0..grid.n_theta {
                values[grid.index(i, j)] += m.values[i] * Complex64::from_polar(1.0, k as f64 * grid.theta(j));
            }
        }
    }
    Ok(PolarComplexField { grid, values })
}

/// The vector field `(psi_k e^{ik theta})` mapped back to the tangent plane of `W`.
pub fn mode_vector_field(k: i32, psi: &RadialComplexField, n_theta: usize) -> Result<TangentField> {
    let grid = PolarGrid::new(psi.grid.clone(), n_theta)?;
    let mut values = Vec::with_capacity(grid.len());
    for (i, &r) in grid.rho.nodes().iter().enumerate() {
        for j in 0..n_theta {
            let f = psi.values[i] * Complex64::from_polar(1.0, k as f64 * grid.theta(j));
            let fr = frame_polar(r, grid.theta(j));
            values.push(fr.e1 * f.re + fr.e2 * f.im);
        }
    }
    Ok(TangentField { grid, values, base: BaseMap::W })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        let z = vector_kernels(0, 1, [0.6, 0.8]).unwrap();
        let e1 = crate::geometry::bubble_frame([0.6, 0.8]).e1;
        assert!((z + e1).max_abs() < 1e-15);
        assert!((vector_kernels(1, 1, [0.0, 0.0]).unwrap().norm() - 2.0).abs() < 1e-15);
        assert!(vector_kernels(2, 1, [1.0, 0.0]).is_err());
    }

    #[test]
    fn scalar_kernel_examples() {
        assert!((scalar_kernels(0).z1(1.0) - 0.5).abs() < 1e-15);
        assert_eq!(scalar_kernels(1).z1(0.0), 1.0);
        assert!((scalar_kernels(2).wronskian(1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn potential_examples() {
        assert!((potential_v(0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(potential_v(1, 1.0).unwrap(), 0.0);
        assert_eq!(potential_v(1, 0.0).unwrap(), 4.0);
        assert!(matches!(potential_v(2, 0.0), Err(Error::Pole(2))));
        let v = potential_v(400, 0.7).unwrap();
        assert!((v / (-(400.0f64).powi(2) / 0.49) - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let g = RadialGrid::geometric(0.1, 5.0, 20).unwrap();
        let f = RadialComplexField::from_fn(g.clone(), |_| Complex64::new(0.0, 0.0));
        assert!(apply_mode(3, &f).unwrap().max_abs() == 0.0);
        let pg = PolarGrid::new(g, 8).unwrap();
        let z = PolarComplexField::from_fn(pg, |_, _| Complex64::new(0.0, 0.0));
        assert_eq!(apply_lin_complex(&z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn apply_mode_needs_four_nodes() {
        let g = RadialGrid::uniform(0.5, 1.0, 3).unwrap();
        let f = RadialComplexField::from_fn(g, |r| Complex64::new(r, 0.0));
        assert!(matches!(apply_mode(0, &f), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn lw_rejects_normal_component() {
        let pg = PolarGrid::new(RadialGrid::geometric(0.2, 4.0, 10).unwrap(), 8).unwrap();
        let f = TangentField::from_fn(pg, BaseMap::W, |r, t| frame_polar(r, t).w_vec * 0.3);
        assert!(matches!(apply_lw(&f), Err(Error::NotTangent { .. })));
    }

    #[test]
    fn single_mode_is_isolated() {
        let pg = PolarGrid::new(RadialGrid::geometric(0.2, 4.0, 10).unwrap(), 16).unwrap();
        let g = |r: f64| Complex64::new((-r).exp(), r.sin());
        let psi = PolarComplexField::from_fn(pg, |r, t| g(r) * Complex64::from_polar(1.0, t));
        let m = fourier_modes(&psi, 3).unwrap();
        for (k, f) in &m.modes {
            for (i, &r) in f.grid.nodes().iter().enumerate() {
                let expect = if *k == 1 { g(r) } else { Complex64::new(0.0, 0.0) };
                assert!((f.values[i] - expect).norm() <= 1e-13);
            }
        }
        assert!(!m.aliasing_warning);
    }
}
