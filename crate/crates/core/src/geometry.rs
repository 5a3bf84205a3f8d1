//! Bubble profiles, the moving frame along W, rotations about the vertical
//! axis, the multi-bubble approximation U* and the unit-length corrector A.

use crate::error::{Error, Result};
use crate::vec3::{S2Vector, Vec3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Damping/dispersion pair of the LLG equation, normalized to `a^2+b^2 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    a: f64,
    b: f64,
}

impl PhysParams {
    /// Normalizes `(a, b)` onto the unit circle. Requires `a > 0`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let n = a.hypot(b);
        if !(a > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParam(format!("need a > 0, got (a, b) = ({a}, {b})")));
        }
        Ok(Self { a: a / n, b: b / n })
    }
    /// Harmonic map heat flow, `a = 1, b = 0`.
    pub fn heat_flow() -> Self {
        Self { a: 1.0, b: 0.0 }
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    /// `a + ib`
    pub fn c(&self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }
    /// `a - ib`
    pub fn c_conj(&self) -> Complex64 {
        Complex64::new(self.a, -self.b)
    }
}

/// Scale, rotation and center of a single bubble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub lambda: f64,
    pub gamma: f64,
    pub xi: [f64; 2],
}

impl BubbleParams {
    pub fn new(lambda: f64, gamma: f64, xi: [f64; 2]) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParam(format!("bubble scale must be positive, got {lambda}")));
        }
        Ok(Self { lambda, gamma, xi })
    }
    /// `p = lambda e^{i gamma}`
    pub fn p(&self) -> Complex64 {
        Complex64::from_polar(self.lambda, self.gamma)
    }
    /// Rescaled coordinate `y = (x - xi)/lambda`.
    pub fn inner(&self, x: [f64; 2]) -> [f64; 2] {
        [(x[0] - self.xi[0]) / self.lambda, (x[1] - self.xi[1]) / self.lambda]
    }
}

/// The profile angle `w(rho)` with its derivative, sine and cosine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Profile {
    pub w: f64,
    pub w_rho: f64,
    pub sin_w: f64,
    pub cos_w: f64,
}

pub fn profile_w(rho: f64) -> Profile {
    let d = rho * rho + 1.0;
    Profile {
        w: PI - 2.0 * rho.atan(),
        w_rho: -2.0 / d,
        sin_w: 2.0 * rho / d,
        cos_w: (rho * rho - 1.0) / d,
    }
}

/// W with its orthonormal tangent frame at a point of the rescaled plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameSample {
    pub w_vec: S2Vector,
    pub e1: S2Vector,
    pub e2: S2Vector,
    pub w: f64,
    pub w_rho: f64,
    /// `|grad_y W|^2 = 8/(rho^2+1)^2`
    pub grad_sq: f64,
    pub rho: f64,
    pub theta: f64,
}

/// Polar angle with the convention `theta = 0` at the origin.
pub fn polar_angle(y: [f64; 2]) -> f64 {
    if y[0] == 0.0 && y[1] == 0.0 {
        0.0
    } else {
        y[1].atan2(y[0])
    }
}

pub fn bubble_frame(y: [f64; 2]) -> FrameSample {
    let rho = y[0].hypot(y[1]);
    frame_polar(rho, polar_angle(y))
}

/// Frame at polar coordinates `(rho, theta)`.
pub fn frame_polar(rho: f64, theta: f64) -> FrameSample {
    let p = profile_w(rho);
    let (s, c) = theta.sin_cos();
    let d = rho * rho + 1.0;
    FrameSample {
        w_vec: Vec3::new(c * p.sin_w, s * p.sin_w, p.cos_w),
        e1: Vec3::new(c * p.cos_w, s * p.cos_w, -p.sin_w),
        e2: Vec3::new(-s, c, 0.0),
        w: p.w,
        w_rho: p.w_rho,
        grad_sq: 8.0 / (d * d),
        rho,
        theta,
    }
}

/// Rotation by `gamma` about the vertical axis.
pub fn rotate_z(gamma: f64, v: Vec3) -> Vec3 {
    let (s, c) = gamma.sin_cos();
    Vec3::new(c * v[0] - s * v[1], s * v[0] + c * v[1], v[2])
}

/// `U(x) = Q_gamma W((x - xi)/lambda)`.
pub fn bubble_field(p: &BubbleParams, x: [f64; 2]) -> S2Vector {
    rotate_z(p.gamma, bubble_frame(p.inner(x)).w_vec)
}

/// Smallest pairwise center distance and largest scale.
fn separation(bubbles: &[BubbleParams]) -> (f64, f64) {
    let mut sep = f64::INFINITY;
    for (i, p) in bubbles.iter().enumerate() {
        for q in &bubbles[i + 1..] {
            sep = sep.min((p.xi[0] - q.xi[0]).hypot(p.xi[1] - q.xi[1]));
        }
    }
    let lmax = bubbles.iter().map(|p| p.lambda).fold(0.0, f64::max);
    (sep, lmax)
}

/// `U*(x) = -(N-1) e3 + sum_j U^(j)(x)`.
///
/// Centers closer than `10 max lambda` are rejected when `strict`, and
/// logged as a warning otherwise.
pub fn ustar_sum(bubbles: &[BubbleParams], x: [f64; 2], strict: bool) -> Result<Vec3> {
    if bubbles.is_empty() {
        return Err(Error::InvalidParam("at least one bubble is required".into()));
    }
    let (sep, lmax) = separation(bubbles);
    if sep < 10.0 * lmax {
        if strict {
            return Err(Error::CentersTooClose { sep, min: 10.0 * lmax });
        }
        log::warn!("bubble centers {sep:.3e} apart, below 10 * max lambda = {:.3e}", 10.0 * lmax);
    }
    let n = bubbles.len() as f64;
    let mut u = Vec3::E3 * (1.0 - n);
    for p in bubbles {
        u += bubble_field(p, x);
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ToComplex,
    FromComplex,
}

/// Result of [`complex_form`]: a complex coordinate or a tangent vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComplexForm {
    Complex(Complex64),
    Vector(Vec3),
}

/// Tangent vector to complex coordinate in the rotated frame `(Q E1, Q E2)`.
/// Rejects vectors with `|v.U| > tol |v|`.
pub fn to_complex(v: Vec3, frame: &FrameSample, gamma: f64, tol: f64) -> Result<Complex64> {
    let u = rotate_z(gamma, frame.w_vec);
    let dot = v.dot(&u).abs();
    if dot > tol * v.norm() {
        return Err(Error::NotTangent { dot, tol });
    }
    Ok(Complex64::new(v.dot(&rotate_z(gamma, frame.e1)), v.dot(&rotate_z(gamma, frame.e2))))
}

/// Inverse of [`to_complex`]: `Re f Q E1 + Im f Q E2`.
pub fn from_complex(f: Complex64, frame: &FrameSample, gamma: f64) -> Vec3 {
    rotate_z(gamma, frame.e1 * f.re + frame.e2 * f.im)
}

/// Both directions of the complex identification behind one entry point.
pub fn complex_form(
    value: ComplexForm,
    frame: &FrameSample,
    gamma: f64,
    direction: Direction,
    tol: f64,
) -> Result<ComplexForm> {
    match (direction, value) {
        (Direction::ToComplex, ComplexForm::Vector(v)) => {
            Ok(ComplexForm::Complex(to_complex(v, frame, gamma, tol)?))
        }
        (Direction::FromComplex, ComplexForm::Complex(f)) => {
            Ok(ComplexForm::Vector(from_complex(f, frame, gamma)))
        }
        _ => Err(Error::InvalidParam("value kind does not match the direction".into())),
    }
}

/// Scalar `A` making `(1+A) U* + Phi - (Phi.U*) U*` a unit vector.
pub fn corrector_a(ustar: Vec3, phi: Vec3) -> Result<f64> {
    let s = ustar.norm_sq();
    if s < 0.25 {
        return Err(Error::Degenerate(format!("|U*| = {:.3e} below 1/2", s.sqrt())));
    }
    let c = phi.dot(&ustar);
    let perp = phi - ustar * c;
    let k = c * (1.0 - s) / s;
    let disc = 1.0 + (1.0 - s - perp.norm_sq()) / s + k * k;
    if disc < 0.0 {
        return Err(Error::Degenerate(format!("negative discriminant {disc:.3e}")));
    }
    Ok(disc.sqrt() - 1.0 - k)
}

/// The default lower bound `delta0` for the alignment `u.U*`.
pub const DEFAULT_DELTA0: f64 = 0.5;

/// Assembles `u = (1+A) U* + Phi - (Phi.U*) U*` at `x`.
pub fn assemble_u(bubbles: &[BubbleParams], phi: Vec3, x: [f64; 2], strict: bool) -> Result<S2Vector> {
    let us = ustar_sum(bubbles, x, strict)?;
    let a = corrector_a(us, phi)?;
    Ok(us * (1.0 + a) + phi - us * phi.dot(&us))
}
