//! Adaptive Gauss-Kronrod quadrature for real and complex integrands.

use crate::error::{Error, Result};
use crate::vec3::Linear;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Tolerances and limits for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evals: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

fn gk15<T: Linear, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    let err = (k - g).magnitude();
    (k, err)
}

/// Integrates `f` over the finite interval `[a, b]` by globally adaptive
/// 15-point Gauss-Kronrod bisection.
pub fn integrate<T: Linear, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    if a == b {
        return Ok(QuadResult { value: T::zero(), error: 0.0, evals: 0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut segs = vec![Segment { a, b, value: v, error: e }];
    let mut evals = 15;
    loop {
        let total = segs.iter().fold(T::zero(), |s, g| s + g.value);
        let err: f64 = segs.iter().map(|g| g.error).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if err <= target {
            return Ok(QuadResult { value: total, error: err, evals });
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::Quadrature { err, evals });
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, g)| if g.error > best.1 { (i, g.error) } else { best });
        let s = segs.swap_remove(idx);
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            return Err(Error::Quadrature { err, evals });
        }
        let (v1, e1) = gk15(&mut f, s.a, m);
        let (v2, e2) = gk15(&mut f, m, s.b);
        evals += 30;
        segs.push(Segment { a: s.a, b: m, value: v1, error: e1 });
        segs.push(Segment { a: m, b: s.b, value: v2, error: e2 });
    }
}

/// Integrates over a sequence of breakpoints, summing the pieces. The
/// relative tolerance refers to the magnitude of the whole integral, so
/// pieces that contribute little are not refined needlessly.
pub fn integrate_pieces<T: Linear, F: FnMut(f64) -> T>(
    mut f: F,
    points: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    let mut scale = 0.0;
    for w in points.windows(2) {
        scale += gk15(&mut f, w[0], w[1]).0.magnitude();
    }
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    let local = QuadOptions { abs_tol: opts.abs_tol.max(opts.rel_tol * scale / pieces), ..opts };
    let mut out = QuadResult { value: T::zero(), error: 0.0, evals: 15 * points.len() };
    for w in points.windows(2) {
        let r = integrate(&mut f, w[0], w[1], local)?;
        out.value = out.value + r.value;
        out.error += r.error;
        out.evals += r.evals;
    }
    Ok(out)
}

/// Integrates over `[a, inf)` with the map `x = a + s/(1-s)`, which turns
/// algebraic tails into bounded integrands on `[0, 1)`.
pub fn integrate_to_infinity<T: Linear, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    integrate(
        |s| {
            let d = 1.0 - s;
            if d <= 0.0 {
                return T::zero();
            }
            f(a + s / d) * (1.0 / (d * d))
        },
        0.0,
        1.0,
        opts,
    )
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
