//! The non-local correction driven by the history of `p = lambda e^{i gamma}`:
//! kernel `K0`, self-similar profile `q0`, the history integral `Phi0`, the
//! embedded field `Phi0*` and the error `S` it leaves behind.

use crate::error::{Error, Result};
use crate::geometry::{bubble_field, frame_polar, polar_angle, rotate_z, BubbleParams, PhysParams};
use crate::linops::vector_kernel_polar;
use crate::quad::{integrate, integrate_pieces, QuadOptions};
use crate::vec3::{Linear, Vec3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};
use std::path::Path;

type C64 = Complex64;

/// Time-dependent bubble parameters `p(t)`, `xi(t)` and their rates.
pub trait History: Sync {
    /// Interval `[t0, t1]` on which the history is defined.
    fn span(&self) -> (f64, f64);
    fn p(&self, t: f64) -> C64;
    fn pdot(&self, t: f64) -> C64;
    fn xi(&self, _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn xidot(&self, _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn bubble(&self, t: f64) -> BubbleParams {
        let p = self.p(t);
        BubbleParams { lambda: p.norm(), gamma: p.arg(), xi: self.xi(t) }
    }
    /// Times where the history is not smooth; quadrature splits there.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `p(t) = p0 + c t` with a fixed center.
#[derive(Clone, Copy, Debug)]
pub struct LinearHistory {
    pub p0: C64,
    pub rate: C64,
    pub t_end: f64,
}

impl History for LinearHistory {
    fn span(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }
    fn p(&self, t: f64) -> C64 {
        self.p0 + self.rate * t
    }
    fn pdot(&self, _t: f64) -> C64 {
        self.rate
    }
}

/// `lambda_*(t) = |ln T| (T-t)/ln^2(T-t)` for `T < 1`.
pub fn lambda_star(t_final: f64, t: f64) -> f64 {
    let u = t_final - t;
    let l = u.ln();
    t_final.ln().abs() * u / (l * l)
}

/// Time derivative of [`lambda_star`].
pub fn lambda_star_dot(t_final: f64, t: f64) -> f64 {
    let l = (t_final - t).ln();
    -t_final.ln().abs() * (1.0 / (l * l) - 2.0 / (l * l * l))
}

/// The model rate `p(t) = lambda_*(t) e^{i gamma0}` at a fixed center.
#[derive(Clone, Copy, Debug)]
pub struct RateAnsatz {
    pub t_final: f64,
    pub gamma0: f64,
    pub xi: [f64; 2],
}

impl RateAnsatz {
    pub fn new(t_final: f64) -> Result<Self> {
        if !(t_final > 0.0 && t_final < 1.0) {
            return Err(Error::InvalidParam(format!("blow-up time must lie in (0,1), got {t_final}")));
        }
        Ok(Self { t_final, gamma0: 0.0, xi: [0.0, 0.0] })
    }
}

impl History for RateAnsatz {
    fn span(&self) -> (f64, f64) {
        (0.0, self.t_final)
    }
    fn p(&self, t: f64) -> C64 {
        C64::from_polar(lambda_star(self.t_final, t), self.gamma0)
    }
    fn pdot(&self, t: f64) -> C64 {
        C64::from_polar(lambda_star_dot(self.t_final, t), self.gamma0)
    }
    fn xi(&self, _t: f64) -> [f64; 2] {
        self.xi
    }
}

/// Sampled history with cubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct ParamHistory {
    t: Vec<f64>,
    p: Vec<C64>,
    pdot: Vec<C64>,
    xi: Vec<[f64; 2]>,
    xidot: Vec<[f64; 2]>,
    pdot_given: bool,
}

#[derive(Debug, Deserialize, Serialize)]
struct HistoryRow {
    t: f64,
    re_p: f64,
    im_p: f64,
    xi1: f64,
    xi2: f64,
    #[serde(default)]
    re_pdot: Option<f64>,
    #[serde(default)]
    im_pdot: Option<f64>,
    #[serde(default)]
    xidot1: Option<f64>,
    #[serde(default)]
    xidot2: Option<f64>,
}

/// Finite-difference derivative: centered inside, second-order one-sided at the ends.
fn fd_rates<T: Linear>(t: &[f64], v: &[T]) -> Vec<T> {
    let n = t.len();
    (0..n)
        .map(|i| {
            let idx = if i == 0 {
                [0, 1, 2]
            } else if i == n - 1 {
                [n - 3, n - 2, n - 1]
            } else {
                [i - 1, i, i + 1]
            };
            let xs = [t[idx[0]], t[idx[1]], t[idx[2]]];
            let w = crate::grid::fd_weights(t[i], &xs, 1);
            idx.iter().zip(&w[1]).fold(T::zero(), |s, (&j, &c)| s + v[j] * c)
        })
        .collect()
}

impl ParamHistory {
    /// Builds a history; missing rates are filled by finite differences.
    pub fn new(
        t: Vec<f64>,
        p: Vec<C64>,
        pdot: Option<Vec<C64>>,
        xi: Vec<[f64; 2]>,
        xidot: Option<Vec<[f64; 2]>>,
    ) -> Result<Self> {
        let n = t.len();
        if n < 3 || p.len() != n || xi.len() != n {
            return Err(Error::InvalidParam("history needs at least 3 consistent rows".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParam("history times must be strictly increasing".into()));
        }
        if p.iter().any(|v| !(v.norm() > 0.0)) {
            return Err(Error::InvalidParam("history has |p| = 0".into()));
        }
        let pdot_given = pdot.is_some();
        let pdot = match pdot {
            Some(v) if v.len() == n => v,
            Some(_) => return Err(Error::InvalidParam("pdot length mismatch".into())),
            None => fd_rates(&t, &p),
        };
        let xidot = match xidot {
            Some(v) if v.len() == n => v,
            Some(_) => return Err(Error::InvalidParam("xidot length mismatch".into())),
            None => {
                let a: Vec<f64> = xi.iter().map(|x| x[0]).collect();
                let b: Vec<f64> = xi.iter().map(|x| x[1]).collect();
                fd_rates(&t, &a).into_iter().zip(fd_rates(&t, &b)).map(|(u, v)| [u, v]).collect()
            }
        };
        let h = Self { t, p, pdot, xi, xidot, pdot_given };
        let c = h.consistency();
        if c > 0.05 {
            log::warn!("supplied pdot differs from finite differences of p by {:.1}%", 100.0 * c);
        }
        Ok(h)
    }

    /// Samples an analytic history on the given nodes.
    pub fn sample(h: &dyn History, t: Vec<f64>) -> Result<Self> {
        let p = t.iter().map(|&s| h.p(s)).collect();
        let pd = t.iter().map(|&s| h.pdot(s)).collect();
        let xi = t.iter().map(|&s| h.xi(s)).collect();
        let xd = t.iter().map(|&s| h.xidot(s)).collect();
        Self::new(t, p, Some(pd), xi, Some(xd))
    }

    /// Largest relative gap between the stored `pdot` and finite differences of `p`.
    pub fn consistency(&self) -> f64 {
        if !self.pdot_given {
            return 0.0;
        }
        let fd = fd_rates(&self.t, &self.p);
        let scale = self.pdot.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        fd.iter().zip(&self.pdot).map(|(a, b)| (a - b).norm() / scale).fold(0.0, f64::max)
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    /// Reads columns `t, re_p, im_p, xi1, xi2` and optionally
    /// `re_pdot, im_pdot, xidot1, xidot2`.
    pub fn from_csv_reader<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let rows: Vec<HistoryRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        let t = rows.iter().map(|r| r.t).collect();
        let p = rows.iter().map(|r| C64::new(r.re_p, r.im_p)).collect();
        let xi = rows.iter().map(|r| [r.xi1, r.xi2]).collect();
        let pdot = rows
            .iter()
            .map(|r| Some(C64::new(r.re_pdot?, r.im_pdot?)))
            .collect::<Option<Vec<_>>>();
        let xidot = rows.iter().map(|r| Some([r.xidot1?, r.xidot2?])).collect::<Option<Vec<_>>>();
        Self::new(t, p, pdot, xi, xidot)
    }

    pub fn to_csv_writer<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for i in 0..self.t.len() {
            wr.serialize(HistoryRow {
                t: self.t[i],
                re_p: self.p[i].re,
                im_p: self.p[i].im,
                xi1: self.xi[i][0],
                xi2: self.xi[i][1],
                re_pdot: Some(self.pdot[i].re),
                im_pdot: Some(self.pdot[i].im),
                xidot1: Some(self.xidot[i][0]),
                xidot2: Some(self.xidot[i][1]),
            })?;
        }
        wr.flush()?;
        Ok(())
    }

    fn locate(&self, t: f64) -> (usize, f64, f64) {
        let n = self.t.len();
        let i = self.t.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        let h = self.t[i + 1] - self.t[i];
        (i, h, ((t - self.t[i]) / h).clamp(0.0, 1.0))
    }

    fn hermite<T: Linear>(&self, v: &[T], d: &[T], t: f64) -> (T, T) {
        let (i, h, s) = self.locate(t);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let val = v[i] * h00 + d[i] * (h10 * h) + v[i + 1] * h01 + d[i + 1] * (h11 * h);
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        let der = v[i] * d00 + d[i] * d10 + v[i + 1] * d01 + d[i + 1] * d11;
        (val, der)
    }
}

impl History for ParamHistory {
    fn span(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }
    fn p(&self, t: f64) -> C64 {
        self.hermite(&self.p, &self.pdot, t).0
    }
    fn pdot(&self, t: f64) -> C64 {
        self.hermite(&self.p, &self.pdot, t).1
    }
    fn xi(&self, t: f64) -> [f64; 2] {
        let a: Vec<f64> = self.xi.iter().map(|x| x[0]).collect();
        let b: Vec<f64> = self.xi.iter().map(|x| x[1]).collect();
        let da: Vec<f64> = self.xidot.iter().map(|x| x[0]).collect();
        let db: Vec<f64> = self.xidot.iter().map(|x| x[1]).collect();
        [self.hermite(&a, &da, t).0, self.hermite(&b, &db, t).0]
    }
    fn xidot(&self, t: f64) -> [f64; 2] {
        let a: Vec<f64> = self.xi.iter().map(|x| x[0]).collect();
        let b: Vec<f64> = self.xi.iter().map(|x| x[1]).collect();
        let da: Vec<f64> = self.xidot.iter().map(|x| x[0]).collect();
        let db: Vec<f64> = self.xidot.iter().map(|x| x[1]).collect();
        [self.hermite(&a, &da, t).1, self.hermite(&b, &db, t).1]
    }
    fn kinks(&self) -> Vec<f64> {
        self.t.clone()
    }
}

/// Derivatives `g^{(m)}(x)` of `g(x) = (1 - e^{-x})/x`.
fn g_jet(x: C64) -> [C64; 3] {
    if x.norm() <= 1.0 {
        let mut out = [C64::new(0.0, 0.0); 3];
        let mut fact = 1.0; // (n+1)!
        let mut pow = [C64::new(1.0, 0.0); 3];
        for n in 0..30usize {
            fact *= (n + 1) as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            out[0] += pow[0] * (sign / fact);
            if n >= 1 {
                out[1] += pow[1] * (sign * n as f64 / fact);
            }
            if n >= 2 {
                out[2] += pow[2] * (sign * (n * (n - 1)) as f64 / fact);
            }
            pow[0] *= x;
            if n >= 1 {
                pow[1] *= x;
            }
            if n >= 2 {
                pow[2] *= x;
            }
        }
        out
    } else {
        let e = (-x).exp();
        [
            (1.0 - e) / x,
            (e * (x + 1.0) - 1.0) / (x * x),
            (2.0 - e * (x * x + 2.0 * x + 2.0)) / (x * x * x),
        ]
    }
}

/// `1 - e^{-x}` without cancellation for small `|x|`.
fn one_minus_exp(x: C64) -> C64 {
    x * g_jet(x)[0]
}

/// `K0(zeta) = 2 (1 - e^{-(a+ib) zeta/4})/zeta` and its first two
/// `zeta`-derivatives (`order` 0, 1 or 2).
pub fn kernel_k0(zeta: f64, pp: &PhysParams, order: u8) -> Result<C64> {
    let c4 = pp.c() / 4.0;
    let g = g_jet(c4 * zeta);
    let base = pp.c() / 2.0;
    match order {
        0 => Ok(base * g[0]),
        1 => Ok(base * c4 * g[1]),
        2 => Ok(base * c4 * c4 * g[2]),
        _ => Err(Error::InvalidParam(format!("K0 derivative order {order} not available"))),
    }
}

fn k0_jet(zeta: f64, pp: &PhysParams) -> [C64; 3] {
    let c4 = pp.c() / 4.0;
    let g = g_jet(c4 * zeta);
    let base = pp.c() / 2.0;
    [base * g[0], base * c4 * g[1], base * c4 * c4 * g[2]]
}

/// Self-similar profile
/// `q0(xi) = (2 xi/(a+ib)) int_xi^inf (1 - e^{-(a+ib) eta^2/4}) eta^{-3} d eta`.
pub fn profile_q0(xi: f64, pp: &PhysParams) -> Result<C64> {
    if !(xi > 0.0) {
        return Err(Error::InvalidParam(format!("q0 needs xi > 0, got {xi}")));
    }
    let c4 = pp.c() / 4.0;
    let opts = QuadOptions::tol(1e-15, 1e-12);
    let tail = |lo: f64| {
        // eta = lo/s maps [lo, inf) onto (0, 1]
        integrate(|s: f64| if s == 0.0 { C64::new(0.0, 0.0) } else { one_minus_exp(c4 * (lo * lo / (s * s))) * (s / (lo * lo)) }, 0.0, 1.0, opts)
    };
    let integral = if xi >= 1.0 {
        tail(xi)?.value
    } else {
        // eta = e^u on [xi, 1]
        let inner = integrate(
            |u: f64| {
                let e2 = (2.0 * u).exp();
                one_minus_exp(c4 * e2) / e2
            },
            xi.ln(),
            0.0,
            opts,
        )?;
        inner.value + tail(1.0)?.value
    };
    Ok(integral * (2.0 * xi) / pp.c())
}

/// `Phi0` and its first two `z`-derivatives at `(z, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrectionSample {
    pub phi0: C64,
    pub dz: C64,
    pub dzz: C64,
    pub z: f64,
    pub t: f64,
}

#[derive(Clone, Copy)]
struct Tri([C64; 3]);

impl Add for Tri {
    type Output = Tri;
    fn add(self, o: Tri) -> Tri {
        Tri([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}
impl Sub for Tri {
    type Output = Tri;
    fn sub(self, o: Tri) -> Tri {
        Tri([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}
impl Mul<f64> for Tri {
    type Output = Tri;
    fn mul(self, s: f64) -> Tri {
        Tri([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}
impl Linear for Tri {
    fn zero() -> Self {
        Tri([C64::new(0.0, 0.0); 3])
    }
    fn magnitude(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn check_span(hist: &dyn History, lo: f64, hi: f64) -> Result<()> {
    let (a, b) = hist.span();
    let slack = 1e-12 * (b - a).abs().max(1.0);
    if lo < a - slack || hi > b + slack {
        return Err(Error::HistoryRange { lo: a, hi: b, want_lo: lo, want_hi: hi });
    }
    Ok(())
}

/// `Phi0(z,t) = -z int_0^t pdot(s)/(t-s) K0(z^2/(t-s)) ds` with
/// `d_z Phi0 = -int pdot/(t-s) (K0 + 2 zeta K0') ds` and
/// `d_zz Phi0 = -z^{-1} int pdot/(t-s) (6 zeta K0' + 4 zeta^2 K0'') ds`.
///
/// The integrand stays bounded as `s -> t`. The quadrature runs over the lag
/// `t - s`, split at `z^2` and at geometrically growing lags beyond it.
pub fn phi0_eval(z: f64, t: f64, hist: &dyn History, pp: &PhysParams) -> Result<CorrectionSample> {
    if !(z > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParam(format!("phi0 needs z > 0 and t > 0, got z={z}, t={t}")));
    }
    check_span(hist, 0.0, t)?;
    let z2 = z * z;
    // integrate in the lag tau = t - s so that small lags keep full precision
    let mut pts = vec![0.0];
    let mut lag = z2;
    while lag < t {
        pts.push(lag);
        lag *= 8.0;
    }
    pts.extend(hist.kinks().into_iter().filter(|&s| s > 0.0 && s < t).map(|s| t - s));
    pts.push(t);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * t);
    let r = integrate_pieces(
        |tau: f64| {
            if tau <= 0.0 {
                let pd = hist.pdot(t);
                // limits of the three bracketed integrands as zeta -> inf
                return Tri([pd * (2.0 / z2), C64::new(0.0, 0.0), pd * (4.0 / z2)]);
            }
            let zeta = z2 / tau;
            let k = k0_jet(zeta, pp);
            let w = hist.pdot(t - tau) / tau;
            Tri([w * k[0], w * (k[0] + k[1] * (2.0 * zeta)), w * (k[1] * (6.0 * zeta) + k[2] * (4.0 * zeta * zeta))])
        },
        &pts,
        QuadOptions { abs_tol: 1e-14, rel_tol: 1e-11, max_intervals: 4000 },
    )?;
    let v = r.value.0;
    Ok(CorrectionSample { phi0: -v[0] * z, dz: -v[1], dzz: -v[2] / z, z, t })
}

/// `Phi0*` and its polar derivatives around the bubble center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiStarJet {
    /// complex value of the first two components
    pub value: C64,
    pub d_r: C64,
    pub d_theta: C64,
}

/// `Phi0* = rho^2/(rho^2+1) Phi0(z,t) e^{i theta}` at polar position
/// `(r, theta)` relative to `xi(t)`, with `z = sqrt(r^2 + lambda^2)`.
pub fn phi0_star_polar(r: f64, theta: f64, t: f64, hist: &dyn History, pp: &PhysParams) -> Result<PhiStarJet> {
    let lam = hist.p(t).norm();
    let rho = r / lam;
    let d = rho * rho + 1.0;
    let z = r.hypot(lam);
    let s = phi0_eval(z, t, hist, pp)?;
    let e = C64::from_polar(1.0, theta);
    Ok(PhiStarJet {
        value: s.phi0 * e * (rho * rho / d),
        d_r: (s.phi0 * (2.0 * rho / (lam * d * d)) + s.dz * (rho.powi(3) / d.powf(1.5))) * e,
        d_theta: s.phi0 * C64::new(0.0, rho * rho / d) * e,
    })
}

/// `Phi0*(x, t)` embedded as `(Re, Im, 0)`.
pub fn phi0_star_field(x: [f64; 2], t: f64, hist: &dyn History, pp: &PhysParams) -> Result<Vec3> {
    let c = hist.xi(t);
    let d = [x[0] - c[0], x[1] - c[1]];
    let r = d[0].hypot(d[1]);
    if r == 0.0 {
        return Ok(Vec3::ZERO);
    }
    let j = phi0_star_polar(r, polar_angle(d), t, hist, pp)?;
    Ok(Vec3::from_planar(j.value))
}

/// `d_t U` of the bubble driven by the history, from the analytic
/// parameter derivatives of `Q_gamma W((x - xi)/lambda)`.
pub fn bubble_time_derivative(x: [f64; 2], t: f64, hist: &dyn History) -> Vec3 {
    let b = hist.bubble(t);
    let p = hist.p(t);
    let pd = hist.pdot(t);
    let lam = b.lambda;
    let lam_dot = (pd * p.conj()).re / lam;
    let gam_dot = (pd * p.conj()).im / (lam * lam);
    let xd = hist.xidot(t);
    let y = b.inner(x);
    let f = frame_polar(y[0].hypot(y[1]), polar_angle(y));
    let z = |p, q| rotate_z(b.gamma, vector_kernel_polar(p, q, &f).expect("valid kernel index"));
    -(z(0, 1) * (lam_dot / lam) + z(0, 2) * gam_dot + z(1, 1) * (xd[0] / lam) + z(1, 2) * (xd[1] / lam))
}

/// `E0 = -lambda' d_lambda U - gamma' d_gamma U` in the complex frame of the bubble:
/// `-2 rho/(rho^2+1) (lambda'/lambda + i gamma')`.
pub fn e0_complex(rho: f64, lam: f64, lam_dot: f64, gam_dot: f64) -> C64 {
    C64::new(lam_dot / lam, gam_dot) * (-2.0 * rho / (rho * rho + 1.0))
}

/// Steps used by [`residual_sj`].
#[derive(Clone, Copy, Debug)]
pub struct SjSteps {
    /// spatial step relative to `min(lambda, r)/4`
    pub space: f64,
    /// time step relative to `T - t` (or to `t` if smaller)
    pub time: f64,
}

impl Default for SjSteps {
    fn default() -> Self {
        Self { space: 1e-2, time: 1e-3 }
    }
}

/// New error of the corrected bubble,
/// `S = -d_t Phi0* + (a - b U x)[Lap Phi0* + |grad U|^2 Phi0* - 2 grad(U.Phi0*) grad U] - d_t U`.
/// Spatial derivatives and `d_t Phi0*` by central differences.
pub fn residual_sj(x: [f64; 2], t: f64, hist: &dyn History, pp: &PhysParams, steps: SjSteps) -> Result<Vec3> {
    let (_, t_end) = hist.span();
    let ht = steps.time * (t_end - t).min(t);
    if !(ht > 0.0) {
        return Err(Error::InvalidParam(format!("t = {t} too close to the history ends for time differences")));
    }
    check_span(hist, t - ht, t + ht)?;
    let b = hist.bubble(t);
    let r = (x[0] - b.xi[0]).hypot(x[1] - b.xi[1]);
    let h = steps.space * 0.25 * b.lambda.min(if r > 0.0 { r } else { b.lambda });
    let phi = |x: [f64; 2], t: f64| phi0_star_field(x, t, hist, pp);
    let u = |x: [f64; 2]| bubble_field(&b, x);
    let c = phi(x, t)?;
    let xp = [x[0] + h, x[1]];
    let xm = [x[0] - h, x[1]];
    let yp = [x[0], x[1] + h];
    let ym = [x[0], x[1] - h];
    let (fxp, fxm, fyp, fym) = (phi(xp, t)?, phi(xm, t)?, phi(yp, t)?, phi(ym, t)?);
    let lap = (fxp + fxm + fyp + fym - c * 4.0) * (1.0 / (h * h));
    let dot = |x: [f64; 2], v: Vec3| u(x).dot(&v);
    let gx = (dot(xp, fxp) - dot(xm, fxm)) / (2.0 * h);
    let gy = (dot(yp, fyp) - dot(ym, fym)) / (2.0 * h);
    let ux = (u(xp) - u(xm)) * (0.5 / h);
    let uy = (u(yp) - u(ym)) * (0.5 / h);
    let y = b.inner(x);
    let rho2 = y[0] * y[0] + y[1] * y[1];
    let grad_sq = 8.0 / ((rho2 + 1.0).powi(2) * b.lambda * b.lambda);
    let inner = lap + c * grad_sq - (ux * gx + uy * gy) * 2.0;
    let u0 = u(x);
    let spatial = inner * pp.a() - u0.cross(&inner) * pp.b();
    let dphi_dt = (phi(x, t + ht)? - phi(x, t - ht)?) * (0.5 / ht);
    Ok(spatial - dphi_dt - bubble_time_derivative(x, t, hist))
}

/// Upper-bound envelope `z 1{z^2<t} + t |ln T|^{-1} z^{-1} 1{z^2>=t}`.
pub fn phi0_envelope(z: f64, t: f64, t_final: f64) -> f64 {
    if z * z < t {
        z
    } else {
        t / (t_final.ln().abs() * z)
    }
}

/// `(|Phi0| + z |d_z Phi0| + z^2 |d_zz Phi0|)` over [`phi0_envelope`].
pub fn phi0_certificate(s: &CorrectionSample, t_final: f64) -> f64 {
    let num = s.phi0.norm() + s.z * s.dz.norm() + s.z * s.z * s.dzz.norm();
    num / phi0_envelope(s.z, s.t, t_final)
}

/// Envelope `lambda_*^{-1} <rho>^{-2} + |lambda_*'| <rho>^{-1} + |xi'|` of the error `S`.
pub fn sj_envelope(rho: f64, t: f64, t_final: f64, xidot: [f64; 2]) -> f64 {
    let jb = (1.0 + rho * rho).sqrt();
    1.0 / (lambda_star(t_final, t) * jb * jb) + lambda_star_dot(t_final, t).abs() / jb + xidot[0].hypot(xidot[1])
}

/// Both bound ratios on one `(z, t)` or `(rho, t)` grid.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertificateReport {
    pub t_final: f64,
    pub phi0_max: f64,
    pub phi0_star_max: f64,
    pub sj_max: f64,
    pub points: usize,
}

/// Evaluates the `Phi0`, `Phi0*` and `S` certificates for the rate ansatz
/// with blow-up time `t_final` on an `n x n` logarithmic grid in
/// `z` (or `rho`) and `T - t`.
pub fn certificate_sweep(t_final: f64, n: usize, pp: &PhysParams) -> Result<CertificateReport> {
    let hist = RateAnsatz::new(t_final)?;
    let logspace = |a: f64, b: f64, i: usize| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp();
    let mut rep = CertificateReport { t_final, phi0_max: 0.0, phi0_star_max: 0.0, sj_max: 0.0, points: 0 };
    for it in 0..n {
        // remaining time T - t from T/2 down to 1e-4 T
        let t = t_final - logspace(0.5 * t_final, 1e-4 * t_final, it);
        let lam = lambda_star(t_final, t);
        for iz in 0..n {
            let z = logspace(lam, 10.0 * t.sqrt().max(lam), iz);
            let s = phi0_eval(z, t, &hist, pp)?;
            rep.phi0_max = rep.phi0_max.max(phi0_certificate(&s, t_final));
            let rho = logspace(1e-2, 1e3, iz);
            let x = [rho * lam, 0.0];
            let ps = phi0_star_field(x, t, &hist, pp)?;
            let zz = (rho * lam).hypot(lam);
            rep.phi0_star_max = rep.phi0_star_max.max(ps.norm() / phi0_envelope(zz, t, t_final));
            let sj = residual_sj(x, t, &hist, pp, SjSteps::default())?;
            rep.sj_max = rep.sj_max.max(sj.norm() / sj_envelope(rho, t, t_final, [0.0, 0.0]));
            rep.points += 1;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat() -> PhysParams {
        PhysParams::heat_flow()
    }

    #[test]
    fn k0_limits() {
        let pp = PhysParams::new(0.8, 0.6).unwrap();
        let k = kernel_k0(1e-9, &pp, 0).unwrap();
        assert!((k - pp.c() / 2.0).norm() < 1e-9);
        let k = kernel_k0(4.0, &heat(), 0).unwrap();
        assert!((k.re - 0.5 * (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let k = kernel_k0(1e6, &heat(), 0).unwrap();
        assert!((k.re - 2e-6).abs() <= 1e-12);
        let k2 = kernel_k0(1e-8, &pp, 2).unwrap();
        assert!((k2 - (pp.c() / 4.0).powi(3) * (2.0 / 3.0)).norm() < 1e-9);
        assert!(kernel_k0(1.0, &pp, 3).is_err());
    }

    #[test]
    fn k0_branches_agree() {
        let pp = PhysParams::new(0.6, -0.8).unwrap();
        for order in 0..3u8 {
            let z0 = 4.0 * (1.0 - 1e-9);
            let z1 = 4.0 * (1.0 + 1e-9);
            let a = kernel_k0(z0, &pp, order).unwrap();
            let b = kernel_k0(z1, &pp, order).unwrap();
            assert!((a - b).norm() < 1e-8 * a.norm().max(1e-3), "order {order}");
        }
    }

    #[test]
    fn zero_rate_gives_zero_correction() {
        let h = LinearHistory { p0: C64::new(0.1, 0.0), rate: C64::new(0.0, 0.0), t_end: 1.0 };
        let s = phi0_eval(0.3, 0.5, &h, &heat()).unwrap();
        assert_eq!(s.phi0, C64::new(0.0, 0.0));
    }

    #[test]
    fn history_range_checked() {
        let h = LinearHistory { p0: C64::new(0.1, 0.0), rate: C64::new(1.0, 0.0), t_end: 1.0 };
        assert!(matches!(phi0_eval(0.3, 2.0, &h, &heat()), Err(Error::HistoryRange { .. })));
    }

    #[test]
    fn e0_matches_parameter_derivatives() {
        let lam = 0.3;
        let gam = 0.4;
        let (ld, gd) = (-0.7, 0.25);
        let x = [0.2, 0.5];
        let h = 1e-6;
        let u = |l: f64, g: f64| bubble_field(&BubbleParams { lambda: l, gamma: g, xi: [0.0, 0.0] }, x);
        let dl = (u(lam + h, gam) - u(lam - h, gam)) * (0.5 / h);
        let dg = (u(lam, gam + h) - u(lam, gam - h)) * (0.5 / h);
        let e0 = -(dl * ld) - dg * gd;
        let f = frame_polar((x[0].hypot(x[1])) / lam, polar_angle(x));
        let c = crate::geometry::to_complex(e0, &f, gam, 1e-6).unwrap();
        let expect = e0_complex(x[0].hypot(x[1]) / lam, lam, ld, gd);
        assert!((c - expect).norm() < 1e-8);
    }

    #[test]
    fn static_bubble_has_no_error() {
        let h = LinearHistory { p0: C64::new(0.05, 0.2), rate: C64::new(0.0, 0.0), t_end: 1.0 };
        let s = residual_sj([0.03, 0.02], 0.5, &h, &heat(), SjSteps::default()).unwrap();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let t: Vec<f64> = (0..6).map(|i| i as f64 * 0.1).collect();
        let h = LinearHistory { p0: C64::new(0.1, 0.05), rate: C64::new(-0.1, 0.02), t_end: 1.0 };
        let ph = ParamHistory::sample(&h, t).unwrap();
        let mut buf = Vec::new();
        ph.to_csv_writer(&mut buf).unwrap();
        let back = ParamHistory::from_csv_reader(&buf[..]).unwrap();
        assert!((back.p(0.23) - h.p(0.23)).norm() < 1e-14);
        assert!((back.pdot(0.23) - h.rate).norm() < 1e-13);
        let minimal = "t,re_p,im_p,xi1,xi2\n0,1,0,0,0\n0.5,1.5,0,0,0\n1,2,0,0,0\n";
        let m = ParamHistory::from_csv_reader(minimal.as_bytes()).unwrap();
        assert!((m.pdot(0.3).re - 1.0).abs() < 1e-12);
    }
}
