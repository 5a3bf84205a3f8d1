//! Orthogonality moments, the log-singular reduced operator `B_0`, its
//! leading rate profile and the gluing-parameter constraint system.

use crate::error::{Error, Result};
use crate::nonlocal::History;
use crate::quad::{integrate, integrate_pieces, integrate_to_infinity, QuadOptions};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub name: &'static str,
    pub computed: f64,
    pub expected: f64,
}

impl MomentRow {
    pub fn abs_error(&self) -> f64 {
        (self.computed - self.expected).abs()
    }
}

type Integrand = fn(f64) -> f64;

fn moment_integrands() -> [(&'static str, Integrand, f64); 6] {
    fn m1(x: f64) -> f64 {
        0.5 * (-3.0 * x * x - 8.0 * x.powi(4)) * (x * x + 1.0).powf(-3.5)
    }
    fn m2(x: f64) -> f64 {
        (3.0 * x * x - 4.0 * x.powi(4)) * (x * x + 1.0).powf(-4.5)
    }
    fn m3(x: f64) -> f64 {
        let s = (x * x + 1.0).sqrt();
        2.0 * x.powi(3) / (x + s) * (x * x + 1.0).powf(-2.5)
    }
    fn m4(x: f64) -> f64 {
        let s = (x * x + 1.0).sqrt();
        4.0 * x.powi(4) * (x * x + x * s + 1.0) / (x + s) * (x * x + 1.0).powi(-4)
    }
    fn m5(x: f64) -> f64 {
        4.0 * x.powi(3) / (x * x + 1.0).powi(3)
    }
    fn m6(x: f64) -> f64 {
        -2.0 * x * (x * x - 1.0) / (x * x + 1.0).powi(3)
    }
    [
        ("mode1_rotation", m1, -1.0),
        ("mode1_cross", m2, 0.0),
        ("mode0_translation", m3, 5.0 / 3.0 - 4f64.ln()),
        ("mode0_dilation", m4, 0.8),
        ("bubble_mass", m5, 1.0),
        ("potential_balance", m6, 0.0),
    ]
}

/// The six moment integrals over `[0, inf)` next to their exact values.
pub fn moment_table() -> Result<Vec<MomentRow>> {
    let opts = QuadOptions::tol(1e-13, 1e-10);
    moment_integrands()
        .iter()
        .map(|&(name, f, expected)| {
            // [0,1] directly, then the algebraic tail on [1, inf)
            let head = integrate(f, 0.0, 1.0, opts)?.value;
            let tail = integrate_to_infinity(f, 1.0, opts)?.value;
            Ok(MomentRow { name, computed: head + tail, expected })
        })
        .collect()
}

/// `B_0[p](t) = int_0^{t - lambda^2} pdot(s)/(t-s) ds`.
///
/// Histories start at 0; the part of the operator over `[-T, 0]` is left
/// out, which changes the value by at most `sup|pdot| ln 2`.
pub fn b0_apply(hist: &dyn History, t: f64, lambda_t: f64) -> Result<C64> {
    let cut = lambda_t * lambda_t;
    let (t0, t1) = hist.span();
    if !(t - cut > t0) {
        return Err(Error::EmptyInterval(t0, t - cut));
    }
    if t > t1 {
        return Err(Error::HistoryRange { lo: t0, hi: t1, want_lo: t0, want_hi: t });
    }
    // lag tau = t - s on [lambda^2, t - t0], integrated in v = ln tau with
    // unit-width pieces
    let (v0, v1) = (cut.ln(), (t - t0).ln());
    let n = (v1 - v0).ceil() as usize;
    let mut pts: Vec<f64> = (0..=n).map(|i| v0 + (v1 - v0) * i as f64 / n as f64).collect();
    for k in hist.kinks() {
        let tau = t - k;
        if tau > cut && tau < t - t0 {
            pts.push(tau.ln());
        }
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    let r = integrate_pieces(|v: f64| hist.pdot(t - v.exp()), &pts, QuadOptions::tol(1e-15, 1e-11))?;
    Ok(r.value)
}

/// Leading rate profile `p_{0,kappa}(t) = kappa |ln T| int_t^T ds/ln^2(T-s)`.
#[derive(Clone, Debug, Serialize)]
pub struct RateProfile {
    pub t_final: f64,
    pub kappa: f64,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub pdot: Vec<f64>,
}

/// `int_0^u dv/ln^2 v` for `0 < u < 1`, via `v = e^{-y}`.
fn inverse_log_square_integral(u: f64) -> Result<f64> {
    if u <= 0.0 {
        return Ok(0.0);
    }
    let y0 = -u.ln();
    Ok(integrate_to_infinity(|y: f64| (-y).exp() / (y * y), y0, QuadOptions::tol(1e-300, 1e-13))?.value)
}

impl RateProfile {
    /// Samples at `T - t` log-spaced from `T` down to `1e-12 T`, then `t = T`.
    pub fn new(t_final: f64, kappa: f64, n: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final < (-1f64).exp()) || !(kappa > 0.0) || n < 2 {
            return Err(Error::InvalidParam(format!(
                "need 0 < T < 1/e, kappa > 0, n >= 2 (T={t_final}, kappa={kappa}, n={n})"
            )));
        }
        let mut me = Self { t_final, kappa, t: Vec::new(), p: Vec::new(), pdot: Vec::new() };
        for i in 0..n {
            let e = -12.0 * i as f64 / (n - 1) as f64;
            let s = t_final - t_final * 10f64.powf(e);
            me.p.push(me.value(s)?);
            me.pdot.push(me.rate(s));
            me.t.push(s);
        }
        // at t = T the rate vanishes like 1/ln^2 0
        me.t.push(t_final);
        me.p.push(0.0);
        me.pdot.push(0.0);
        Ok(me)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.kappa * self.t_final.ln().abs() * inverse_log_square_integral(self.t_final - t)?)
    }

    pub fn rate(&self, t: f64) -> f64 {
        let l = (self.t_final - t).ln();
        -self.kappa * self.t_final.ln().abs() / (l * l)
    }
}

impl History for RateProfile {
    fn span(&self) -> (f64, f64) {
        (0.0, self.t_final)
    }
    fn p(&self, t: f64) -> C64 {
        C64::new(self.value(t).unwrap_or(f64::NAN), 0.0)
    }
    fn pdot(&self, t: f64) -> C64 {
        C64::new(self.rate(t), 0.0)
    }
}

/// Exponents of the gluing construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluingParams {
    #[serde(rename = "Theta")]
    pub theta: f64,
    pub beta: f64,
    pub sigma0: f64,
    pub delta0: f64,
    pub nu: f64,
    pub l: f64,
    pub alpha: f64,
    pub alpha0: f64,
    /// weight exponent of the Hölder seminorms; only checked when given
    #[serde(default)]
    pub varpi: Option<f64>,
}

impl GluingParams {
    /// Hölder exponent of the seminorm, `Theta - alpha (1 - beta)`.
    pub fn m(&self) -> f64 {
        self.theta - self.alpha * (1.0 - self.beta)
    }

    /// Midpoint of the printed solution box, filled in parameter order.
    pub fn box_midpoint() -> Self {
        Self::from_box_fractions([0.5; 8])
    }

    /// Point of the nested box at fractions `u` in `(0,1)` of each interval,
    /// in the order Theta, beta, sigma0, delta0, nu, l, alpha0, alpha.
    pub fn from_box_fractions(u: [f64; 8]) -> Self {
        let lerp = |lo: f64, hi: f64, s: f64| lo + (hi - lo) * s;
        let theta = lerp(0.0, 0.25, u[0]);
        let beta = lerp(0.25, (1.0 + theta) / 4.0, u[1]);
        let sigma0 = lerp(0.0, (beta - theta) / 2.0, u[2]);
        let delta0 = lerp(0.0, (1.0 - 4.0 * theta) / 4.0, u[3]);
        let nu = lerp(
            1.0 - 2.0 * beta + delta0 + theta,
            (3.0 - 4.0 * beta + 4.0 * delta0 + 4.0 * theta) / 4.0,
            u[4],
        );
        let l = lerp((1.0 - beta + delta0 - nu + theta) / beta, 1.0, u[5]);
        let alpha0 = lerp(
            (1.0 - 2.0 * beta).max(2.0 * nu - 2.0 * delta0 + 2.0 * beta - 1.0 - 2.0 * theta),
            0.5,
            u[6],
        );
        let a_lo = [
            2.0 * theta + 1.0 - 2.0 * beta,
            2.0 * beta - 2.0 * sigma0,
            (beta - sigma0) / (1.0 - beta),
            2.0 * (nu - delta0 + 2.0 * beta - 1.0 - theta) / (2.0 * beta + alpha0 - 1.0),
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
        let alpha = lerp(a_lo, 1.0, u[7]);
        Self { theta, beta, sigma0, delta0, nu, l, alpha, alpha0, varpi: None }
    }

    /// Uniform draw of each nested interval in turn.
    pub fn sample_box<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut u = [0.0; 8];
        for v in u.iter_mut() {
            *v = rng.gen_range(1e-9..1.0 - 1e-9);
        }
        Self::from_box_fractions(u)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violations: Vec<String>,
}

/// Evaluates every strict inequality of the constraint system.
pub fn param_feasible(gp: &GluingParams) -> Feasibility {
    let GluingParams { theta: th, beta: b, sigma0: s0, delta0: d0, nu, l, alpha: a, alpha0: a0, varpi } = *gp;
    let m = gp.m();
    // (label, g) with the constraint g > 0
    let mut rows: Vec<(&str, f64)> = vec![
        ("nu - delta0 - 1/2 > 0", nu - d0 - 0.5),
        ("Theta + beta + delta0 - nu < 0", -(th + b + d0 - nu)),
        ("3 beta < 1 + Theta", 1.0 + th - 3.0 * b),
        ("0 < delta0", d0),
        ("delta0 < beta", b - d0),
        ("beta < 1/2", 0.5 - b),
        ("beta (l+1) - 1 + nu - delta0 - Theta > 0", b * (l + 1.0) - 1.0 + nu - d0 - th),
        ("Theta + 2 beta - 1 < 0", -(th + 2.0 * b - 1.0)),
        ("2 beta + delta0 - nu < 0", -(2.0 * b + d0 - nu)),
        ("0 < Theta", th),
        ("Theta < beta", b - th),
        ("0 < alpha", a),
        ("alpha < 1", 1.0 - a),
        ("Theta + 1/2 - beta - alpha/2 < 0", -(th + 0.5 - b - 0.5 * a)),
        ("0 < sigma0", s0),
        ("beta - sigma0 - alpha/2 < 0", -(b - s0 - 0.5 * a)),
        ("1 - sigma0 - (1+alpha)(1-beta) < 0", -(1.0 - s0 - (1.0 + a) * (1.0 - b))),
        ("Theta + 2 sigma0 - beta < 0", -(th + 2.0 * s0 - b)),
        ("0 < nu", nu),
        ("nu < 1", 1.0 - nu),
        ("0 < l", l),
        ("l < 1", 1.0 - l),
        ("nu + beta l - 1 < 0", -(nu + b * l - 1.0)),
        ("0 < alpha0", a0),
        ("alpha0 < 1/2", 0.5 - a0),
        ("2 beta - 1 + alpha0 > 0", 2.0 * b - 1.0 + a0),
        (
            "1 + Theta - alpha(1-beta) + (1+alpha0) alpha/2 - 2 beta > nu - delta0",
            1.0 + th - a * (1.0 - b) + (1.0 + a0) * a / 2.0 - 2.0 * b - (nu - d0),
        ),
        ("0 < beta", b),
        ("2 Theta < alpha", a - 2.0 * th),
        ("m = Theta - alpha(1-beta) < 0", -m),
    ];
    if let Some(w) = varpi {
        rows.push(("varpi - 1 - 2 Theta < 0", -(w - 1.0 - 2.0 * th)));
        rows.push(("varpi - 1 - 2 m < 0", -(w - 1.0 - 2.0 * m)));
    }
    let violations: Vec<String> = rows.iter().filter(|(_, g)| !(*g > 0.0)).map(|(n, _)| n.to_string()).collect();
    Feasibility { feasible: violations.is_empty(), violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlocal::LinearHistory;

    #[test]
    fn midpoint_values() {
        let g = GluingParams::box_midpoint();
        assert_eq!(g.theta, 0.125);
        assert_eq!(g.beta, 0.265625);
        assert!((g.sigma0 - 0.03515625).abs() < 1e-15);
        assert!((g.delta0 - 0.0625).abs() < 1e-15);
        assert!(param_feasible(&g).feasible);
    }

    #[test]
    fn large_theta_is_infeasible() {
        let g = GluingParams { theta: 0.5, ..GluingParams::box_midpoint() };
        let f = param_feasible(&g);
        assert!(!f.feasible);
        assert!(f.violations.iter().any(|v| v == "Theta < beta"));
    }

    #[test]
    fn nan_is_never_feasible() {
        let g = GluingParams { nu: f64::NAN, ..GluingParams::box_midpoint() };
        assert!(!param_feasible(&g).feasible);
    }

    #[test]
    fn zero_rate_gives_zero() {
        let h = LinearHistory { p0: C64::new(1.0, 0.0), rate: C64::new(0.0, 0.0), t_end: 1.0 };
        assert_eq!(b0_apply(&h, 0.5, 0.1).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn empty_interval_rejected() {
        let h = LinearHistory { p0: C64::new(1.0, 0.0), rate: C64::new(1.0, 0.0), t_end: 1.0 };
        assert!(matches!(b0_apply(&h, 0.01, 0.2), Err(Error::EmptyInterval(..))));
    }

    #[test]
    fn rate_profile_vanishes_at_blowup() {
        let r = RateProfile::new(1e-3, 1.0, 50).unwrap();
        assert_eq!(r.value(1e-3).unwrap(), 0.0);
        assert!(RateProfile::new(0.5, 1.0, 10).is_err());
    }
}
