use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("vector is not tangent: |v.U| = {dot:.3e} exceeds {tol:.1e} * |v|")]
    NotTangent { dot: f64, tol: f64 },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("bubble centers too close: separation {sep:.3e} < {min:.3e}")]
    CentersTooClose { sep: f64, min: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("potential of mode {0} has a pole at rho = 0")]
    Pole(i32),
    #[error("quadrature did not converge: error estimate {err:.3e} after {evals} evaluations")]
    Quadrature { err: f64, evals: usize },
    #[error("parameter history covers [{lo}, {hi}] but [{want_lo}, {want_hi}] was requested")]
    HistoryRange { lo: f64, hi: f64, want_lo: f64, want_hi: f64 },
    #[error("empty integration interval [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error("iteration did not converge after {0} steps")]
    NoConvergence(usize),
    #[error("stability bound violated: dt = {dt:.3e} exceeds {max:.3e}")]
    Unstable { dt: f64, max: f64 },
    #[error("solution under-resolved at t = {t:.6e}: {reason}")]
    Underresolved { t: f64, reason: String },
    #[error("mesh too coarse near the origin: first node {first:.3e} > lambda/10 = {limit:.3e}")]
    NeedsRefinement { first: f64, limit: f64 },
    #[error("ODE integration failed: {0}")]
    Ode(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
