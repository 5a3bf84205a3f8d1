//! Banded solvers: scalar and 3x3-block tridiagonal systems.

use crate::error::{Error, Result};

/// Solves a tridiagonal system with sub-diagonal `lo` (`lo[0]` unused),
/// diagonal `di` and super-diagonal `up` (`up[n-1]` unused).
pub fn solve_tridiagonal<T>(lo: &[T], di: &[T], up: &[T], rhs: &[T]) -> Result<Vec<T>>
where
    T: Copy
        + std::ops::Sub<Output = T>
        + std::ops::Mul<Output = T>
        + std::ops::Div<Output = T>
        + PartialEq
        + Default,
{
    let n = di.len();
    let mut c = vec![T::default(); n];
    let mut d = vec![T::default(); n];
    let zero = T::default();
    if di[0] == zero {
        return Err(Error::Degenerate("zero pivot in tridiagonal solve".into()));
    }
    c[0] = if n > 1 { up[0] / di[0] } else { zero };
    d[0] = rhs[0] / di[0];
    for i in 1..n {
        let m = di[i] - lo[i] * c[i - 1];
        if m == zero {
            return Err(Error::Degenerate("zero pivot in tridiagonal solve".into()));
        }
        if i < n - 1 {
            c[i] = up[i] / m;
        }
        d[i] = (rhs[i] - lo[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] = x[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

pub type Mat3 = [[f64; 3]; 3];

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn mat3_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub fn mat3_inv(a: &Mat3) -> Result<Mat3> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-300 || !det.is_finite() {
        return Err(Error::Degenerate("singular 3x3 block".into()));
    }
    let inv = 1.0 / det;
    Ok([
        [
            (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * inv,
            (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv,
            (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv,
        ],
        [
            (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * inv,
            (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv,
            (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv,
        ],
        [
            (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * inv,
            (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv,
            (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv,
        ],
    ])
}

/// Block-tridiagonal solve with 3x3 blocks (block Thomas algorithm).
pub fn solve_block_tridiagonal(lo: &[Mat3], di: &[Mat3], up: &[Mat3], rhs: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let n = di.len();
    let mut dp = di.to_vec();
    let mut rp = rhs.to_vec();
    for i in 1..n {
        let m = mat3_mul(&lo[i], &mat3_inv(&dp[i - 1])?);
        let mu = mat3_mul(&m, &up[i - 1]);
        let mr = mat3_vec(&m, &rp[i - 1]);
        for r in 0..3 {
            for c in 0..3 {
                dp[i][r][c] -= mu[r][c];
            }
            rp[i][r] -= mr[r];
        }
    }
    let mut x = vec![[0.0; 3]; n];
    x[n - 1] = mat3_vec(&mat3_inv(&dp[n - 1])?, &rp[n - 1]);
    for i in (0..n - 1).rev() {
        let ux = mat3_vec(&up[i], &x[i + 1]);
        let r = [rp[i][0] - ux[0], rp[i][1] - ux[1], rp[i][2] - ux[2]];
        x[i] = mat3_vec(&mat3_inv(&dp[i])?, &r);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense() {
        let lo = [0.0, 1.0, -0.5, 0.3];
        let di = [4.0, 5.0, 3.0, 2.0];
        let up = [1.0, 0.2, 0.7, 0.0];
        let x: [f64; 4] = [1.0, -2.0, 0.5, 3.0];
        let mut b = [0.0; 4];
        for i in 0..4 {
            b[i] = di[i] * x[i] + if i > 0 { lo[i] * x[i - 1] } else { 0.0 } + if i < 3 { up[i] * x[i + 1] } else { 0.0 };
        }
        let s = solve_tridiagonal(&lo, &di, &up, &b).unwrap();
        for i in 0..4 {
            assert!((s[i] - x[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn block_solve_recovers_solution() {
        let n = 5;
        let blk = |s: f64| [[4.0 + s, 0.1, 0.0], [0.2, 5.0, -0.3], [0.0, 0.4, 3.0 - s]];
        let off = [[0.5, 0.1, 0.0], [0.0, -0.2, 0.1], [0.3, 0.0, 0.4]];
        let di: Vec<Mat3> = (0..n).map(|i| blk(i as f64 * 0.1)).collect();
        let lo = vec![off; n];
        let up = vec![off; n];
        let x: Vec<[f64; 3]> = (0..n).map(|i| [i as f64, 1.0, -(i as f64)]).collect();
        let mut b = vec![[0.0; 3]; n];
        for i in 0..n {
            let mut r = mat3_vec(&di[i], &x[i]);
            if i > 0 {
                let l = mat3_vec(&lo[i], &x[i - 1]);
                r = [r[0] + l[0], r[1] + l[1], r[2] + l[2]];
            }
            if i < n - 1 {
                let u = mat3_vec(&up[i], &x[i + 1]);
                r = [r[0] + u[0], r[1] + u[1], r[2] + u[2]];
            }
            b[i] = r;
        }
        let s = solve_block_tridiagonal(&lo, &di, &up, &b).unwrap();
        for i in 0..n {
            for c in 0..3 {
                assert!((s[i][c] - x[i][c]).abs() < 1e-12);
            }
        }
    }
}
