//! Radial grids and finite-difference stencils on non-uniform nodes.

use crate::error::{Error, Result};
use crate::vec3::Linear;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spacing {
    Uniform,
    Graded,
}

/// Strictly increasing positive nodes on `(0, R]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    spacing: Spacing,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if nodes.is_empty() || !(nodes[0] > 0.0) {
            return Err(Error::InvalidParam("radial grid must start above 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParam("radial grid must be strictly increasing".into()));
        }
        Ok(Self { nodes, spacing })
    }

    pub fn uniform(rho_min: f64, rho_max: f64, n: usize) -> Result<Self> {
        check_range(rho_min, rho_max, n)?;
        let h = (rho_max - rho_min) / (n - 1) as f64;
        Self::from_nodes((0..n).map(|i| rho_min + h * i as f64).collect(), Spacing::Uniform)
    }

    /// Geometrically stretched nodes, uniform in `ln rho`.
    pub fn geometric(rho_min: f64, rho_max: f64, n: usize) -> Result<Self> {
        check_range(rho_min, rho_max, n)?;
        let (l0, l1) = (rho_min.ln(), rho_max.ln());
        let h = (l1 - l0) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| (l0 + h * i as f64).exp()).collect();
        nodes[0] = rho_min;
        nodes[n - 1] = rho_max;
        Self::from_nodes(nodes, Spacing::Graded)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn spacing(&self) -> Spacing {
        self.spacing
    }
    pub fn rho_min(&self) -> f64 {
        self.nodes[0]
    }
    pub fn rho_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
    /// Largest gap between consecutive nodes.
    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
    /// Largest relative gap `(rho_{i+1} - rho_i)/rho_i`, the natural step on graded grids.
    pub fn max_log_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| (w[1] - w[0]) / w[0]).fold(0.0, f64::max)
    }
}

fn check_range(rho_min: f64, rho_max: f64, n: usize) -> Result<()> {
    if !(rho_min > 0.0 && rho_max > rho_min) || n < 2 {
        return Err(Error::InvalidParam(format!(
            "bad grid range [{rho_min}, {rho_max}] with {n} nodes"
        )));
    }
    Ok(())
}

/// Fornberg's finite-difference weights at `z` for derivatives `0..=m`
/// using the stencil `x`. Row `d` holds the weights of the `d`-th derivative.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivatives of nodal values: three-point centered
/// stencils inside, four-point one-sided stencils on the two end rows.
pub fn derivatives<T: Linear>(x: &[f64], f: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let n = x.len();
    if n < 4 || f.len() != n {
        return Err(Error::GridTooCoarse(format!("need at least 4 nodes, got {n}")));
    }
    let mut d1 = vec![T::zero(); n];
    let mut d2 = vec![T::zero(); n];
    let apply = |w: &[f64], idx: &[usize]| -> T {
        idx.iter().zip(w).fold(T::zero(), |s, (&j, &c)| s + f[j] * c)
    };
    for i in 0..n {
        let idx: Vec<usize> = if i == 0 {
            vec![0, 1, 2, 3]
        } else if i == n - 1 {
            vec![n - 4, n - 3, n - 2, n - 1]
        } else {
            vec![i - 1, i, i + 1]
        };
        let xs: Vec<f64> = idx.iter().map(|&j| x[j]).collect();
        let w = fd_weights(x[i], &xs, 2);
        d1[i] = apply(&w[1], &idx);
        d2[i] = apply(&w[2], &idx);
    }
    Ok((d1, d2))
}

/// Periodic centered first and second differences on a uniform angular grid.
pub fn periodic_derivatives<T: Linear>(f: &[T], h: f64) -> (Vec<T>, Vec<T>) {
    let n = f.len();
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for j in 0..n {
        let fm = f[(j + n - 1) % n];
        let fp = f[(j + 1) % n];
        d1.push((fp - fm) * (0.5 / h));
        d2.push((fp + fm - f[j] * 2.0) * (1.0 / (h * h)));
    }
    (d1, d2)
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
