//! Physicists' Hermite polynomials, Gauss–Hermite rules and the projection of
//! a flow `v(y, ξ)` onto `H_n(ξ/√γ)`.

use serde::{Deserialize, Serialize};

use super::GridFunction;
use crate::error::{Error, Result};

/// `H_n(z)` by the three-term recurrence.
pub fn hermite(n: usize, z: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * z);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * z * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `H_0(z), …, H_n(z)`.
pub fn hermite_all(n: usize, z: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(2.0 * z);
    }
    for k in 1..n {
        out.push(2.0 * z * out[k] - 2.0 * k as f64 * out[k - 1]);
    }
    out
}

/// `∫ e^{-z²} H_n² dz = √π 2ⁿ n!`.
pub fn hermite_norm_sq(n: usize) -> f64 {
    std::f64::consts::PI.sqrt() * (0..n).fold(1.0, |acc, k| acc * 2.0 * (k + 1) as f64)
}

/// `2ⁿ n!`.
pub(crate) fn two_pow_factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * 2.0 * k as f64)
}

/// Gauss–Hermite rule for the weight `e^{-z²}`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Newton iteration on the orthonormal recurrence, seeded with the
    /// classical asymptotic guesses for the largest roots.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "Gauss-Hermite rule needs at least one node".into(),
            ));
        }
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let nf = n as f64;
        let m = n.div_ceil(2);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..100 {
                let (mut p1, mut p2) = (pim4, 0.0);
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numerical(format!(
                    "Gauss-Hermite root {i} of {n} did not converge"
                )));
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        Ok(Self { nodes: x, weights: w })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| w * f(z)).sum()
    }
}

/// `v(y, ξ) = shift + Σ_n a_n(y) H_n(ξ/√γ)`, with `∫₀¹ a_0 = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HermiteSeries {
    pub coeffs: Vec<GridFunction>,
    /// Mean of the zeroth coefficient, removed by the Galilean shift.
    pub shift: f64,
    pub gamma: f64,
}

impl HermiteSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn intervals(&self) -> usize {
        self.coeffs[0].intervals()
    }

    /// Reconstructs `v` at grid node `j` (shift included).
    pub fn synthesize_at_node(&self, j: usize, xi: f64) -> f64 {
        let h = hermite_all(self.order(), xi / self.gamma.sqrt());
        self.shift
            + self
                .coeffs
                .iter()
                .zip(&h)
                .map(|(a, hn)| a.values()[j] * hn)
                .sum::<f64>()
    }

    /// Reconstructs `v` at an arbitrary `y` (shift included).
    pub fn synthesize(&self, y: f64, xi: f64) -> f64 {
        let h = hermite_all(self.order(), xi / self.gamma.sqrt());
        self.shift
            + self
                .coeffs
                .iter()
                .zip(&h)
                .map(|(a, hn)| a.interpolate(y) * hn)
                .sum::<f64>()
    }

    /// Channel average `Σ ā_n H_n(z)` in the shifted frame.
    pub fn channel_mean(&self, z: f64) -> f64 {
        let h = hermite_all(self.order(), z);
        self.coeffs.iter().zip(&h).map(|(a, hn)| a.mean() * hn).sum()
    }
}

/// Default number of Gauss–Hermite nodes used by [`hermite_project`].
pub const DEFAULT_PROJECTION_NODES: usize = 64;

/// Projects `v(y, ξ)` onto Hermite modes `0..=n_h` on a grid of `grid_n`
/// intervals, then applies the Galilean shift that makes `ā_0 = 0`.
pub fn hermite_project(
    v: &dyn Fn(f64, f64) -> f64,
    gamma: f64,
    n_h: usize,
    grid_n: usize,
    nodes: usize,
) -> Result<HermiteSeries> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
    }
    if nodes < 2 * n_h.max(1) {
        return Err(Error::InvalidParameter(format!(
            "{nodes} quadrature nodes cannot resolve Hermite order {n_h}; need at least {}",
            2 * n_h.max(1)
        )));
    }
    let gh = GaussHermite::new(nodes)?;
    let sg = gamma.sqrt();
    let basis: Vec<Vec<f64>> = gh.nodes.iter().map(|&z| hermite_all(n_h, z)).collect();
    let mut rows = vec![vec![0.0; grid_n + 1]; n_h + 1];
    for j in 0..=grid_n {
        let y = if j == grid_n { 1.0 } else { j as f64 / grid_n as f64 };
        for (i, &z) in gh.nodes.iter().enumerate() {
            let fv = gh.weights[i] * v(y, sg * z);
            for (n, row) in rows.iter_mut().enumerate() {
                row[j] += fv * basis[i][n];
            }
        }
    }
    let mut coeffs = rows
        .into_iter()
        .enumerate()
        .map(|(n, row)| {
            let norm = hermite_norm_sq(n);
            GridFunction::from_values(row.into_iter().map(|s| s / norm).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let shift = coeffs[0].mean();
    coeffs[0] = coeffs[0].shift(-shift);
    Ok(HermiteSeries { coeffs, shift, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_polynomials() {
        assert_eq!(hermite(0, 0.3), 1.0);
        assert_eq!(hermite(1, 0.3), 0.6);
        assert!((hermite(3, 0.5) - (8.0 * 0.125 - 12.0 * 0.5)).abs() < 1e-15);
        let all = hermite_all(5, 0.7);
        for (n, v) in all.iter().enumerate() {
            assert_eq!(*v, hermite(n, 0.7));
        }
    }

    #[test]
    fn rule_integrates_moments() {
        let gh = GaussHermite::new(20).unwrap();
        let pi_sqrt = std::f64::consts::PI.sqrt();
        assert!((gh.integrate(|_| 1.0) - pi_sqrt).abs() < 1e-14);
        assert!((gh.integrate(|z| z * z) - pi_sqrt / 2.0).abs() < 1e-14);
        assert!((gh.integrate(|z| z.powi(6)) - 15.0 * pi_sqrt / 8.0).abs() < 1e-13);
        let gh1 = GaussHermite::new(1).unwrap();
        assert_eq!(gh1.nodes, vec![0.0]);
    }

    #[test]
    fn multiplicative_flow_projects_to_first_mode() {
        let gamma = 3.0;
        let s = hermite_project(&|y, xi| y * xi, gamma, 4, 16, 64).unwrap();
        for (j, y) in s.coeffs[1].nodes().enumerate() {
            assert!((s.coeffs[1].values()[j] - gamma.sqrt() / 2.0 * y).abs() < 1e-13);
        }
        for n in [0, 2, 3, 4] {
            assert!(s.coeffs[n].max_abs() < 1e-13);
        }
    }

    #[test]
    fn projection_needs_enough_nodes() {
        assert!(hermite_project(&|_, xi| xi, 1.0, 40, 16, 64).is_err());
    }

    #[test]
    fn shift_removes_mean() {
        let s = hermite_project(&|y, xi| 2.0 + y + xi * xi, 1.0, 3, 16, 32).unwrap();
        assert!(s.coeffs[0].mean().abs() < 1e-14);
        assert!((s.shift - (2.5 + 0.5)).abs() < 1e-13);
        assert!((s.synthesize_at_node(4, 0.7) - (2.25 + 0.49)).abs() < 1e-12);
    }
}
