//! Inverse of `λ - d²/dy²` on `[0, 1]`.
//!
//! For `λ > 0` the Green's function is summed by the method of images and
//! applied with exponentially weighted running sums, which never forms
//! `cosh` or `sinh` of large arguments and stays accurate for any `λ`.
//! For `λ = 0` the operator is `-d²/dy²` on mean-free data.

use serde::{Deserialize, Serialize};

use super::stencil::ExpStencil;
use super::GridFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    /// Homogeneous Neumann at both walls.
    NoFlux,
    Periodic,
}

/// Relative size of the mean below which data count as mean-free at `λ = 0`.
pub const SOLVABILITY_TOLERANCE: f64 = 1e-9;

/// Solves `(λ - ∂²_y) b = a` with the given boundary condition.
pub fn helmholtz_inverse(a: &GridFunction, lambda: f64, bc: BoundaryCondition) -> Result<GridFunction> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must be finite and non-negative"
        )));
    }
    if lambda == 0.0 {
        return laplace_inverse(a, bc);
    }
    let n = a.intervals();
    let h = a.step();
    let k = lambda.sqrt();
    let st = ExpStencil::new(k * h, h);
    let decay = (-k * h).exp();
    let v = a.values();

    let fwd: Vec<f64> = (0..n).map(|j| st.forward(v, j)).collect();
    let bwd: Vec<f64> = (0..n).map(|j| st.backward(v, j)).collect();

    // p[j] = ∫₀^{y_j} a e^{-k(y_j - s)},  q[j] = ∫_{y_j}^1 a e^{-k(s - y_j)}
    let mut p = vec![0.0; n + 1];
    for j in 0..n {
        p[j + 1] = decay * p[j] + fwd[j];
    }
    let mut q = vec![0.0; n + 1];
    for j in (0..n).rev() {
        q[j] = decay * q[j + 1] + bwd[j];
    }
    // r[j] = ∫₀^{y_j} a e^{-k s},  s_[j] = ∫_{y_j}^1 a e^{-k(1 - s)}
    let mut r = vec![0.0; n + 1];
    for j in 0..n {
        r[j + 1] = r[j] + (-k * node(j, n)).exp() * bwd[j];
    }
    let mut s_ = vec![0.0; n + 1];
    for j in (0..n).rev() {
        s_[j] = s_[j + 1] + (-k * (1.0 - node(j + 1, n))).exp() * fwd[j];
    }

    let e = |x: f64| (-k * x).exp();
    let out: Vec<f64> = match bc {
        BoundaryCondition::NoFlux => {
            let denom = -2.0 * k * (-2.0 * k).exp_m1();
            (0..=n)
                .map(|j| {
                    let y = node(j, n);
                    (p[j] + q[j] + e(y) * q[0] + e(1.0 - y) * p[n] + e(2.0 - y) * r[j] + e(1.0 + y) * s_[j]) / denom
                })
                .collect()
        }
        BoundaryCondition::Periodic => {
            let denom = -2.0 * k * (-k).exp_m1();
            (0..=n)
                .map(|j| {
                    let y = node(j, n);
                    (p[j] + q[j] + e(1.0 - y) * r[j] + e(y) * s_[j]) / denom
                })
                .collect()
        }
    };
    GridFunction::from_values(out)
}

fn node(j: usize, n: usize) -> f64 {
    if j == n {
        1.0
    } else {
        j as f64 / n as f64
    }
}

fn laplace_inverse(a: &GridFunction, bc: BoundaryCondition) -> Result<GridFunction> {
    let mean = a.mean();
    if mean.abs() > SOLVABILITY_TOLERANCE * a.max_abs().max(1e-300) {
        return Err(Error::Solvability { mean });
    }
    // Remove the quadrature-level residual mean so the flux condition holds.
    let a0 = a.shift(-mean);
    let a2 = a0.cumulative_integral().cumulative_integral();
    let total = *a2.values().last().unwrap();
    Ok(match bc {
        BoundaryCondition::NoFlux => a2.scale(-1.0),
        BoundaryCondition::Periodic => a2.map(|y, v| -v + y * total + total),
    })
}
