//! Projection on the Neumann eigenbasis `φ_0 = 1`, `φ_n = √2 cos(nπy)`.

use std::f64::consts::{PI, SQRT_2};

use super::GridFunction;
use crate::error::{Error, Result};

pub fn basis(n: usize, y: f64) -> f64 {
    if n == 0 {
        1.0
    } else {
        SQRT_2 * (n as f64 * PI * y).cos()
    }
}

/// Neumann eigenvalue `(nπ)²`.
pub fn eigenvalue(n: usize) -> f64 {
    let k = n as f64 * PI;
    k * k
}

/// `⟨u, φ_n⟩` for `n = 0..=n_max` using the grid quadrature.
pub fn cosine_project(u: &GridFunction, n_max: usize) -> Result<Vec<f64>> {
    if n_max > u.intervals() / 2 {
        return Err(Error::InvalidParameter(format!(
            "{} grid intervals cannot resolve cosine mode {n_max}",
            u.intervals()
        )));
    }
    let w = u.weights();
    let nodes: Vec<f64> = u.nodes().collect();
    Ok((0..=n_max)
        .map(|n| {
            nodes
                .iter()
                .zip(&w)
                .zip(u.values())
                .map(|((&y, &wj), &v)| wj * v * basis(n, y))
                .sum()
        })
        .collect())
}
