use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Composite rule used for integrals over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureRule {
    Simpson,
    /// Composite Boole, used whenever the interval count is a multiple of 4.
    Boole,
}

/// Values of a function at `n + 1` equally spaced nodes `y_j = j/n` of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
    rule: QuadratureRule,
}

impl GridFunction {
    pub const MIN_INTERVALS: usize = 8;

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len().saturating_sub(1);
        if n < Self::MIN_INTERVALS || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "need an even number of intervals, at least {}; got {n}",
                Self::MIN_INTERVALS
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid value".into()));
        }
        let rule = if n.is_multiple_of(4) {
            QuadratureRule::Boole
        } else {
            QuadratureRule::Simpson
        };
        Ok(Self { values, rule })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values((0..=n).map(|j| f(node(j, n))).collect())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_fn(n, |_| c)
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.intervals();
        (0..=n).map(move |j| node(j, n))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Quadrature weights (including the step) of the recorded rule.
    pub fn weights(&self) -> Vec<f64> {
        weights(self.intervals(), self.rule)
    }

    pub fn integral(&self) -> f64 {
        self.weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    /// Mean over `[0, 1]`, equal to the integral.
    pub fn mean(&self) -> f64 {
        self.integral()
    }

    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = self.intervals();
        Self {
            values: self.values.iter().enumerate().map(|(j, &v)| f(node(j, n), v)).collect(),
            rule: self.rule,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|_, v| c * v)
    }

    pub fn shift(&self, c: f64) -> Self {
        self.map(|_, v| v + c)
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            rule: self.rule,
        })
    }

    /// Sixth-order accurate `∫₀^{y_j} f` at every node.
    pub fn cumulative_integral(&self) -> Self {
        let st = super::stencil::ExpStencil::new(0.0, self.step());
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for j in 0..self.intervals() {
            acc += st.forward(&self.values, j);
            out.push(acc);
        }
        Self {
            values: out,
            rule: self.rule,
        }
    }

    /// Four-point Lagrange interpolation at an arbitrary `y ∈ [0, 1]`.
    pub fn interpolate(&self, y: f64) -> f64 {
        let n = self.intervals();
        let s = (y.clamp(0.0, 1.0)) * n as f64;
        let j = (s.floor() as usize).min(n - 1);
        let start = j.saturating_sub(1).min(n - 3);
        let u = s - start as f64;
        let mut total = 0.0;
        for k in 0..4 {
            let mut l = 1.0;
            for i in 0..4 {
                if i != k {
                    l *= (u - i as f64) / (k as f64 - i as f64);
                }
            }
            total += l * self.values[start + k];
        }
        total
    }

    pub(crate) fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.values.len() != other.values.len() {
            return Err(Error::InvalidGrid(format!(
                "grid sizes differ: {} vs {}",
                self.intervals(),
                other.intervals()
            )));
        }
        Ok(())
    }
}

pub(crate) fn node(j: usize, n: usize) -> f64 {
    if j == n {
        1.0
    } else {
        j as f64 / n as f64
    }
}

fn weights(n: usize, rule: QuadratureRule) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut w = vec![0.0; n + 1];
    match rule {
        QuadratureRule::Simpson => {
            for k in (0..n).step_by(2) {
                w[k] += h / 3.0;
                w[k + 1] += 4.0 * h / 3.0;
                w[k + 2] += h / 3.0;
            }
        }
        QuadratureRule::Boole => {
            for k in (0..n).step_by(4) {
                let c = 2.0 * h / 45.0;
                w[k] += 7.0 * c;
                w[k + 1] += 32.0 * c;
                w[k + 2] += 12.0 * c;
                w[k + 3] += 32.0 * c;
                w[k + 4] += 7.0 * c;
            }
        }
    }
    w
}
