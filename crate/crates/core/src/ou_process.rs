//! Stationary Ornstein–Uhlenbeck switching signal and its running integral.
//!
//! In the nondimensional scaling the process obeys `dξ = -γ ξ dt + γ dB`
//! with stationary law `N(0, γ/2)`, so that `γ → ∞` recovers white noise of
//! unit intensity.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::derive_seed;

/// A sampled path on a time grid.
///
/// `values` is `None` for white-noise paths, where only the integral is
/// meaningful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuPath {
    pub times: Vec<f64>,
    pub values: Option<Vec<f64>>,
    pub integral: Vec<f64>,
    /// `None` in white-noise mode.
    pub gamma: Option<f64>,
}

impl OuPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn values(&self) -> Result<&[f64]> {
        self.values.as_deref().ok_or(Error::ValuesUnavailable)
    }

    /// Common step if the grid is uniform to within round-off.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let dt = (self.t_end() - self.times[0]) / (self.times.len() - 1) as f64;
        let tol = 1e-9 * dt.max(f64::MIN_POSITIVE);
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= tol)
            .then_some(dt)
    }

    /// Running integral at an arbitrary time, linearly interpolated.
    pub fn integral_at(&self, t: f64) -> Result<f64> {
        interpolate(&self.times, &self.integral, t)
    }

    /// Signal value at an arbitrary time, linearly interpolated.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        interpolate(&self.times, self.values()?, t)
    }
}

fn interpolate(times: &[f64], ys: &[f64], t: f64) -> Result<f64> {
    let (first, last) = match (times.first(), times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InvalidGrid("empty path".into())),
    };
    if !(first..=last).contains(&t) {
        return Err(Error::OutOfDomain {
            value: t,
            domain: "path time range",
        });
    }
    let k = times.partition_point(|&s| s <= t);
    if k == times.len() {
        return Ok(ys[k - 1]);
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let w = (t - t0) / (t1 - t0);
    Ok(ys[k - 1] * (1.0 - w) + ys[k] * w)
}

/// `n + 1` equally spaced times on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, n: usize) -> Result<Vec<f64>> {
    ensure(t_end > 0.0 && t_end.is_finite(), || {
        format!("t_end = {t_end} must be positive")
    })?;
    ensure(n >= 1, || "grid needs at least one step".into())?;
    let dt = t_end / n as f64;
    Ok((0..=n).map(|i| if i == n { t_end } else { i as f64 * dt }).collect())
}

/// Uniform grid with step `dt` covering `[0, t_end]`.
pub fn grid_with_step(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    ensure(dt > 0.0, || format!("dt = {dt} must be positive"))?;
    let n = (t_end / dt).round().max(1.0) as usize;
    uniform_grid(t_end, n)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidGrid("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("non-finite time".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid("time grid is not monotone".into()));
    }
    Ok(())
}

/// Samples a stationary OU path on `times` using the exact transition law.
pub fn sample_ou_path(gamma: f64, times: &[f64], seed: u64) -> Result<OuPath> {
    ensure(gamma > 0.0 && gamma.is_finite(), || {
        format!("gamma = {gamma} must be positive")
    })?;
    check_times(times)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stationary_sd = (0.5 * gamma).sqrt();
    let mut values = Vec::with_capacity(times.len());
    let mut xi = stationary_sd * rng.sample::<f64, _>(StandardNormal);
    values.push(xi);
    let mut cached: Option<(f64, f64, f64)> = None;
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let (decay, sd) = match cached {
            Some((d, decay, sd)) if d == dt => (decay, sd),
            _ => {
                let decay = (-gamma * dt).exp();
                let sd = (-0.5 * gamma * (-2.0 * gamma * dt).exp_m1()).sqrt();
                cached = Some((dt, decay, sd));
                (decay, sd)
            }
        };
        xi = xi * decay + sd * rng.sample::<f64, _>(StandardNormal);
        values.push(xi);
    }
    let integral = trapezoid_cumulative(times, &values);
    Ok(OuPath {
        times: times.to_vec(),
        values: Some(values),
        integral,
        gamma: Some(gamma),
    })
}

/// Independent realizations; realization `i` uses seed `derive_seed(seed, i)`.
pub fn sample_ou_ensemble(gamma: f64, times: &[f64], seed: u64, count: usize) -> Result<Vec<OuPath>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_ou_path(gamma, times, derive_seed(seed, i)))
        .collect()
}

/// White-noise limit: the integral is `scale * B(t)` and no signal values exist.
pub fn sample_white_path(scale: f64, times: &[f64], seed: u64) -> Result<OuPath> {
    ensure(scale.is_finite(), || "scale must be finite".into())?;
    check_times(times)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut integral = Vec::with_capacity(times.len());
    let mut b = 0.0;
    integral.push(0.0);
    for w in times.windows(2) {
        b += (w[1] - w[0]).sqrt() * rng.sample::<f64, _>(StandardNormal);
        integral.push(scale * b);
    }
    Ok(OuPath {
        times: times.to_vec(),
        values: None,
        integral,
        gamma: None,
    })
}

/// Recomputes the running integral of the signal by the trapezoid rule.
pub fn integrate_path(path: &OuPath) -> Result<Vec<f64>> {
    Ok(trapezoid_cumulative(&path.times, path.values()?))
}

fn trapezoid_cumulative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..values.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        out.push(acc);
    }
    out
}

/// `Var ∫₀ᵗ ξ = t + (e^{-γt} - 1)/γ` for the stationary process.
pub fn integral_variance(gamma: f64, t: f64) -> f64 {
    if gamma * t < 1e-4 {
        // Series keeps precision when the two terms nearly cancel.
        let x = gamma * t;
        return t * x * (0.5 - x / 6.0 + x * x / 24.0);
    }
    t + (-gamma * t).exp_m1() / gamma
}
