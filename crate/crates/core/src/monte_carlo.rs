//! Particle simulations of the advection–diffusion equation in the channel
//! and the analytic wind-model field they are compared against.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eff_diffusivity::EigenData;
use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::invariant_measure::SpectralCutoff;
use crate::ou_process::OuPath;
use crate::rng::{derive_seed, substream};
use crate::spectral::helmholtz::BoundaryCondition;

/// Particles per independently seeded chunk.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub n_particles: usize,
    pub n_realizations: usize,
    pub seed: u64,
    pub bc: BoundaryCondition,
    pub pe: f64,
    /// Moments are recorded every this many steps (and at the end).
    pub record_every: usize,
    /// Cross-channel bins for the y-resolved moments.
    pub y_bins: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            n_particles: 10_000,
            n_realizations: 1,
            seed: 0,
            bc: BoundaryCondition::NoFlux,
            pe: 1.0,
            record_every: 100,
            y_bins: 20,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if self.n_particles == 0 || self.n_realizations == 0 || self.record_every == 0 || self.y_bins == 0 {
            return Err(Error::InvalidParameter("counts must be at least 1".into()));
        }
        if !(self.pe >= 0.0 && self.pe.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Pe = {} must be non-negative",
                self.pe
            )));
        }
        Ok(())
    }
}

/// Initial scalar distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// `δ(x)`, uniform across the channel.
    DeltaLine,
    /// `e^{-x²/(2s)}/√(2πs)`, uniform across the channel.
    Gaussian { variance: f64 },
    /// `2 Re(A e^{iax})` with a complex Gaussian amplitude.
    RandomWave { wavenumber: f64 },
    /// White-noise spectral data `∫ |h|^{α/2} φ̂₀(h) e^{ihx} dB(h)`.
    Spectral { alpha: f64, cutoff: SpectralCutoff },
}

impl InitialData {
    pub fn mass(&self) -> Option<f64> {
        match self {
            InitialData::DeltaLine | InitialData::Gaussian { .. } => Some(1.0),
            _ => None,
        }
    }

    /// Pointwise value `T₀(x, y)` for data that have one.
    pub fn eval(&self, x: f64, _y: f64) -> Result<f64> {
        match *self {
            InitialData::Gaussian { variance } => {
                Ok((-x * x / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt())
            }
            _ => Err(Error::Unsupported(format!(
                "{self:?} has no pointwise representation for backward sampling"
            ))),
        }
    }

    fn sample_x(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        match *self {
            InitialData::DeltaLine => Ok(0.0),
            InitialData::Gaussian { variance } => Ok(variance.sqrt() * rng.sample::<f64, _>(StandardNormal)),
            _ => Err(Error::Unsupported(format!(
                "{self:?} cannot be represented by particles"
            ))),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            InitialData::Gaussian { variance } if !(variance > 0.0) => Err(Error::InvalidParameter(format!(
                "initial variance {variance} must be positive"
            ))),
            _ => Ok(()),
        }
    }
}

/// Moments of the particles with `y` in one cross-channel bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YBin {
    pub y_center: f64,
    pub count: usize,
    pub mean_x: f64,
    pub mean_x2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardResult {
    pub times: Vec<f64>,
    /// `T̄₁(t)`: mean particle position.
    pub mean: Vec<f64>,
    /// `T̄₂(t)`: mean squared position.
    pub second: Vec<f64>,
    pub variance: Vec<f64>,
    /// Final `(x, y)` of every particle.
    pub positions: Vec<(f64, f64)>,
    pub y_profile: Vec<YBin>,
    /// Largest Neumann mode with `dt n²π² ≤ 1`; moment structure above it is
    /// not resolved by the time step.
    pub max_resolved_mode: usize,
}

impl ForwardResult {
    /// `Var(x)/(2t)` at the final time.
    pub fn kappa_estimate(&self) -> f64 {
        let i = self.times.len() - 1;
        self.variance[i] / (2.0 * self.times[i])
    }
}

#[inline]
pub(crate) fn fold(y: f64, bc: BoundaryCondition) -> f64 {
    match bc {
        BoundaryCondition::Periodic => y.rem_euclid(1.0),
        BoundaryCondition::NoFlux => {
            let mut y = y;
            loop {
                if y < 0.0 {
                    y = -y;
                } else if y > 1.0 {
                    y = 2.0 - y;
                } else {
                    return y;
                }
            }
        }
    }
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    let n = (t / dt).round();
    if (n * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(Error::InvalidParameter(format!(
            "t = {t} is not a multiple of dt = {dt}"
        )));
    }
    Ok(n as usize)
}

/// Midpoint signal values on each step, checked against the step size.
fn midpoint_signal(flow: &FlowSpec, path: Option<&OuPath>, n_steps: usize, dt: f64) -> Result<Vec<f64>> {
    if !flow.needs_signal() {
        return Ok(vec![0.0; n_steps]);
    }
    let path = path.ok_or_else(|| Error::InvalidParameter("this flow needs a signal path".into()))?;
    let xi = path.values()?;
    let step = path
        .uniform_step()
        .ok_or_else(|| Error::InvalidGrid("signal path must be on a uniform grid".into()))?;
    if (step - dt).abs() > 1e-9 * dt {
        return Err(Error::InvalidGrid(format!("path step {step} differs from dt = {dt}")));
    }
    if path.times[0] != 0.0 || path.times.len() < n_steps + 1 {
        return Err(Error::InvalidGrid(format!(
            "path covers [{}, {}] but [0, {}] is needed",
            path.times[0],
            path.t_end(),
            n_steps as f64 * dt
        )));
    }
    Ok((0..n_steps).map(|k| 0.5 * (xi[k] + xi[k + 1])).collect())
}

struct ChunkSums {
    s1: Vec<f64>,
    s2: Vec<f64>,
    positions: Vec<(f64, f64)>,
}

fn pairwise_merge(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Forward particle simulation for one realization of the signal.
///
/// `dX = Pe v(Y, ξ) dt + √2 dW_x`, `dY = √2 dW_y`, Euler–Maruyama with the
/// signal averaged over each step and reflection by folding.
pub fn simulate_forward(
    flow: &FlowSpec,
    init: &InitialData,
    t_end: f64,
    cfg: &SimConfig,
    path: Option<&OuPath>,
) -> Result<ForwardResult> {
    simulate_realization(flow, init, t_end, cfg, path, 0)
}

fn simulate_realization(
    flow: &FlowSpec,
    init: &InitialData,
    t_end: f64,
    cfg: &SimConfig,
    path: Option<&OuPath>,
    realization: u64,
) -> Result<ForwardResult> {
    cfg.validate()?;
    init.validate()?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("t_end = {t_end} must be positive")));
    }
    let n_steps = step_count(t_end, cfg.dt)?;
    let xi_mid = midpoint_signal(flow, path, n_steps, cfg.dt)?;
    let record_steps: Vec<usize> = (0..=n_steps)
        .filter(|k| k % cfg.record_every == 0 || *k == n_steps)
        .collect();
    let n_rec = record_steps.len();
    let dt = cfg.dt;
    let sd = (2.0 * dt).sqrt();
    let drift = cfg.pe * dt;
    let bc = flow.bc;

    let n_chunks = cfg.n_particles.div_ceil(CHUNK);
    let chunks: Vec<Result<ChunkSums>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(cfg.seed, realization, c as u64);
            let count = CHUNK.min(cfg.n_particles - c * CHUNK);
            let mut sums = ChunkSums {
                s1: vec![0.0; n_rec],
                s2: vec![0.0; n_rec],
                positions: Vec::with_capacity(count),
            };
            for _ in 0..count {
                let mut x = init.sample_x(&mut rng)?;
                let mut y: f64 = rng.gen();
                let mut r = 0;
                for (k, &xi) in xi_mid.iter().enumerate() {
                    if record_steps[r] == k {
                        sums.s1[r] += x;
                        sums.s2[r] += x * x;
                        r += 1;
                    }
                    let v = flow.velocity(y, xi);
                    let (nx, ny): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                    x += drift * v + sd * nx;
                    y = fold(y + sd * ny, bc);
                }
                sums.s1[r] += x;
                sums.s2[r] += x * x;
                if !(0.0..=1.0).contains(&y) {
                    return Err(Error::Numerical(format!("particle left the channel: y = {y}")));
                }
                sums.positions.push((x, y));
            }
            Ok(sums)
        })
        .collect();
    let chunks = chunks.into_iter().collect::<Result<Vec<_>>>()?;

    let n = cfg.n_particles as f64;
    let mut s1_parts = Vec::with_capacity(chunks.len());
    let mut s2_parts = Vec::with_capacity(chunks.len());
    let mut positions = Vec::with_capacity(cfg.n_particles);
    for ch in chunks {
        s1_parts.push(ch.s1);
        s2_parts.push(ch.s2);
        positions.extend(ch.positions);
    }
    let mean: Vec<f64> = pairwise_merge(s1_parts).into_iter().map(|s| s / n).collect();
    let second: Vec<f64> = pairwise_merge(s2_parts).into_iter().map(|s| s / n).collect();
    let variance = mean.iter().zip(&second).map(|(m, s)| (s - m * m).max(0.0)).collect();
    let times = record_steps.iter().map(|&k| k as f64 * dt).collect();

    let mut bins = vec![(0usize, 0.0, 0.0); cfg.y_bins];
    for &(x, y) in &positions {
        let b = ((y * cfg.y_bins as f64) as usize).min(cfg.y_bins - 1);
        bins[b].0 += 1;
        bins[b].1 += x;
        bins[b].2 += x * x;
    }
    let y_profile = bins
        .into_iter()
        .enumerate()
        .map(|(b, (count, sx, sxx))| {
            let c = count.max(1) as f64;
            YBin {
                y_center: (b as f64 + 0.5) / cfg.y_bins as f64,
                count,
                mean_x: sx / c,
                mean_x2: sxx / c,
            }
        })
        .collect();

    Ok(ForwardResult {
        times,
        mean,
        second,
        variance,
        positions,
        y_profile,
        max_resolved_mode: (1.0 / (std::f64::consts::PI * dt.sqrt())).floor() as usize,
    })
}

/// Independent realizations; realization `r` uses signal path `paths[r]`
/// and particle streams derived from `(seed, r)`.
pub fn simulate_forward_ensemble(
    flow: &FlowSpec,
    init: &InitialData,
    t_end: f64,
    cfg: &SimConfig,
    paths: &[OuPath],
) -> Result<Vec<ForwardResult>> {
    if flow.needs_signal() && paths.len() < cfg.n_realizations {
        return Err(Error::InvalidParameter(format!(
            "{} realizations requested but {} paths supplied",
            cfg.n_realizations,
            paths.len()
        )));
    }
    (0..cfg.n_realizations)
        .map(|r| simulate_realization(flow, init, t_end, cfg, paths.get(r), r as u64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackwardEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// `T(x, y, t)` for one realization of the signal, by averaging the initial
/// data over backward characteristics
/// `dX = -Pe v(Y, ξ(t - s)) ds + √2 dW_x`, `dY = √2 dW_y`.
///
/// All samples share the same signal path. `cfg.n_particles` sets the
/// sample count.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_point_backward(
    flow: &FlowSpec,
    path: Option<&OuPath>,
    x: f64,
    y: f64,
    t: f64,
    init: &InitialData,
    cfg: &SimConfig,
) -> Result<BackwardEstimate> {
    cfg.validate()?;
    init.validate()?;
    if cfg.n_particles < 2 {
        return Err(Error::InsufficientSamples {
            got: cfg.n_particles,
            required: 2,
        });
    }
    if t == 0.0 {
        return Ok(BackwardEstimate {
            value: init.eval(x, y)?,
            std_error: 0.0,
            n_samples: cfg.n_particles,
        });
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be non-negative")));
    }
    let n_steps = step_count(t, cfg.dt)?;
    let xi_mid = midpoint_signal(flow, path, n_steps, cfg.dt)?;
    let sd = (2.0 * cfg.dt).sqrt();
    let drift = cfg.pe * cfg.dt;
    let bc = flow.bc;
    let stream = derive_seed(cfg.seed, 0x6261_636b);

    let n_chunks = cfg.n_particles.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<f64>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(stream, 0, c as u64);
            let count = CHUNK.min(cfg.n_particles - c * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let (mut px, mut py) = (x, y);
                for &xi in xi_mid.iter().rev() {
                    let v = flow.velocity(py, xi);
                    let (nx, ny): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                    px += -drift * v + sd * nx;
                    py = fold(py + sd * ny, bc);
                }
                let val = init.eval(px, py)?;
                s1 += val;
                s2 += val * val;
            }
            Ok(vec![s1, s2])
        })
        .collect();
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let s = pairwise_merge(parts);
    let n = cfg.n_particles as f64;
    let mean = s[0] / n;
    let var = ((s[1] / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(BackwardEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        n_samples: cfg.n_particles,
    })
}

/// Data for the wind-model field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WindInit {
    /// Integrable data of the given mass, in the long-time Gaussian form.
    Mass { mass: f64 },
    /// Gaussian data of variance `s`, exact.
    Gaussian { variance: f64 },
}

/// Wind-model solution: a Gaussian of diffusivity `κ_eff` carried by the
/// random drift `Pe ū I(t)`.
pub fn wind_model_solution(x: f64, t: f64, path: &OuPath, eigen: &EigenData, ubar: f64, init: WindInit) -> Result<f64> {
    if !(eigen.kappa_eff > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa_eff = {} must be positive",
            eigen.kappa_eff
        )));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    let centre = eigen.pe * ubar * path.integral_at(t)?;
    let d = x - centre;
    let k = eigen.kappa_eff;
    Ok(match init {
        WindInit::Mass { mass } => mass * (-d * d / (4.0 * k * t)).exp() / (4.0 * std::f64::consts::PI * k * t).sqrt(),
        WindInit::Gaussian { variance } => {
            let v = variance + 2.0 * k * t;
            (-d * d / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
        }
    })
}

/// Variance of each of `Re A` and `Im A` for random-wave data. With this
/// normalization the rescaled field `2 Re(A) cos η` has variance 1/2 and
/// follows [`crate::invariant_measure::pdf_random_wave`].
pub const AMPLITUDE_PART_VARIANCE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomWaveSamples {
    pub samples: Vec<f64>,
    /// Set when `a² t > 0.1`, outside the small-wavenumber regime.
    pub regime_warning: bool,
}

/// Rescaled random-wave field `2 Re(A) cos(a x + a Pe ū I(t))`, one sample
/// per entry of `integrals` with a fresh amplitude each.
pub fn simulate_random_wave(
    a: f64,
    pe: f64,
    ubar: f64,
    x: f64,
    t: f64,
    integrals: &[f64],
    seed: u64,
) -> Result<RandomWaveSamples> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("wavenumber {a} must be positive")));
    }
    let sd = AMPLITUDE_PART_VARIANCE.sqrt();
    let samples = integrals
        .par_iter()
        .enumerate()
        .map(|(i, &int)| {
            let mut rng = crate::rng::stream(seed, i as u64);
            let re: f64 = sd * rng.sample::<f64, _>(StandardNormal);
            2.0 * re * (a * x + a * pe * ubar * int).cos()
        })
        .collect();
    Ok(RandomWaveSamples {
        samples,
        regime_warning: a * a * t > 0.1,
    })
}

/// Long-time limit of [`simulate_random_wave`]: the phase is uniform on
/// `[0, 2π)`.
pub fn sample_random_wave_limit(n: usize, seed: u64) -> Vec<f64> {
    let sd = AMPLITUDE_PART_VARIANCE.sqrt();
    let n_chunks = n.div_ceil(CHUNK * 16);
    (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = crate::rng::stream(seed, c as u64);
            let count = (CHUNK * 16).min(n - c * CHUNK * 16);
            (0..count)
                .map(|_| {
                    let re: f64 = sd * rng.sample::<f64, _>(StandardNormal);
                    let eta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
                    2.0 * re * eta.cos()
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Histogram, empirical CDF and sample moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfEstimate {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub sorted: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Flatness `⟨(x - m)⁴⟩ / σ⁴`.
    pub kurtosis: f64,
}

pub const MIN_PDF_SAMPLES: usize = 1000;

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn ensemble_pdf(samples: &[f64], bins: usize) -> Result<PdfEstimate> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples {
            got: 0,
            required: MIN_PDF_SAMPLES,
        });
    }
    if samples.len() < MIN_PDF_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            required: MIN_PDF_SAMPLES,
        });
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be at least 1".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let n = samples.len() as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = pairwise_sum(&sorted) / n;
    let dev: Vec<f64> = sorted.iter().map(|v| v - mean).collect();
    let m2 = pairwise_sum(&dev.iter().map(|d| d * d).collect::<Vec<_>>()) / n;
    let m3 = pairwise_sum(&dev.iter().map(|d| d * d * d).collect::<Vec<_>>()) / n;
    let m4 = pairwise_sum(&dev.iter().map(|d| d * d * d * d).collect::<Vec<_>>()) / n;

    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &v in &sorted {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    Ok(PdfEstimate {
        edges,
        density,
        sorted,
        mean,
        variance: m2,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

impl PdfEstimate {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Kolmogorov–Smirnov distance to the distribution with CDF `cdf`.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = cdf(v);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Asymptotic one-sample KS critical value `√(-ln(α/2)/2) / √n`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(0.5 * alpha).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Profile;

    #[test]
    fn folding() {
        assert_eq!(fold(-0.2, BoundaryCondition::NoFlux), 0.2);
        assert!((fold(1.3, BoundaryCondition::NoFlux) - 0.7).abs() < 1e-15);
        assert!((fold(2.4, BoundaryCondition::NoFlux) - 0.4).abs() < 1e-15);
        assert!((fold(-1.3, BoundaryCondition::NoFlux) - 0.7).abs() < 1e-15);
        assert!((fold(1.3, BoundaryCondition::Periodic) - 0.3).abs() < 1e-15);
        assert!((fold(-0.2, BoundaryCondition::Periodic) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let flow = FlowSpec::steady(Profile::Linear {
            slope: 1.0,
            intercept: -0.5,
        });
        let cfg = SimConfig {
            n_particles: 3000,
            dt: 1e-2,
            record_every: 10,
            ..Default::default()
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| simulate_forward(&flow, &InitialData::DeltaLine, 1.0, &cfg, None).unwrap());
        let b = three.install(|| simulate_forward(&flow, &InitialData::DeltaLine, 1.0, &cfg, None).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn backward_at_time_zero() {
        let flow = FlowSpec::steady(Profile::linear());
        let init = InitialData::Gaussian { variance: 0.5 };
        let est = evaluate_point_backward(&flow, None, 0.3, 0.5, 0.0, &init, &SimConfig::default()).unwrap();
        assert_eq!(est.value, init.eval(0.3, 0.5).unwrap());
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn unsupported_initial_data() {
        let flow = FlowSpec::steady(Profile::linear());
        let init = InitialData::RandomWave { wavenumber: 0.1 };
        assert!(simulate_forward(
            &flow,
            &init,
            0.1,
            &SimConfig {
                dt: 0.01,
                ..Default::default()
            },
            None
        )
        .is_err());
    }

    #[test]
    fn path_must_match_step() {
        let flow = FlowSpec::multiplicative(Profile::linear());
        let times = crate::ou_process::uniform_grid(1.0, 100).unwrap();
        let path = crate::ou_process::sample_ou_path(1.0, &times, 1).unwrap();
        let cfg = SimConfig {
            dt: 1e-3,
            n_particles: 10,
            ..Default::default()
        };
        assert!(matches!(
            simulate_forward(&flow, &InitialData::DeltaLine, 1.0, &cfg, Some(&path)),
            Err(Error::InvalidGrid(_))
        ));
        assert!(simulate_forward(&flow, &InitialData::DeltaLine, 1.0, &cfg, None).is_err());
    }

    #[test]
    fn pdf_estimate_basics() {
        assert!(ensemble_pdf(&[], 10).is_err());
        let v: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0).collect();
        let p = ensemble_pdf(&v, 10).unwrap();
        assert!((p.mean - 0.5).abs() < 1e-12);
        assert!(p.ks_distance(|z| z.clamp(0.0, 1.0)) < 1e-3);
        let total: f64 = p.density.iter().map(|d| d * (p.edges[1] - p.edges[0])).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_critical() {
        assert!((ks_critical_value(10_000, 0.05) - 0.01358).abs() < 1e-4);
    }
}
