//! Long-time distributions of the rescaled scalar field.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{exp_sinh, tanh_sinh};
use crate::spectral::bessel::bessel_k0_scaled;

const QUAD_TOL: f64 = 1e-13;

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("beta = {beta} must be positive")))
    }
}

/// Density of the rescaled peak value `z ∈ (0, 1)` for integrable data:
/// `z^{1/β - 1} / √(-π β ln z)`.
pub fn pdf_deterministic(z: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::OutOfDomain {
            value: z,
            domain: "(0, 1)",
        });
    }
    let w = -z.ln();
    Ok(z.powf(1.0 / beta - 1.0) / (std::f64::consts::PI * beta * w).sqrt())
}

/// Density of `w = -ln z`, `e^{-w/β}/√(π β w)`.
fn pdf_log(w: f64, beta: f64) -> f64 {
    (-w / beta).exp() / (std::f64::consts::PI * beta * w).sqrt()
}

/// `P(Z ≤ z) = erfc(√(-ln z / β))`.
pub fn cdf_deterministic(z: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::OutOfDomain {
            value: z,
            domain: "[0, 1]",
        });
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    Ok(libm::erfc((-z.ln() / beta).sqrt()))
}

/// `∫₀¹ z^s f(z) dz` by quadrature in `w = -ln z`.
pub fn deterministic_moment_quadrature(s: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    exp_sinh(|w| (-s * w).exp() * pdf_log(w, beta), 0.0, QUAD_TOL)
}

/// Leading-order exponent `Pe² ū² / (2 κ_eff)`.
pub fn beta_leading(pe: f64, ubar: f64, kappa_eff: f64) -> f64 {
    pe * pe * ubar * ubar / (2.0 * kappa_eff)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteTime {
    pub t: f64,
    /// Variance of the Gaussian initial data.
    pub s: f64,
    /// `Var ∫₀ᵗ ξ`.
    pub v_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSpec {
    pub pe: f64,
    pub ubar: f64,
    pub kappa_eff: f64,
    pub finite: Option<FiniteTime>,
}

/// Finite-time exponent `2 Pe² ū² v(t) / (4 t κ_eff + 2 s)`.
pub fn beta_finite_time(spec: &BetaSpec) -> Result<f64> {
    let f = spec
        .finite
        .ok_or_else(|| Error::InvalidParameter("finite-time fields are missing".into()))?;
    Ok(2.0 * spec.pe * spec.pe * spec.ubar * spec.ubar * f.v_t / (4.0 * f.t * spec.kappa_eff + 2.0 * f.s))
}

/// `μ(s) = (s β + 1)^{-1/2}`, the `s`-th moment of the rescaled peak.
pub fn moment_function(s: f64, beta: f64) -> Result<f64> {
    let a = s * beta + 1.0;
    if !(a > 0.0) {
        return Err(Error::PoleCrossing { s });
    }
    Ok(1.0 / a.sqrt())
}

/// Fixed-Talbot inversion of the Laplace transform `f_hat` at `t > 0`
/// using `m` contour nodes.
pub fn talbot_inverse(f_hat: impl Fn(Complex64) -> Complex64, t: f64, m: usize) -> Result<f64> {
    if !(t > 0.0) || m < 2 {
        return Err(Error::InvalidParameter(format!(
            "talbot inversion needs t > 0 and m >= 2 (t = {t}, m = {m})"
        )));
    }
    let mf = m as f64;
    let r = 2.0 * mf / (5.0 * t);
    let mut acc = 0.5 * (f_hat(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..m {
        let theta = k as f64 * std::f64::consts::PI / mf;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        acc += ((s * t).exp() * f_hat(s) * Complex64::new(1.0, sigma)).re;
    }
    let v = r / mf * acc;
    if !v.is_finite() {
        return Err(Error::Numerical(format!("talbot contour produced {v} at t = {t}")));
    }
    Ok(v)
}

/// Talbot nodes used by [`reconstruct_pdf_from_moments`].
pub const TALBOT_NODES: usize = 32;

/// Rebuilds the density from the moment function: `f(z) = L⁻¹[μ](-ln z)/z`.
pub fn reconstruct_pdf_from_moments(beta: f64, z_grid: &[f64]) -> Result<Vec<f64>> {
    check_beta(beta)?;
    z_grid
        .iter()
        .map(|&z| {
            if !(z > 0.0 && z < 1.0) {
                return Err(Error::OutOfDomain {
                    value: z,
                    domain: "(0, 1)",
                });
            }
            let mu = |s: Complex64| (s * beta + 1.0).sqrt().inv();
            Ok(talbot_inverse(mu, -z.ln(), TALBOT_NODES)? / z)
        })
        .collect()
}

/// Moments `μ₁, μ₂, μ₃` by quadrature and the resulting skewness.
pub fn skewness_deterministic(beta: f64) -> Result<f64> {
    let m1 = deterministic_moment_quadrature(1.0, beta)?;
    let m2 = deterministic_moment_quadrature(2.0, beta)?;
    let m3 = deterministic_moment_quadrature(3.0, beta)?;
    let var = m2 - m1 * m1;
    Ok((m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1) / var.powf(1.5))
}

/// Locates the `β` at which the skewness changes sign inside `[lo, hi]`.
pub fn skewness_sign_change(lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (sa, sb) = (skewness_deterministic(a)?, skewness_deterministic(b)?);
    if sa.signum() == sb.signum() {
        return Err(Error::InvalidParameter(format!(
            "skewness has the same sign at beta = {lo} ({sa}) and beta = {hi} ({sb})"
        )));
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if skewness_deterministic(m)?.signum() == sa.signum() {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-10 * b {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Density of the rescaled random-wave field,
/// `e^{-z²/4} K₀(z²/4) / (√2 π^{3/2})`. Infinite at `z = 0`.
pub fn pdf_random_wave(z: f64) -> f64 {
    if z == 0.0 {
        return f64::INFINITY;
    }
    let q = 0.25 * z * z;
    if q > 400.0 {
        return 0.0;
    }
    (-2.0 * q).exp() * bessel_k0_scaled(q) / (std::f64::consts::SQRT_2 * std::f64::consts::PI.powf(1.5))
}

/// `∫ z^k f(z) dz` for the random-wave density.
pub fn random_wave_moment(k: u32) -> Result<f64> {
    if k % 2 == 1 {
        return Ok(0.0);
    }
    Ok(2.0
        * exp_sinh(
            |z| {
                if z > 0.0 {
                    z.powi(k as i32) * pdf_random_wave(z)
                } else {
                    0.0
                }
            },
            0.0,
            QUAD_TOL,
        )?)
}

/// Tabulated CDF of [`pdf_random_wave`], linearly interpolated.
#[derive(Debug, Clone)]
pub struct RandomWaveCdf {
    step: f64,
    table: Vec<f64>,
}

impl RandomWaveCdf {
    pub fn new(step: f64, z_max: f64) -> Result<Self> {
        let n = (z_max / step).ceil() as usize;
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for i in 0..n {
            acc += tanh_sinh(pdf_random_wave, i as f64 * step, (i + 1) as f64 * step, QUAD_TOL)?;
            table.push(acc);
        }
        Ok(Self { step, table })
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let a = z.abs() / self.step;
        let i = a.floor() as usize;
        let half = if i + 1 >= self.table.len() {
            0.5
        } else {
            let w = a - i as f64;
            self.table[i] * (1.0 - w) + self.table[i + 1] * w
        };
        if z >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }
}

impl Default for RandomWaveCdf {
    fn default() -> Self {
        Self::new(2e-3, 12.0).expect("tabulating the random-wave CDF")
    }
}

/// Spectral profile `φ̂₀(h)` of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SpectralCutoff {
    /// `𝟙_{|h| ≤ half_width}`
    Indicator { half_width: f64 },
    /// `e^{-h²/(2 width²)}`
    Gaussian { width: f64 },
}

/// Limiting variance `∫ |h|^α φ̂₀(h)² e^{-κ_eff h² t} dh` of the scalar at a
/// point for spectral initial data.
pub fn gaussian_variance_spectral(alpha: f64, cutoff: &SpectralCutoff, kappa_eff: f64, t: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} makes the variance diverge; need alpha > -1"
        )));
    }
    if !(kappa_eff * t >= 0.0) {
        return Err(Error::InvalidParameter("kappa_eff * t must be non-negative".into()));
    }
    let damp = kappa_eff * t;
    let half = match *cutoff {
        SpectralCutoff::Indicator { half_width } => {
            tanh_sinh(|h| h.powf(alpha) * (-damp * h * h).exp(), 0.0, half_width, QUAD_TOL)?
        }
        SpectralCutoff::Gaussian { width } => {
            let c = 1.0 / (width * width) + damp;
            exp_sinh(|h| h.powf(alpha) * (-c * h * h).exp(), 0.0, QUAD_TOL)?
        }
    };
    Ok(2.0 * half)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_domain() {
        assert!(pdf_deterministic(0.0, 1.0).is_err());
        assert!(pdf_deterministic(1.0, 1.0).is_err());
        assert!(pdf_deterministic(0.5, 0.0).is_err());
    }

    #[test]
    fn cdf_matches_density() {
        let beta = 0.7;
        let (a, b) = (0.2, 0.6);
        let mass = tanh_sinh(|z| pdf_deterministic(z, beta).unwrap(), a, b, 1e-13).unwrap();
        let diff = cdf_deterministic(b, beta).unwrap() - cdf_deterministic(a, beta).unwrap();
        assert!((mass - diff).abs() < 1e-12);
        assert_eq!(cdf_deterministic(1.0, beta).unwrap(), 0.0f64.max(libm::erfc(0.0)));
    }

    #[test]
    fn moment_function_examples() {
        assert_eq!(moment_function(0.0, 2.0).unwrap(), 1.0);
        assert_eq!(moment_function(3.0, 1.0).unwrap(), 0.5);
        assert!(matches!(moment_function(-2.0, 1.0), Err(Error::PoleCrossing { .. })));
    }

    #[test]
    fn talbot_known_pair() {
        for w in [0.05, 0.5, 1.0, 5.0] {
            let f = talbot_inverse(|s| (s + 1.0).sqrt().inv(), w, 32).unwrap();
            let exact = (-w).exp() / (std::f64::consts::PI * w).sqrt();
            assert!((f - exact).abs() < 1e-10 * exact.max(1.0), "w = {w}");
        }
    }

    #[test]
    fn beta_limits() {
        let spec = BetaSpec {
            pe: 2.0,
            ubar: 0.5,
            kappa_eff: 1.3,
            finite: Some(FiniteTime {
                t: 7.0,
                s: 0.0,
                v_t: 7.0,
            }),
        };
        assert!((beta_finite_time(&spec).unwrap() - beta_leading(2.0, 0.5, 1.3)).abs() < 1e-15);
        assert!(beta_finite_time(&BetaSpec { finite: None, ..spec }).is_err());
    }

    #[test]
    fn random_wave_density() {
        assert_eq!(pdf_random_wave(0.0), f64::INFINITY);
        assert_eq!(pdf_random_wave(1.3), pdf_random_wave(-1.3));
        let z: f64 = 4.0;
        let tail =
            (-z * z / 2.0).exp() * (1.0 / (std::f64::consts::PI * z) - 1.0 / (2.0 * std::f64::consts::PI * z.powi(3)));
        assert!((pdf_random_wave(z) / tail - 1.0).abs() < 0.01);
    }

    #[test]
    fn random_wave_cdf_table() {
        let c = RandomWaveCdf::default();
        assert!((c.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((c.cdf(20.0) - 1.0).abs() < 1e-10);
        assert!((c.cdf(1.0) + c.cdf(-1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_variance() {
        let v = gaussian_variance_spectral(0.0, &SpectralCutoff::Indicator { half_width: 1.0 }, 1.0, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let kt: f64 = 0.7;
        let v = gaussian_variance_spectral(0.0, &SpectralCutoff::Gaussian { width: 1.0 }, 1.0, kt).unwrap();
        assert!((v - (std::f64::consts::PI / (1.0 + kt)).sqrt()).abs() < 1e-12);
        assert!(gaussian_variance_spectral(-1.0, &SpectralCutoff::Gaussian { width: 1.0 }, 1.0, 1.0).is_err());
        let late = gaussian_variance_spectral(0.5, &SpectralCutoff::Gaussian { width: 1.0 }, 1.0, 1e8).unwrap();
        assert!(late < 1e-5);
    }
}
