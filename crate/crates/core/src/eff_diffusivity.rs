//! Effective diffusivity from the ground-state eigenvalue expansion.
//!
//! The eigenvalue derivatives `λ⁽²⁾` and `λ⁽¹,¹⁾` at zero wavenumber give
//! `κ_eff = (λ⁽²⁾ - λ⁽¹,¹⁾)/2` in units of the molecular diffusivity.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowKind, FlowSpec, GeneralFlow};
use crate::quad::tanh_sinh;
use crate::spectral::helmholtz::{helmholtz_inverse, BoundaryCondition};
use crate::spectral::hermite::{hermite_project, two_pow_factorial, GaussHermite, HermiteSeries};
use crate::spectral::GridFunction;

/// Eigenvalue data of the cell problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub lambda2: f64,
    pub lambda11: f64,
    pub kappa_eff: f64,
    /// `None` in the white-noise limit.
    pub gamma: Option<f64>,
    pub pe: f64,
}

impl EigenData {
    pub fn new(lambda2: f64, lambda11: f64, gamma: Option<f64>, pe: f64) -> Self {
        Self {
            lambda2,
            lambda11,
            kappa_eff: 0.5 * (lambda2 - lambda11),
            gamma,
            pe,
        }
    }

    /// `λ⁽¹,¹⁾ / (λ⁽²⁾ - λ⁽¹,¹⁾)`, the exponent of the invariant measure.
    pub fn beta(&self) -> f64 {
        self.lambda11 / (self.lambda2 - self.lambda11)
    }

    /// Checks `λ⁽²⁾ - 2 ≥ λ⁽¹,¹⁾ ≥ 0` up to a relative slack.
    pub fn satisfies_energy_bound(&self, slack: f64) -> bool {
        let scale = self.lambda2.abs().max(1.0);
        self.lambda11 >= -slack * scale && self.lambda2 - 2.0 - self.lambda11 >= -slack * scale
    }
}

/// Driving noise of the flow amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Noise {
    OrnsteinUhlenbeck { gamma: f64 },
    White,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Grid intervals across the channel.
    pub grid: usize,
    /// Highest Hermite mode retained.
    pub hermite_order: usize,
    /// Gauss–Hermite nodes used by the projection.
    pub quadrature_nodes: usize,
    /// Largest admissible relative size of the last retained `λ⁽²⁾` term.
    pub truncation_tolerance: f64,
    /// Largest admissible relative gap between the two `λ⁽¹,¹⁾` forms.
    pub representation_tolerance: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            grid: 512,
            hermite_order: 12,
            quadrature_nodes: crate::spectral::hermite::DEFAULT_PROJECTION_NODES,
            truncation_tolerance: 1e-6,
            representation_tolerance: 1e-6,
        }
    }
}

/// Terms below this fraction of the running total count as converged.
pub const SERIES_STOP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    /// All terms past this index are below [`SERIES_STOP`] relative.
    Converged {
        at: usize,
    },
    ReachedLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda2Series {
    pub value: f64,
    pub terms: Vec<f64>,
    pub truncation: Truncation,
    /// `|last term| / |Σ terms|`.
    pub last_term_relative: f64,
}

/// `λ⁽²⁾ = 2 + 2Pe² Σₙ n! 2ⁿ ∫ aₙ (nγ - ∂²)⁻¹ aₙ` for a projected flow.
pub fn lambda2_general(
    series: &HermiteSeries,
    bc: BoundaryCondition,
    pe: f64,
    opts: &SpectralOptions,
) -> Result<Lambda2Series> {
    let gamma = series.gamma;
    let biggest = series.coeffs.iter().map(|a| a.max_abs()).fold(0.0, f64::max);
    let mut terms = Vec::with_capacity(series.coeffs.len());
    for (n, a) in series.coeffs.iter().enumerate() {
        if a.max_abs() <= 1e-14 * biggest || biggest == 0.0 {
            terms.push(0.0);
            continue;
        }
        let b = helmholtz_inverse(a, n as f64 * gamma, bc)?;
        terms.push(2.0 * pe * pe * two_pow_factorial(n) * a.inner(&b)?);
    }
    let total: f64 = terms.iter().sum();
    let scale = total.abs().max(f64::MIN_POSITIVE);
    let last_term_relative = terms.last().map_or(0.0, |t| t.abs() / scale);
    if total != 0.0 && last_term_relative > opts.truncation_tolerance {
        return Err(Error::Truncation {
            relative: last_term_relative,
            tolerance: opts.truncation_tolerance,
        });
    }
    let last_big = terms.iter().rposition(|t| t.abs() > SERIES_STOP * scale);
    let truncation = match last_big {
        Some(m) if m + 1 == terms.len() => Truncation::ReachedLimit,
        Some(m) => Truncation::Converged { at: m },
        None => Truncation::Converged { at: 0 },
    };
    Ok(Lambda2Series {
        value: 2.0 + total,
        terms,
        truncation,
        last_term_relative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda11Check {
    pub series: f64,
    pub integral: f64,
    pub relative_difference: f64,
}

/// `λ⁽¹,¹⁾` by its Hermite series, cross-checked against the integral form
/// `(4Pe²/(√π γ)) ∫ e^{-z²} G(z)² dz` with
/// `G(z) = e^{z²} ∫_{-∞}^z e^{-s²} v̄(s) ds`.
///
/// `channel_mean` is `v̄(z)` in the shifted frame; when absent it is
/// rebuilt from the series.
pub fn lambda11_general(
    series: &HermiteSeries,
    channel_mean: Option<&dyn Fn(f64) -> f64>,
    pe: f64,
    opts: &SpectralOptions,
) -> Result<Lambda11Check> {
    let gamma = series.gamma;
    let prefactor = 2.0 * pe * pe / gamma;
    let mut sum = 0.0;
    let mut bound = 0.0;
    let mut fact = 1.0; // (n-1)!
    for (n, a) in series.coeffs.iter().enumerate().skip(1) {
        if n > 1 {
            fact *= (n - 1) as f64;
        }
        let w = fact * 2f64.powi(n as i32);
        let m = a.mean();
        sum += w * m * m;
        bound += w * a.inner(a)?;
    }
    let series_value = prefactor * sum;

    let from_series = |z: f64| series.channel_mean(z);
    let vbar: &dyn Fn(f64) -> f64 = match channel_mean {
        Some(f) => f,
        None => &from_series,
    };
    let integral = lambda11_integral(vbar, gamma, pe)?;

    let big = series_value.abs().max(integral.abs());
    let diff = (series_value - integral).abs();
    let relative_difference = if big <= 1e-12 * prefactor * bound {
        0.0
    } else {
        diff / big
    };
    if relative_difference > opts.representation_tolerance {
        return Err(Error::RepresentationMismatch {
            relative: relative_difference,
        });
    }
    Ok(Lambda11Check {
        series: series_value,
        integral,
        relative_difference,
    })
}

const OUTER_NODES: usize = 80;
const INNER_RANGE: f64 = 10.0;

/// Integral representation of `λ⁽¹,¹⁾`.
///
/// The growing factor `e^{z²}` is folded into the inner integral:
/// for `z ≤ 0`, `G(z) = ∫₀^∞ e^{2zr - r²} v̄(z - r) dr`, and for `z > 0` the
/// zero total of `e^{-s²} v̄` gives `G(z) = -∫₀^∞ e^{-2zr - r²} v̄(z + r) dr`.
/// Both integrands are bounded by `e^{-r²}`, so the range is cut at `r = 10`.
pub fn lambda11_integral(vbar: &dyn Fn(f64) -> f64, gamma: f64, pe: f64) -> Result<f64> {
    let gh = GaussHermite::new(OUTER_NODES)?;
    let mut acc = 0.0;
    for (&z, &w) in gh.nodes.iter().zip(&gh.weights) {
        let g = if z <= 0.0 {
            tanh_sinh(|r| (2.0 * z * r - r * r).exp() * vbar(z - r), 0.0, INNER_RANGE, 1e-13)?
        } else {
            -tanh_sinh(|r| (-2.0 * z * r - r * r).exp() * vbar(z + r), 0.0, INNER_RANGE, 1e-13)?
        };
        acc += w * g * g;
    }
    Ok(4.0 * pe * pe / (std::f64::consts::PI.sqrt() * gamma) * acc)
}

/// Eigenvalue data and diagnostics for a general flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralEigen {
    pub eigen: EigenData,
    pub lambda2: Lambda2Series,
    pub lambda11: Lambda11Check,
    pub shift: f64,
}

/// Projects `flow` and evaluates both eigenvalue derivatives.
pub fn general_eigen_data(
    flow: &GeneralFlow,
    bc: BoundaryCondition,
    gamma: f64,
    pe: f64,
    opts: &SpectralOptions,
) -> Result<GeneralEigen> {
    let series = hermite_project(
        flow.as_fn(),
        gamma,
        opts.hermite_order,
        opts.grid,
        opts.quadrature_nodes,
    )?;
    let l2 = lambda2_general(&series, bc, pe, opts)?;
    let sg = gamma.sqrt();
    let shift = series.shift;
    let mean_grid = 128;
    let weights = GridFunction::constant(mean_grid, 0.0)?.weights();
    let vbar = move |z: f64| -> f64 {
        let xi = sg * z;
        weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * flow.eval(j as f64 / mean_grid as f64, xi))
            .sum::<f64>()
            - shift
    };
    let l11 = lambda11_general(&series, Some(&vbar), pe, opts)?;
    Ok(GeneralEigen {
        eigen: EigenData::new(l2.value, l11.series, Some(gamma), pe),
        lambda2: l2,
        lambda11: l11,
        shift,
    })
}

/// `v = u(y) ξ` with OU switching: `λ⁽²⁾ = 2 + Pe² γ ∫ u (γ - ∂²)⁻¹ u`,
/// `λ⁽¹,¹⁾ = Pe² ū²`.
pub fn lambda_multiplicative(u: &GridFunction, bc: BoundaryCondition, gamma: f64, pe: f64) -> Result<EigenData> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must be positive and finite"
        )));
    }
    let b = helmholtz_inverse(u, gamma, bc)?;
    let lambda2 = 2.0 + pe * pe * gamma * u.inner(&b)?;
    let ubar = u.mean();
    Ok(EigenData::new(lambda2, pe * pe * ubar * ubar, Some(gamma), pe))
}

/// White-noise limit of [`lambda_multiplicative`].
pub fn lambda_white(u: &GridFunction, pe: f64) -> Result<EigenData> {
    let ubar = u.mean();
    Ok(EigenData::new(
        2.0 + pe * pe * u.inner(u)?,
        pe * pe * ubar * ubar,
        None,
        pe,
    ))
}

/// Taylor dispersion of a steady shear: `1 + (Pe²/2) ∫ (∫₀ʸ v)²` with the
/// mean of `v` removed first.
///
/// Particle simulations of the same equation give `Var(x)/(2t) → 1 + Pe² ∫ (∫₀ʸ v)²`,
/// twice this enhancement, which is also what the small-γ limit of
/// [`linear_profile_enhancement`] implies for a frozen signal.
pub fn taylor_steady(v: &GridFunction, pe: f64) -> Result<f64> {
    let centered = v.shift(-v.mean());
    let c = centered.cumulative_integral();
    Ok(1.0 + 0.5 * pe * pe * c.inner(&c)?)
}

/// Enhancement `κ_eff - 1` per unit `Pe²` for `v = y ξ`:
/// `1/24 - 1/(2γ) + tanh(√γ/2)/γ^{3/2}`.
pub fn linear_profile_enhancement(gamma: f64) -> f64 {
    if gamma.is_infinite() {
        return 1.0 / 24.0;
    }
    let x = 0.5 * gamma.sqrt();
    if x < 0.1 {
        // (tanh x - x + x³/3)/x³ loses every digit to cancellation here.
        let x2 = x * x;
        let s = x2
            * (2.0 / 15.0
                + x2 * (-17.0 / 315.0
                    + x2 * (62.0 / 2835.0
                        + x2 * (-1382.0 / 155_925.0
                            + x2 * (21_844.0 / 6_081_075.0 - x2 * 929_569.0 / 638_512_875.0)))));
        return s / 8.0;
    }
    1.0 / 24.0 - 0.5 / gamma + (0.5 * gamma.sqrt()).tanh() / gamma.powf(1.5)
}

/// Dimensional `κ_eff` for `v = g y ξ` on a channel of width `L`.
pub fn kappa_eff_dimensional_linear(kappa: f64, g: f64, gamma: f64, l: f64) -> Result<f64> {
    if !(kappa > 0.0 && l > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter("kappa, L and gamma must be positive".into()));
    }
    Ok(kappa + g * g * l * l * linear_profile_enhancement(gamma * l * l / kappa))
}

/// Leading small-`γ` behaviour `κ + γ g² L⁴/(240 κ)` of
/// [`kappa_eff_dimensional_linear`].
pub fn small_gamma_asymptotic(kappa: f64, g: f64, gamma: f64, l: f64) -> f64 {
    kappa + gamma * g * g * l.powi(4) / (240.0 * kappa)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroDiffusivityKappa {
    pub sample: f64,
    pub ensemble_mean: f64,
}

/// Without molecular diffusion the white-noise dispersion coefficient is
/// random: `(∫u² - ū²) B(1)²/2`, with ensemble mean `(∫u² - ū²)/2`.
pub fn zero_diffusivity_kappa(u: &GridFunction, seed: u64) -> Result<ZeroDiffusivityKappa> {
    let centered = u.shift(-u.mean());
    let var = centered.inner(&centered)?;
    let b: f64 = ChaCha8Rng::seed_from_u64(seed).sample(StandardNormal);
    Ok(ZeroDiffusivityKappa {
        sample: 0.5 * var * b * b,
        ensemble_mean: 0.5 * var,
    })
}

/// Dispatches on the flow kind.
///
/// Steady flows report `λ⁽¹,¹⁾ = 0` and `λ⁽²⁾ = 2κ_eff`.
pub fn eigen_data(flow: &FlowSpec, noise: Noise, pe: f64, opts: &SpectralOptions) -> Result<EigenData> {
    let gamma = match noise {
        Noise::OrnsteinUhlenbeck { gamma } => Some(gamma),
        Noise::White => None,
    };
    match (&flow.kind, gamma) {
        (FlowKind::Steady(u), _) => {
            if flow.bc != BoundaryCondition::NoFlux {
                return Err(Error::Unsupported(
                    "steady Taylor dispersion is implemented for no-flux walls".into(),
                ));
            }
            let k = taylor_steady(&u.to_grid(opts.grid)?, pe)?;
            Ok(EigenData::new(2.0 * k, 0.0, gamma, pe))
        }
        (FlowKind::Multiplicative(u), Some(g)) => lambda_multiplicative(&u.to_grid(opts.grid)?, flow.bc, g, pe),
        (FlowKind::Multiplicative(u), None) => lambda_white(&u.to_grid(opts.grid)?, pe),
        (FlowKind::General(f), Some(g)) => Ok(general_eigen_data(f, flow.bc, g, pe, opts)?.eigen),
        (FlowKind::General(_), None) => Err(Error::Unsupported("general flows need a finite gamma".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Profile;
    use std::f64::consts::PI;

    fn grid(f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(512, f).unwrap()
    }

    #[test]
    fn linear_closed_form() {
        for gamma in [0.1, 1.0, 10.0, 100.0] {
            let e = lambda_multiplicative(&grid(|y| y), BoundaryCondition::NoFlux, gamma, 1.0).unwrap();
            let exact = 1.0 + 1.0 / 24.0 - 0.5 / gamma + (0.5 * gamma.sqrt()).tanh() / gamma.powf(1.5);
            assert!((e.kappa_eff - exact).abs() < 1e-10, "gamma {gamma}");
        }
    }

    #[test]
    fn enhancement_series_branch_is_continuous() {
        let g: f64 = 0.04 * 0.999_999;
        let direct = 1.0 / 24.0 - 0.5 / g + (0.5 * g.sqrt()).tanh() / g.powf(1.5);
        assert!((linear_profile_enhancement(g) - direct).abs() < 1e-12);
        assert!((linear_profile_enhancement(1e-8) / (1e-8 / 240.0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn white_limits() {
        let e = lambda_white(&grid(|y| y), 2.0).unwrap();
        assert!((e.kappa_eff - (1.0 + 4.0 / 24.0)).abs() < 1e-12);
        let e = lambda_white(&grid(|y| (PI * y).cos()), 1.0).unwrap();
        assert!((e.kappa_eff - 1.25).abs() < 1e-12);
        let e = lambda_white(&grid(|_| 0.0), 1.0).unwrap();
        assert_eq!(e.kappa_eff, 1.0);
    }

    #[test]
    fn cosine_at_matched_gamma() {
        let gamma = PI * PI;
        let e = lambda_multiplicative(&grid(|y| (PI * y).cos()), BoundaryCondition::NoFlux, gamma, 1.0).unwrap();
        assert!((e.kappa_eff - 1.125).abs() < 1e-10);
    }

    #[test]
    fn constant_profile_has_no_enhancement() {
        let e = lambda_multiplicative(&grid(|_| 0.7), BoundaryCondition::NoFlux, 3.0, 2.0).unwrap();
        assert!((e.kappa_eff - 1.0).abs() < 1e-12);
        assert!(lambda_multiplicative(&grid(|_| 1.0), BoundaryCondition::NoFlux, 0.0, 1.0).is_err());
    }

    #[test]
    fn taylor_examples() {
        assert!((taylor_steady(&grid(|y| y - 0.5), 2.0).unwrap() - (1.0 + 1.0 / 60.0)).abs() < 1e-12);
        assert_eq!(taylor_steady(&grid(|_| 0.0), 3.0).unwrap(), 1.0);
        let k = taylor_steady(&grid(|y| (PI * y).cos()), 1.5).unwrap();
        assert!((k - (1.0 + 2.25 / (4.0 * PI * PI))).abs() < 1e-12);
    }

    #[test]
    fn dimensional_forms() {
        let v = kappa_eff_dimensional_linear(1.0, 1.0, 4.0, 1.0).unwrap();
        let exact = 1.0 + 1.0 / 24.0 - 1.0 / 8.0 + 1f64.tanh() / 8.0;
        assert!((v - exact).abs() < 1e-14);
        assert!((kappa_eff_dimensional_linear(2.0, 0.0, 4.0, 1.5).unwrap() - 2.0).abs() < 1e-15);
        let big = kappa_eff_dimensional_linear(1.0, 1.0, f64::INFINITY, 1.0).unwrap();
        assert!((big - (1.0 + 1.0 / 24.0)).abs() < 1e-15);
        assert_eq!(small_gamma_asymptotic(0.3, 1.0, 0.0, 2.0), 0.3);
    }

    #[test]
    fn general_path_reduces_to_multiplicative() {
        let opts = SpectralOptions {
            grid: 256,
            hermite_order: 6,
            ..Default::default()
        };
        let flow = GeneralFlow::new("y xi", |y, xi| y * xi);
        let g = general_eigen_data(&flow, BoundaryCondition::NoFlux, 2.0, 1.5, &opts).unwrap();
        let m = lambda_multiplicative(
            &GridFunction::from_fn(256, |y| y).unwrap(),
            BoundaryCondition::NoFlux,
            2.0,
            1.5,
        )
        .unwrap();
        assert!((g.eigen.lambda2 - m.lambda2).abs() < 1e-10);
        assert!((g.eigen.lambda11 - m.lambda11).abs() < 1e-10);
        assert!(matches!(g.lambda2.truncation, Truncation::Converged { at: 1 }));
    }

    #[test]
    fn second_hermite_mode_channel_mean() {
        let gamma: f64 = 1.7;
        let pe = 1.3;
        let opts = SpectralOptions {
            grid: 64,
            hermite_order: 4,
            ..Default::default()
        };
        let sg = gamma.sqrt();
        let flow = GeneralFlow::new("H2", move |_, xi| {
            let z = xi / sg;
            4.0 * z * z - 2.0
        });
        let g = general_eigen_data(&flow, BoundaryCondition::NoFlux, gamma, pe, &opts).unwrap();
        assert!((g.lambda11.series - 8.0 * pe * pe / gamma).abs() < 1e-12);
        assert!((g.lambda11.integral - 8.0 * pe * pe / gamma).abs() < 1e-10);
        assert!((g.eigen.kappa_eff - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_fluctuations_gives_two() {
        let flow = GeneralFlow::new("zero", |_, _| 0.0);
        let opts = SpectralOptions {
            grid: 32,
            hermite_order: 3,
            ..Default::default()
        };
        let g = general_eigen_data(&flow, BoundaryCondition::NoFlux, 1.0, 1.0, &opts).unwrap();
        assert_eq!(g.eigen.lambda2, 2.0);
        assert_eq!(g.eigen.lambda11, 0.0);
    }

    #[test]
    fn truncation_too_short_is_reported() {
        let opts = SpectralOptions {
            grid: 32,
            hermite_order: 2,
            ..Default::default()
        };
        // ξ³ has a third Hermite mode the truncation drops; exp(ξ) never ends.
        let flow = GeneralFlow::new("exp", |y, xi| y * (2.0 * xi).exp());
        assert!(matches!(
            general_eigen_data(&flow, BoundaryCondition::NoFlux, 1.0, 1.0, &opts),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn zero_diffusivity() {
        let z = zero_diffusivity_kappa(&grid(|y| y), 1).unwrap();
        assert!((z.ensemble_mean - 1.0 / 24.0).abs() < 1e-14);
        let c = zero_diffusivity_kappa(&grid(|_| 3.0), 1).unwrap();
        assert!(c.sample.abs() < 1e-25 && c.ensemble_mean.abs() < 1e-25);
    }

    #[test]
    fn dispatch() {
        let opts = SpectralOptions::default();
        let f = FlowSpec::multiplicative(Profile::linear());
        let e = eigen_data(&f, Noise::White, 1.0, &opts).unwrap();
        assert!((e.kappa_eff - (1.0 + 1.0 / 24.0)).abs() < 1e-12);
        let s = FlowSpec::steady(Profile::Linear {
            slope: 1.0,
            intercept: -0.5,
        });
        let e = eigen_data(&s, Noise::White, 2.0, &opts).unwrap();
        assert!((e.kappa_eff - (1.0 + 1.0 / 60.0)).abs() < 1e-12);
    }
}
