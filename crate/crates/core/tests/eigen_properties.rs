use std::f64::consts::PI;

use proptest::prelude::*;
use randshear::eff_diffusivity::{
    eigen_data, general_eigen_data, lambda_multiplicative, lambda_white, linear_profile_enhancement, EigenData, Noise,
    SpectralOptions,
};
use randshear::flow::{FlowSpec, GeneralFlow, Profile};
use randshear::spectral::helmholtz::BoundaryCondition;
use randshear::spectral::GridFunction;

#[test]
fn cosine_profile_closed_form() {
    // u = cos(nπy): λ₂ = 2 + Pe² γ / (2 ((nπ)² + γ)) since ⟨u, u⟩ = 1/2
    for n in 1..4 {
        let u = GridFunction::from_fn(512, |y| (n as f64 * PI * y).cos()).unwrap();
        for gamma in [0.5, 5.0] {
            let e = lambda_multiplicative(&u, BoundaryCondition::NoFlux, gamma, 1.5).unwrap();
            let mu = (n as f64 * PI).powi(2);
            let expect = 2.0 + 2.25 * gamma / (2.0 * (mu + gamma));
            assert!((e.lambda2 - expect).abs() < 1e-10);
            assert!(e.lambda11.abs() < 1e-20);
        }
    }
}

#[test]
fn white_noise_cosine_preset() {
    let u = Profile::cosine(1).to_grid(256).unwrap();
    let e = lambda_white(&u, 2.0).unwrap();
    assert!((e.kappa_eff - 2.0).abs() < 1e-12);
}

#[test]
fn dispatch_agrees_with_direct_call() {
    let opts = SpectralOptions::default();
    let flow = FlowSpec::multiplicative(Profile::linear());
    let e = eigen_data(&flow, Noise::OrnsteinUhlenbeck { gamma: 3.0 }, 1.0, &opts).unwrap();
    assert!((e.kappa_eff - 1.0 - linear_profile_enhancement(3.0)).abs() < 1e-12);
    let zero = eigen_data(&flow, Noise::OrnsteinUhlenbeck { gamma: 3.0 }, 0.0, &opts).unwrap();
    assert!((zero.kappa_eff - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_bound_for_random_polynomial_flows(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -1.0f64..1.0, gamma in 0.2f64..5.0, pe in 0.0f64..3.0
    ) {
        let flow = GeneralFlow::new("poly", move |y, xi| a * y * xi + b * (PI * y).cos() * xi * xi + c * xi * xi * xi);
        let opts = SpectralOptions { grid: 64, hermite_order: 8, ..Default::default() };
        let g = general_eigen_data(&flow, BoundaryCondition::NoFlux, gamma, pe, &opts).unwrap();
        prop_assert!(g.eigen.satisfies_energy_bound(1e-10));
        prop_assert!(g.eigen.kappa_eff >= 1.0 - 1e-12);
        prop_assert!(g.lambda11.relative_difference < 1e-6);
    }

    #[test]
    fn enhancement_is_monotone_in_gamma(g in 1e-2f64..1e3) {
        let lo = linear_profile_enhancement(g);
        let hi = linear_profile_enhancement(1.5 * g);
        prop_assert!(hi > lo && hi < 1.0 / 24.0);
    }

    #[test]
    fn beta_is_positive(l2 in 2.0f64..10.0, frac in 0.0f64..1.0) {
        let e = EigenData::new(l2, frac * (l2 - 2.0), None, 1.0);
        prop_assert!(e.beta() >= 0.0);
    }
}
