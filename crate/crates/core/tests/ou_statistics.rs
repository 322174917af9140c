use approx::assert_relative_eq;
use proptest::prelude::*;
use randshear::ou_process::{grid_with_step, integral_variance, sample_ou_ensemble, sample_ou_path};

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn stationary_marginal_and_integral_variance() {
    let gamma = 2.0;
    let t = 3.0;
    let times = grid_with_step(t, 1e-2).unwrap();
    let paths = sample_ou_ensemble(gamma, &times, 11, 4000).unwrap();
    let end: Vec<f64> = paths.iter().map(|p| *p.values().unwrap().last().unwrap()).collect();
    let (m, v) = mean_var(&end);
    // sd of the sample mean is ~0.016, of the sample variance ~0.022
    assert!(m.abs() < 0.06, "mean {m}");
    assert!((v - gamma / 2.0).abs() < 0.08, "variance {v}");

    let integrals: Vec<f64> = paths.iter().map(|p| *p.integral.last().unwrap()).collect();
    let (_, vi) = mean_var(&integrals);
    let exact = t + ((-gamma * t).exp() - 1.0) / gamma;
    assert!((vi / exact - 1.0).abs() < 0.08, "Var I = {vi}, exact {exact}");
}

#[test]
fn lag_one_autocorrelation_matches_decay() {
    let gamma = 1.5;
    let dt = 0.2;
    let times = grid_with_step(4000.0, dt).unwrap();
    let path = sample_ou_path(gamma, &times, 5).unwrap();
    let xi = path.values().unwrap();
    let (m, v) = mean_var(xi);
    let c: f64 = xi.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (xi.len() - 1) as f64;
    assert!((c / v - (-gamma * dt).exp()).abs() < 0.03);
}

#[test]
fn integral_variance_limits() {
    assert_relative_eq!(integral_variance(1e-8, 1.0), 0.5e-8, max_relative = 1e-6);
    // large γ: white-noise limit t - 1/γ
    assert_relative_eq!(integral_variance(1e6, 2.0), 2.0 - 1e-6, max_relative = 1e-12);
}

proptest! {
    #[test]
    fn integral_variance_is_increasing_and_below_t(gamma in 1e-3f64..1e3, t in 1e-3f64..1e2) {
        let v = integral_variance(gamma, t);
        prop_assert!(v > 0.0 && v < t);
        prop_assert!(integral_variance(gamma, 1.1 * t) > v);
    }

    #[test]
    fn same_seed_same_path(seed in any::<u64>(), gamma in 0.1f64..10.0) {
        let times = grid_with_step(1.0, 0.05).unwrap();
        let a = sample_ou_path(gamma, &times, seed).unwrap();
        let b = sample_ou_path(gamma, &times, seed).unwrap();
        prop_assert_eq!(a.values().unwrap(), b.values().unwrap());
        prop_assert_eq!(&a.integral, &b.integral);
    }
}
