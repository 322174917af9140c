//! Acceptance checks shared by the `acceptance` test target and the
//! `validate` command.
//!
//! Each check compares the library against closed forms or against Monte
//! Carlo ensembles at fixed seeds. The reference formulas are written out
//! here rather than reusing the code paths under test.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aris::{
    estimate_gamma, kappa_from_realization, lambda_from_moments, npoint_correlator, nth_moment_prediction,
    ou_integral_lhs, solve_aris, ArisOptions, CorrelatorSpec,
};
use crate::eff_diffusivity::{
    general_eigen_data, kappa_eff_dimensional_linear, lambda_multiplicative, lambda_white, small_gamma_asymptotic,
    taylor_steady, EigenData, SpectralOptions,
};
use crate::error::Result;
use crate::flow::{FlowSpec, GeneralFlow, Profile};
use crate::invariant_measure::{
    beta_finite_time, beta_leading, cdf_deterministic, deterministic_moment_quadrature, moment_function,
    pdf_deterministic, random_wave_moment, reconstruct_pdf_from_moments, BetaSpec, FiniteTime, RandomWaveCdf,
};
use crate::monte_carlo::{
    ensemble_pdf, evaluate_point_backward, sample_random_wave_limit, simulate_forward, wind_model_solution,
    InitialData, SimConfig, WindInit,
};
use crate::ou_process::{grid_with_step, sample_ou_ensemble, sample_ou_path, OuPath};
use crate::rng::derive_seed;
use crate::spectral::helmholtz::{helmholtz_inverse, BoundaryCondition};
use crate::spectral::hermite::{hermite_all, hermite_norm_sq, GaussHermite};
use crate::spectral::GridFunction;

/// Ensemble sizes. `Full` runs every criterion at its stated size; `Quick`
/// shrinks the Monte Carlo ensembles for smoke tests and is not a pass/fail
/// statement about the criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Full,
    Quick,
}

impl Scale {
    fn count(self, full: usize, quick: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub details: String,
}

impl CriterionReport {
    fn new(id: u8, name: &str, passed: bool, details: String) -> Self {
        Self {
            id,
            name: name.into(),
            passed,
            details,
        }
    }

    fn failed(id: u8, name: &str, err: crate::Error) -> Self {
        Self::new(id, name, false, format!("error: {err}"))
    }

    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details
        )
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "white-noise effective diffusivity"),
    (2, "OU effective diffusivity closed form"),
    (3, "ergodicity of the single-realization estimator"),
    (4, "OU time-integral identity"),
    (5, "damping-rate estimator"),
    (6, "invariant measure for integrable data"),
    (7, "random-wave invariant measure"),
    (8, "moment machinery"),
    (9, "steady Taylor limit"),
    (10, "kernel correctness"),
];

pub fn run(id: u8, scale: Scale) -> CriterionReport {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .unwrap_or("unknown criterion");
    let out = match id {
        1 => white_noise(),
        2 => ou_closed_form(),
        3 => ergodicity(scale),
        4 => ou_identity(scale),
        5 => gamma_estimator(scale),
        6 => deterministic_measure(scale),
        7 => random_wave(scale),
        8 => moments(),
        9 => taylor(scale),
        10 => kernels(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    match out {
        Ok((passed, details)) => CriterionReport::new(id, name, passed, details),
        Err(e) => CriterionReport::failed(id, name, e),
    }
}

pub fn run_all(scale: Scale) -> Vec<CriterionReport> {
    CRITERIA.iter().map(|&(id, _)| run(id, scale)).collect()
}

type Outcome = Result<(bool, String)>;

const GRID: usize = 512;

fn linear() -> Result<GridFunction> {
    GridFunction::from_fn(GRID, |y| y)
}

/// `1/24 - 1/(2γ) + tanh(√γ/2)/γ^{3/2}`, evaluated directly.
fn linear_enhancement_direct(gamma: f64) -> f64 {
    1.0 / 24.0 - 1.0 / (2.0 * gamma) + (gamma.sqrt() / 2.0).tanh() / gamma.powf(1.5)
}

fn white_noise() -> Outcome {
    let u = linear()?;
    let mut worst: f64 = 0.0;
    for pe in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let e = lambda_white(&u, pe)?;
        worst = worst.max((e.kappa_eff - (1.0 + pe * pe / 24.0)).abs());
    }
    Ok((
        worst <= 1e-12,
        format!("max |kappa - (1 + Pe^2/24)| = {worst:.2e} (tol 1e-12)"),
    ))
}

fn ou_closed_form() -> Outcome {
    let u = linear()?;
    let mut worst: f64 = 0.0;
    for gamma in [0.1, 1.0, 10.0, 100.0] {
        let e = lambda_multiplicative(&u, BoundaryCondition::NoFlux, gamma, 1.0)?;
        worst = worst.max((e.kappa_eff - (1.0 + linear_enhancement_direct(gamma))).abs());
    }
    let white = lambda_white(&u, 1.0)?.kappa_eff;
    let gaps = [1e2, 1e3, 1e4]
        .iter()
        .map(|&g| Ok((lambda_multiplicative(&u, BoundaryCondition::NoFlux, g, 1.0)?.kappa_eff - white).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let g_small = 1e-3;
    let k_small = lambda_multiplicative(&u, BoundaryCondition::NoFlux, g_small, 1.0)?.kappa_eff;
    let asym = small_gamma_asymptotic(1.0, 1.0, g_small, 1.0);
    let small_rel = (k_small - asym).abs() / (k_small - 1.0);
    let dim = kappa_eff_dimensional_linear(1.0, 1.0, g_small, 1.0)?;
    let dim_rel = (dim - asym).abs() / (dim - 1.0);
    let passed = worst <= 1e-8 && monotone && small_rel <= 0.05 && dim_rel <= 0.05;
    Ok((
        passed,
        format!(
            "max closed-form error {worst:.2e} (tol 1e-8); white-noise gaps {:.2e} > {:.2e} > {:.2e}; \
             small-gamma relative gap {small_rel:.2e} (tol 5e-2)",
            gaps[0], gaps[1], gaps[2]
        ),
    ))
}

fn ergodicity(scale: Scale) -> Outcome {
    let (gamma, pe, t_end, dt) = (1.0, 1.0, 200.0, 1e-2);
    let n_real = scale.count(100, 10);
    let u = linear()?;
    let kappa = 1.0 + linear_enhancement_direct(gamma);
    let times = grid_with_step(t_end, dt)?;
    let opts = ArisOptions {
        n_max: 64,
        record_every: 100,
        record_modes: false,
    };
    let mut passes = 0;
    let mut worst: f64 = 0.0;
    let mut slopes = Vec::with_capacity(n_real);
    for r in 0..n_real {
        let path = sample_ou_path(gamma, &times, derive_seed(0xE60D, r as u64))?;
        let rec = solve_aris(&u, pe, &path, &opts)?;
        let est = *rec.kappa_estimate.last().unwrap();
        let rel = (est - kappa).abs() / kappa;
        worst = worst.max(rel);
        if rel <= 0.05 {
            passes += 1;
        }
        slopes.push(kappa_from_realization(&rec, None)?);
    }
    let slope_mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let required = (n_real * 95).div_ceil(100);
    Ok((
        passes >= required,
        format!(
            "{passes}/{n_real} realizations within 5% of kappa_eff = {kappa:.6} (need {required}); \
             worst relative error {worst:.2e}; mean windowed slope {slope_mean:.6}"
        ),
    ))
}

fn prefix(path: &OuPath, t: f64) -> OuPath {
    let k = path.times.partition_point(|&s| s <= t + 1e-9);
    OuPath {
        times: path.times[..k].to_vec(),
        values: path.values.as_ref().map(|v| v[..k].to_vec()),
        integral: path.integral[..k].to_vec(),
        gamma: path.gamma,
    }
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn ou_identity(scale: Scale) -> Outcome {
    let gamma = PI * PI;
    let lambda = PI * PI;
    let dt = 5e-4;
    let n_paths = scale.count(50, 8);
    let rhs = 0.5 - lambda / (2.0 * (gamma + lambda));
    let times = grid_with_step(200.0, dt)?;
    let paths = sample_ou_ensemble(gamma, &times, 0x1D3A, n_paths)?;
    let mut lines = Vec::new();
    let mut passed = true;
    for t in [50.0, 100.0, 200.0] {
        let lhs = paths
            .iter()
            .map(|p| ou_integral_lhs(1, &prefix(p, t)))
            .collect::<Result<Vec<f64>>>()?;
        let (m, se) = mean_and_se(&lhs);
        // Exact finite-t mean: rhs - γ(1 - e^{-(λ+γ)t}) / (2(λ+γ)² t)
        let s = lambda + gamma;
        let predicted = -gamma * (1.0 - (-s * t).exp()) / (2.0 * s * s * t);
        let residual = m - rhs - predicted;
        let consistent = residual.abs() <= 3.0 * se;
        if t == 200.0 {
            passed &= (m - rhs).abs() <= 0.05 * rhs;
        }
        passed &= consistent;
        lines.push(format!(
            "t={t}: mean {m:.5} (se {se:.1e}), O(1/t) term {predicted:.1e}, residual {residual:.1e}"
        ));
    }
    Ok((passed, format!("rhs {rhs:.5}; {}", lines.join("; "))))
}

fn gamma_estimator(scale: Scale) -> Outcome {
    let gamma = 5.0;
    let n_paths = scale.count(20, 4);
    let times = grid_with_step(500.0, 1e-3)?;
    let paths = sample_ou_ensemble(gamma, &times, 0x6A44A, n_paths)?;
    let est = paths
        .iter()
        .map(|p| estimate_gamma(p, 1))
        .collect::<Result<Vec<f64>>>()?;
    let (m, se) = mean_and_se(&est);
    let rel = (m - gamma).abs() / gamma;
    Ok((
        rel <= 0.10,
        format!("mean estimate {m:.4} (se {se:.3}) over {n_paths} paths; relative error {rel:.3} (tol 0.10)"),
    ))
}

fn deterministic_measure(scale: Scale) -> Outcome {
    let (pe, gamma, s, t, dt) = (1.0, 1.0, 0.5, 1.0, 1e-3);
    let n_real = scale.count(10_000, 2_000);
    let u = GridFunction::from_fn(GRID, |y| y + 0.5)?;
    let ubar = u.mean();
    let eigen = lambda_multiplicative(&u, BoundaryCondition::NoFlux, gamma, pe)?;
    let kappa = eigen.kappa_eff;
    let v_t = t + ((-gamma * t).exp() - 1.0) / gamma;
    let beta_d2 = beta_finite_time(&BetaSpec {
        pe,
        ubar,
        kappa_eff: kappa,
        finite: Some(FiniteTime { t, s, v_t }),
    })?;
    let beta_lead = beta_leading(pe, ubar, kappa);

    let times = grid_with_step(t, dt)?;
    let paths = sample_ou_ensemble(gamma, &times, 0xF163, n_real)?;
    let peak_scale = (2.0 * PI * (s + 2.0 * kappa * t)).sqrt();
    let samples = paths
        .iter()
        .map(|p| Ok(peak_scale * wind_model_solution(0.0, t, p, &eigen, ubar, WindInit::Gaussian { variance: s })?))
        .collect::<Result<Vec<f64>>>()?;
    let est = ensemble_pdf(&samples, 50)?;
    let ks_d2 = est.ks_distance(|z| cdf_deterministic(z.clamp(0.0, 1.0), beta_d2).unwrap_or(f64::NAN));
    let ks_lead = est.ks_distance(|z| cdf_deterministic(z.clamp(0.0, 1.0), beta_lead).unwrap_or(f64::NAN));

    let flow = FlowSpec::multiplicative(Profile::Linear {
        slope: 1.0,
        intercept: 0.5,
    });
    let path = &paths[0];
    let centre = pe * ubar * path.integral_at(t)?;
    let cfg = SimConfig {
        dt,
        n_particles: scale.count(40_000, 8_000),
        seed: 0xBAC4,
        pe,
        ..Default::default()
    };
    let init = InitialData::Gaussian { variance: s };
    let mut worst: f64 = 0.0;
    for dx in [-0.5, 0.0, 0.5] {
        let x = centre + dx;
        let mc = evaluate_point_backward(&flow, Some(path), x, 0.5, t, &init, &cfg)?;
        let wind = wind_model_solution(x, t, path, &eigen, ubar, WindInit::Gaussian { variance: s })?;
        worst = worst.max((mc.value - wind).abs() / wind);
    }
    let passed = ks_d2 < 0.03 && ks_d2 < ks_lead && worst <= 0.03;
    Ok((
        passed,
        format!(
            "KS(finite-time beta = {beta_d2:.4}) = {ks_d2:.4} (tol 0.03), KS(leading beta = {beta_lead:.4}) = {ks_lead:.4}; \
             backward MC vs wind model max relative gap {worst:.3e} (tol 3e-2)"
        ),
    ))
}

fn random_wave(scale: Scale) -> Outcome {
    let n = scale.count(1_000_000, 100_000);
    let samples = sample_random_wave_limit(n, 0x7A7E);
    let est = ensemble_pdf(&samples, 200)?;
    let cdf = RandomWaveCdf::default();
    let ks = est.ks_distance(|z| cdf.cdf(z));
    let var_q = random_wave_moment(2)?;
    let m4_q = random_wave_moment(4)?;
    let var_ok = (est.variance - 0.5).abs() <= 0.02 * 0.5;
    let kurt_ok = (est.kurtosis - 4.5).abs() <= 0.05 * 4.5;
    let quad_ok = (var_q - 0.5).abs() <= 1e-6 && (m4_q - 9.0 / 8.0).abs() <= 1e-6;
    Ok((
        var_ok && kurt_ok && ks < 0.02 && quad_ok,
        format!(
            "sample variance {:.4}, kurtosis {:.3}, KS {ks:.4} over {n} samples; quadrature variance {var_q:.9}, \
             fourth moment {m4_q:.9}",
            est.variance, est.kurtosis
        ),
    ))
}

fn moments() -> Outcome {
    let mut worst_mu: f64 = 0.0;
    for beta in [0.25, 0.5, 1.0, 2.0, 4.0] {
        for n in 1..=6 {
            let q = deterministic_moment_quadrature(n as f64, beta)?;
            worst_mu = worst_mu.max((q - 1.0 / (n as f64 * beta + 1.0).sqrt()).abs());
            worst_mu = worst_mu.max((moment_function(n as f64, beta)? - q).abs());
        }
    }
    let grid: Vec<f64> = (0..50).map(|i| (i as f64 + 0.5) / 50.0).collect();
    let mut worst_rec: f64 = 0.0;
    for beta in [0.5, 1.0, 2.0] {
        let rec = reconstruct_pdf_from_moments(beta, &grid)?;
        for (&z, r) in grid.iter().zip(rec) {
            let f = pdf_deterministic(z, beta)?;
            worst_rec = worst_rec.max((r - f).abs() / f.max(1.0));
        }
    }
    let mut worst_rt: f64 = 0.0;
    for (l2, l11, mass, t) in [(3.0, 1.0, 1.0, 10.0), (2.2, 0.0, 1.0, 1.0), (5.0, 2.9, 0.7, 3.0)] {
        let e = EigenData::new(l2, l11, None, 1.0);
        let m1 = nth_moment_prediction(1, mass, &e, t)?;
        let m2 = nth_moment_prediction(2, mass, &e, t)?;
        let (a, b) = lambda_from_moments(m1, m2, mass, t)?;
        worst_rt = worst_rt.max((a - l2).abs()).max((b - l11).abs());
    }
    Ok((
        worst_mu <= 1e-6 && worst_rec <= 1e-4 && worst_rt <= 1e-10,
        format!(
            "moment function vs quadrature {worst_mu:.2e} (tol 1e-6); Laplace reconstruction {worst_rec:.2e} (tol 1e-4); \
             moment inversion round trip {worst_rt:.2e} (tol 1e-10)"
        ),
    ))
}

fn taylor(scale: Scale) -> Outcome {
    let pe = 2.0;
    let v = GridFunction::from_fn(GRID, |y| y - 0.5)?;
    let k = taylor_steady(&v, pe)?;
    let exact = 1.0 + 1.0 / 60.0;
    let cfg = SimConfig {
        dt: 5e-3,
        n_particles: scale.count(20_000, 4_000),
        seed: 0x7A71,
        pe,
        record_every: 1000,
        ..Default::default()
    };
    let flow = FlowSpec::steady(Profile::Linear {
        slope: 1.0,
        intercept: -0.5,
    });
    let res = simulate_forward(&flow, &InitialData::DeltaLine, 50.0, &cfg, None)?;
    let mc = res.kappa_estimate();
    let rel = (mc - exact).abs() / exact;
    Ok((
        (k - exact).abs() <= 1e-12 && rel <= 0.05,
        format!(
            "quadrature {k:.15} vs {exact:.15}; forward MC Var(x)/(2t) = {mc:.4} ({} particles), relative error {rel:.3}",
            cfg.n_particles
        ),
    ))
}

/// Max interior residual of `-b'' + λ b - a` by second differences.
fn residual(a: &GridFunction, b: &GridFunction, lambda: f64) -> f64 {
    let h = a.step();
    let (av, bv) = (a.values(), b.values());
    (1..av.len() - 1)
        .map(|j| (-(bv[j + 1] - 2.0 * bv[j] + bv[j - 1]) / (h * h) + lambda * bv[j] - av[j]).abs())
        .fold(0.0, f64::max)
}

/// Cholesky-based quadratic form `xᵀ M⁻¹ x` and `ln det M` for SPD `M`.
fn dense_quad_logdet(m: &[Vec<f64>], x: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = m[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (x[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let quad = y.iter().map(|v| v * v).sum();
    let logdet = 2.0 * (0..n).map(|i| l[i][i].ln()).sum::<f64>();
    Some((quad, logdet))
}

fn kernels() -> Outcome {
    // Helmholtz residual order.
    let mut min_order = f64::INFINITY;
    type Case = (BoundaryCondition, f64, fn(f64) -> f64);
    let cases: [Case; 4] = [
        (BoundaryCondition::NoFlux, 2.0, |y| (PI * y).cos() + y * y),
        (BoundaryCondition::NoFlux, 0.0, |y| {
            (PI * y).cos() + (2.0 * PI * y).cos()
        }),
        (BoundaryCondition::Periodic, 5.0, |y| {
            (2.0 * PI * y).sin() + 0.5 * (4.0 * PI * y).cos()
        }),
        (BoundaryCondition::Periodic, 0.0, |y| (2.0 * PI * y).sin()),
    ];
    for (bc, lambda, f) in cases {
        let res = [32, 64, 128, 256]
            .iter()
            .map(|&n| {
                let a = GridFunction::from_fn(n, f)?;
                let b = helmholtz_inverse(&a, lambda, bc)?;
                Ok(residual(&a, &b, lambda))
            })
            .collect::<Result<Vec<f64>>>()?;
        for w in res.windows(2) {
            min_order = min_order.min((w[0] / w[1]).log2());
        }
    }

    // Hermite orthogonality.
    let gh = GaussHermite::new(64)?;
    let n_max = 20;
    let mut gram = vec![vec![0.0; n_max + 1]; n_max + 1];
    for (&z, &w) in gh.nodes.iter().zip(&gh.weights) {
        let h = hermite_all(n_max, z);
        for m in 0..=n_max {
            for n in 0..=n_max {
                gram[m][n] += w * h[m] * h[n];
            }
        }
    }
    let mut worst_orth: f64 = 0.0;
    for (m, row) in gram.iter().enumerate() {
        for (n, g) in row.iter().enumerate() {
            let expected = if m == n { 1.0 } else { 0.0 };
            let scale = (hermite_norm_sq(m) * hermite_norm_sq(n)).sqrt();
            worst_orth = worst_orth.max((g / scale - expected).abs());
        }
    }

    // λ⁽¹,¹⁾ representations on the flow corpus.
    let opts = SpectralOptions {
        grid: 128,
        hermite_order: 8,
        ..Default::default()
    };
    let corpus: Vec<GeneralFlow> = vec![
        GeneralFlow::new("y xi", |y, xi| y * xi),
        GeneralFlow::new("(y + 1/2) xi", |y, xi| (y + 0.5) * xi),
        GeneralFlow::new("cos(pi y) xi", |y, xi| (PI * y).cos() * xi),
        GeneralFlow::new("(1 + y) xi + xi^2 / 2", |y, xi| (1.0 + y) * xi + 0.5 * xi * xi),
        GeneralFlow::new("y xi^3", |y, xi| y * xi.powi(3)),
        GeneralFlow::new("cos(pi y) xi + y^2 xi^2", |y, xi| (PI * y).cos() * xi + y * y * xi * xi),
        GeneralFlow::new("xi^2 - xi", |_, xi| xi * xi - xi),
    ];
    let mut worst_rep: f64 = 0.0;
    let mut energy_ok = true;
    for flow in &corpus {
        for gamma in [0.5, 2.0] {
            let g = general_eigen_data(flow, BoundaryCondition::NoFlux, gamma, 1.0, &opts)?;
            worst_rep = worst_rep.max(g.lambda11.relative_difference);
            energy_ok &= g.eigen.satisfies_energy_bound(1e-10);
        }
    }

    // Sherman–Morrison against a dense factorization.
    let mut worst_sm: f64 = 0.0;
    for (l2, l11) in [(3.0, 1.0), (2.5, 0.0), (4.0, 3.5)] {
        let e = EigenData::new(l2, l11, None, 1.0);
        for n in 1..=6 {
            let x: Vec<f64> = (0..n).map(|i| 0.3 * i as f64 - 0.4).collect();
            let t = 1.7;
            let mass = 0.9;
            let sm = npoint_correlator(&CorrelatorSpec {
                x: x.clone(),
                mass,
                eigen: e,
                t,
            })?;
            let m: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| if i == j { l2 } else { l11 }).collect())
                .collect();
            let (q, ld) = dense_quad_logdet(&m, &x).ok_or_else(|| crate::Error::Singular("dense oracle".into()))?;
            let dense = mass.powi(n) * (-q / (2.0 * t) - 0.5 * n as f64 * (2.0 * PI * t).ln() - 0.5 * ld).exp();
            worst_sm = worst_sm.max((sm - dense).abs() / dense);
        }
    }

    let passed = min_order >= 1.9 && worst_orth <= 1e-10 && worst_rep <= 1e-6 && energy_ok && worst_sm <= 1e-10;
    Ok((
        passed,
        format!(
            "Helmholtz residual order >= {min_order:.3} (need 1.9); Hermite orthogonality {worst_orth:.1e}; \
             lambda11 series vs integral {worst_rep:.1e} over {} flows; correlator vs dense {worst_sm:.1e}",
            corpus.len()
        ),
    ))
}
