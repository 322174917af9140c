//! Subcommand bodies. Each returns the files to write and a JSON summary
//! for stdout.

use std::f64::consts::PI;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use randshear::aris::{estimate_gamma, kappa_from_realization, ou_integral_lhs, solve_aris, ArisOptions, MIN_WINDOW};
use randshear::eff_diffusivity::{
    eigen_data, general_eigen_data, lambda_multiplicative, lambda_white, taylor_steady, EigenData, Noise,
    SpectralOptions,
};
use randshear::flow::{GeneralFlow, Profile};
use randshear::invariant_measure::{
    beta_finite_time, beta_leading, cdf_deterministic, BetaSpec, FiniteTime, RandomWaveCdf,
};
use randshear::monte_carlo::{
    sample_random_wave_limit, simulate_forward_ensemble, wind_model_solution, InitialData, SimConfig, WindInit,
};
use randshear::ou_process::{grid_with_step, sample_ou_ensemble, sample_ou_path};
use randshear::rng::derive_seed;
use randshear::spectral::helmholtz::BoundaryCondition;
use randshear::validation::{run_all, Scale};

use crate::config::{Method, NoiseKind, PdfMode, RunConfig};
use crate::output::Outputs;

pub struct Run {
    pub outputs: Outputs,
    pub summary: Value,
    pub failed: bool,
}

impl Run {
    fn ok(outputs: Outputs, summary: Value) -> Self {
        Self {
            outputs,
            summary,
            failed: false,
        }
    }
}

fn spectral_options(cfg: &RunConfig) -> SpectralOptions {
    let mut o = SpectralOptions {
        grid: cfg.grid(),
        ..Default::default()
    };
    if let Some(h) = cfg.hermite_order {
        o.hermite_order = h;
        o.quadrature_nodes = o.quadrature_nodes.max(2 * h);
    }
    o
}

fn predicted_eigen(cfg: &RunConfig) -> Result<EigenData> {
    let noise = match cfg.noise() {
        NoiseKind::White => Noise::White,
        _ => Noise::OrnsteinUhlenbeck { gamma: cfg.gamma() },
    };
    Ok(eigen_data(&cfg.flow_spec()?, noise, cfg.pe(), &spectral_options(cfg))?)
}

#[derive(Serialize)]
struct KappaRecord {
    flow: String,
    noise: NoiseKind,
    method: Method,
    gamma: Option<f64>,
    pe: f64,
    bc: BoundaryCondition,
    lambda2: f64,
    lambda11: f64,
    kappa_eff: f64,
    beta: f64,
    diagnostics: Option<Value>,
    limits: Value,
}

pub fn kappa_eff(cfg: &RunConfig) -> Result<Run> {
    let pe = cfg.pe();
    let bc = cfg.bc();
    let noise = cfg.noise();
    let method = cfg.method.unwrap_or(Method::ClosedForm);
    let profile = cfg.profile()?;
    let u = profile.to_grid(cfg.grid())?;
    let opts = spectral_options(cfg);
    let gamma = (noise == NoiseKind::Ou).then(|| cfg.gamma());

    let (eigen, diagnostics) = match (noise, method) {
        (NoiseKind::Ou, Method::Hermite) => {
            let p = profile.clone();
            let flow = GeneralFlow::new("profile * xi", move |y, xi| p.eval(y) * xi);
            let g = general_eigen_data(&flow, bc, cfg.gamma(), pe, &opts)?;
            let diag = json!({
                "lambda2_terms": g.lambda2.terms,
                "truncation": g.lambda2.truncation,
                "last_term_relative": g.lambda2.last_term_relative,
                "lambda11_series": g.lambda11.series,
                "lambda11_integral": g.lambda11.integral,
                "lambda11_relative_difference": g.lambda11.relative_difference,
                "galilean_shift": g.shift,
            });
            (g.eigen, Some(diag))
        }
        (_, Method::Hermite) => bail!("the hermite method needs OU noise"),
        (NoiseKind::Ou, Method::ClosedForm) => (lambda_multiplicative(&u, bc, cfg.gamma(), pe)?, None),
        (NoiseKind::White, Method::ClosedForm) => (lambda_white(&u, pe)?, None),
        (NoiseKind::Steady, Method::ClosedForm) => (predicted_eigen(cfg)?, None),
    };
    let mut limits = serde_json::Map::new();
    if noise != NoiseKind::Steady {
        limits.insert("white_noise_kappa_eff".into(), json!(lambda_white(&u, pe)?.kappa_eff));
    }
    if bc == BoundaryCondition::NoFlux {
        limits.insert("steady_kappa_eff".into(), json!(taylor_steady(&u, pe)?));
    }
    let record = KappaRecord {
        flow: cfg.flow.clone().unwrap_or_else(|| "linear".into()),
        noise,
        method,
        gamma,
        pe,
        bc,
        lambda2: eigen.lambda2,
        lambda11: eigen.lambda11,
        kappa_eff: eigen.kappa_eff,
        beta: eigen.beta(),
        diagnostics,
        limits: Value::Object(limits),
    };
    let mut out = Outputs::default();
    out.json("kappa_eff.json", &record)?;
    Ok(Run::ok(out, serde_json::to_value(&record)?))
}

#[derive(Serialize)]
struct MomentRow {
    realization: usize,
    t: f64,
    mean: f64,
    variance: f64,
}

#[derive(Serialize)]
struct ProfileRow {
    realization: usize,
    y_center: f64,
    count: usize,
    mean_x: f64,
    mean_x2: f64,
}

pub fn simulate(cfg: &RunConfig) -> Result<Run> {
    if cfg.noise() == NoiseKind::White {
        bail!("particle simulation needs OU or steady flows; white noise has no sample paths here");
    }
    let t_end = cfg.t_end.unwrap_or(10.0);
    let sim = SimConfig {
        dt: cfg.dt.unwrap_or(1e-3),
        n_particles: cfg.particles.unwrap_or(10_000),
        n_realizations: cfg.realizations.unwrap_or(1),
        seed: cfg.seed(),
        bc: cfg.bc(),
        pe: cfg.pe(),
        record_every: cfg.record_every.unwrap_or(100),
        ..Default::default()
    };
    let init = match cfg.init_variance {
        Some(variance) => InitialData::Gaussian { variance },
        None => InitialData::DeltaLine,
    };
    let flow = cfg.flow_spec()?;
    let paths = if flow.needs_signal() {
        let times = grid_with_step(t_end, sim.dt)?;
        sample_ou_ensemble(cfg.gamma(), &times, derive_seed(sim.seed, 1), sim.n_realizations)?
    } else {
        Vec::new()
    };
    let results = simulate_forward_ensemble(&flow, &init, t_end, &sim, &paths)?;

    let mut moments = Vec::new();
    let mut profiles = Vec::new();
    let mut records = Vec::new();
    for (r, res) in results.iter().enumerate() {
        for i in 0..res.times.len() {
            moments.push(MomentRow {
                realization: r,
                t: res.times[i],
                mean: res.mean[i],
                variance: res.variance[i],
            });
        }
        for b in &res.y_profile {
            profiles.push(ProfileRow {
                realization: r,
                y_center: b.y_center,
                count: b.count,
                mean_x: b.mean_x,
                mean_x2: b.mean_x2,
            });
        }
        let last = res.times.len() - 1;
        records.push(json!({
            "realization": r,
            "t_end": res.times[last],
            "mean": res.mean[last],
            "variance": res.variance[last],
            "kappa_estimate": res.kappa_estimate(),
            "max_resolved_mode": res.max_resolved_mode,
        }));
    }
    let mean_kappa = results.iter().map(|r| r.kappa_estimate()).sum::<f64>() / results.len() as f64;
    let predicted = predicted_eigen(cfg).ok().map(|e| e.kappa_eff);
    let mut out = Outputs::default();
    out.csv("simulate_moments.csv", moments)?;
    out.csv("simulate_profile.csv", profiles)?;
    out.ndjson("simulate.ndjson", records)?;
    let summary = json!({
        "realizations": results.len(),
        "particles": sim.n_particles,
        "kappa_estimate_mean": mean_kappa,
        "kappa_eff_predicted": predicted,
    });
    out.json("simulate_summary.json", &summary)?;
    Ok(Run::ok(out, summary))
}

#[derive(Serialize)]
struct ArisRow {
    realization: usize,
    t: f64,
    t1bar: f64,
    t2bar: f64,
    centered: f64,
    kappa_estimate: f64,
}

pub fn aris(cfg: &RunConfig) -> Result<Run> {
    if cfg.noise() != NoiseKind::Ou {
        bail!("the Aris solver runs on OU paths; set noise to ou");
    }
    let t_end = cfg.t_end.unwrap_or(200.0);
    let dt = cfg.dt.unwrap_or(1e-2);
    let gamma = cfg.gamma();
    let pe = cfg.pe();
    let n_real = cfg.realizations.unwrap_or(1);
    let u = cfg.profile()?.to_grid(cfg.grid())?;
    if cfg.bc() != BoundaryCondition::NoFlux {
        bail!("the Aris solver uses the no-flux cosine basis");
    }
    let opts = ArisOptions {
        n_max: cfg.n_max.unwrap_or(64),
        record_every: cfg.record_every.unwrap_or(10),
        record_modes: false,
    };
    let times = grid_with_step(t_end, dt)?;
    let seed = cfg.seed();
    let records = (0..n_real)
        .into_par_iter()
        .map(|r| {
            let path = sample_ou_path(gamma, &times, derive_seed(seed, r as u64))?;
            Ok(solve_aris(&u, pe, &path, &opts)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let kappa = lambda_multiplicative(&u, BoundaryCondition::NoFlux, gamma, pe)?.kappa_eff;

    let mut rows = Vec::new();
    let mut per = Vec::new();
    for (r, rec) in records.iter().enumerate() {
        for i in 0..rec.times.len() {
            rows.push(ArisRow {
                realization: r,
                t: rec.times[i],
                t1bar: rec.t1bar[i],
                t2bar: rec.t2bar[i],
                centered: rec.centered(i),
                kappa_estimate: rec.kappa_estimate[i],
            });
        }
        let windowed = if t_end >= 2.0 * MIN_WINDOW {
            Some(kappa_from_realization(rec, None)?)
        } else {
            None
        };
        per.push(json!({
            "realization": r,
            "kappa_final": rec.kappa_estimate.last(),
            "kappa_windowed": windowed,
        }));
    }
    let finals: Vec<f64> = records
        .iter()
        .filter_map(|r| r.kappa_estimate.last().copied())
        .collect();
    let within = finals.iter().filter(|k| ((*k - kappa) / kappa).abs() <= 0.05).count();
    let mut out = Outputs::default();
    out.csv("aris.csv", rows)?;
    out.ndjson("aris.ndjson", per)?;
    let summary = json!({
        "kappa_eff": kappa,
        "realizations": n_real,
        "kappa_final_mean": finals.iter().sum::<f64>() / finals.len() as f64,
        "within_5_percent": within,
    });
    out.json("aris_summary.json", &summary)?;
    Ok(Run::ok(out, summary))
}

#[derive(Serialize)]
struct PdfRow {
    z_lo: f64,
    z_hi: f64,
    z_mid: f64,
    analytic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic_leading: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical: Option<f64>,
}

/// Bin-averaged density from a CDF, so the table integrates exactly.
fn bin_average(cdf: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    Ok((cdf(hi)? - cdf(lo)?) / (hi - lo))
}

fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<f64>, usize) {
    let dz = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut outside = 0;
    for &s in samples {
        let k = ((s - lo) / dz).floor();
        if k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        } else if s == hi {
            counts[bins - 1] += 1;
        } else {
            outside += 1;
        }
    }
    let n = samples.len() as f64;
    (counts.into_iter().map(|c| c as f64 / (n * dz)).collect(), outside)
}

fn ks_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn pdf(cfg: &RunConfig) -> Result<Run> {
    let bins = cfg.bins.unwrap_or(200);
    let mode = cfg.pdf_mode.unwrap_or(PdfMode::Deterministic);
    let mut out = Outputs::default();
    let (rows, summary) = match mode {
        PdfMode::Deterministic => {
            let beta = cfg.beta.unwrap_or(1.0);
            let cdf = move |z: f64| Ok(cdf_deterministic(z, beta)?);
            let dz = 1.0 / bins as f64;
            let rows = (0..bins)
                .map(|i| {
                    let (lo, hi) = (i as f64 * dz, (i + 1) as f64 * dz);
                    Ok(PdfRow {
                        z_lo: lo,
                        z_hi: hi,
                        z_mid: 0.5 * (lo + hi),
                        analytic: bin_average(&cdf, lo, hi)?,
                        analytic_leading: None,
                        empirical: None,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let total: f64 = rows.iter().map(|r| r.analytic * dz).sum();
            (
                rows,
                json!({ "mode": mode, "beta": beta, "bins": bins, "integral": total }),
            )
        }
        PdfMode::RandomWave => {
            let z_max = 6.0;
            let table = RandomWaveCdf::default();
            let cdf = |z: f64| Ok(table.cdf(z));
            let n = cfg.samples.unwrap_or(0);
            let samples = (n > 0).then(|| sample_random_wave_limit(n, cfg.seed()));
            let hist = samples.as_ref().map(|s| histogram(s, -z_max, z_max, bins));
            let dz = 2.0 * z_max / bins as f64;
            let rows = (0..bins)
                .map(|i| {
                    let (lo, hi) = (-z_max + i as f64 * dz, -z_max + (i + 1) as f64 * dz);
                    Ok(PdfRow {
                        z_lo: lo,
                        z_hi: hi,
                        z_mid: 0.5 * (lo + hi),
                        analytic: bin_average(&cdf, lo, hi)?,
                        analytic_leading: None,
                        empirical: hist.as_ref().map(|h| h.0[i]),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let total: f64 = rows.iter().map(|r| r.analytic * dz).sum();
            let ks = samples.map(|mut s| {
                s.sort_by(f64::total_cmp);
                ks_sorted(&s, |z| table.cdf(z))
            });
            (
                rows,
                json!({ "mode": mode, "bins": bins, "integral": total, "samples": n, "ks_distance": ks }),
            )
        }
        PdfMode::Wind => wind_pdf(cfg, bins)?,
    };
    out.csv("pdf.csv", rows)?;
    out.json("pdf_summary.json", &summary)?;
    Ok(Run::ok(out, summary))
}

fn wind_pdf(cfg: &RunConfig, bins: usize) -> Result<(Vec<PdfRow>, Value)> {
    let gamma = cfg.gamma();
    let pe = cfg.pe();
    let s = cfg.init_variance.unwrap_or(0.5);
    let t = cfg.t_end.unwrap_or(1.0);
    let dt = cfg.dt.unwrap_or(1e-3);
    let n_real = cfg.realizations.unwrap_or(10_000);
    let profile = match &cfg.flow {
        Some(f) => crate::config::parse_flow(f, cfg.grid())?,
        None => Profile::Linear {
            slope: 1.0,
            intercept: 0.5,
        },
    };
    let u = profile.to_grid(cfg.grid())?;
    let ubar = u.mean();
    let eigen = lambda_multiplicative(&u, cfg.bc(), gamma, pe)?;
    let kappa = eigen.kappa_eff;
    let v_t = t + ((-gamma * t).exp() - 1.0) / gamma;
    let beta = beta_finite_time(&BetaSpec {
        pe,
        ubar,
        kappa_eff: kappa,
        finite: Some(FiniteTime { t, s, v_t }),
    })?;
    let beta_lead = beta_leading(pe, ubar, kappa);
    let times = grid_with_step(t, dt)?;
    let seed = cfg.seed();
    let scale = (2.0 * PI * (s + 2.0 * kappa * t)).sqrt();
    let mut samples = (0..n_real)
        .into_par_iter()
        .map(|r| {
            let path = sample_ou_path(gamma, &times, derive_seed(seed, r as u64))?;
            Ok(scale * wind_model_solution(0.0, t, &path, &eigen, ubar, WindInit::Gaussian { variance: s })?)
        })
        .collect::<Result<Vec<f64>>>()
        .context("wind-model ensemble")?;
    let (hist, outside) = histogram(&samples, 0.0, 1.0, bins);
    let cdf = move |z: f64| Ok(cdf_deterministic(z, beta)?);
    let cdf_lead = move |z: f64| Ok(cdf_deterministic(z, beta_lead)?);
    let dz = 1.0 / bins as f64;
    let rows = (0..bins)
        .map(|i| {
            let (lo, hi) = (i as f64 * dz, (i + 1) as f64 * dz);
            Ok(PdfRow {
                z_lo: lo,
                z_hi: hi,
                z_mid: 0.5 * (lo + hi),
                analytic: bin_average(&cdf, lo, hi)?,
                analytic_leading: Some(bin_average(&cdf_lead, lo, hi)?),
                empirical: Some(hist[i]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    samples.sort_by(f64::total_cmp);
    let ks = ks_sorted(&samples, |z| {
        cdf_deterministic(z.clamp(0.0, 1.0), beta).unwrap_or(f64::NAN)
    });
    let ks_lead = ks_sorted(&samples, |z| {
        cdf_deterministic(z.clamp(0.0, 1.0), beta_lead).unwrap_or(f64::NAN)
    });
    let summary = json!({
        "mode": PdfMode::Wind,
        "bins": bins,
        "realizations": n_real,
        "kappa_eff": kappa,
        "beta_finite_time": beta,
        "beta_leading": beta_lead,
        "ks_finite_time": ks,
        "ks_leading": ks_lead,
        "outside_range": outside,
    });
    Ok((rows, summary))
}

pub fn estimate_gamma_cmd(cfg: &RunConfig) -> Result<Run> {
    let gamma = cfg.gamma.unwrap_or(5.0);
    let t_end = cfg.t_end.unwrap_or(500.0);
    let dt = cfg.dt.unwrap_or(1e-3);
    let n_paths = cfg.paths.unwrap_or(20);
    let n = cfg.mode_index.unwrap_or(1);
    let times = grid_with_step(t_end, dt)?;
    let seed = cfg.seed();
    let per = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let path = sample_ou_path(gamma, &times, derive_seed(seed, i as u64))?;
            Ok((ou_integral_lhs(n, &path)?, estimate_gamma(&path, n)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let est: Vec<f64> = per.iter().map(|p| p.1).collect();
    let m = est.iter().sum::<f64>() / est.len() as f64;
    let se = if est.len() > 1 {
        (est.iter().map(|x| (x - m).powi(2)).sum::<f64>() / ((est.len() - 1) * est.len()) as f64).sqrt()
    } else {
        f64::NAN
    };
    let mut out = Outputs::default();
    out.ndjson(
        "estimate_gamma.ndjson",
        per.iter()
            .enumerate()
            .map(|(i, (lhs, g))| json!({ "path": i, "lhs": lhs, "gamma_hat": g })),
    )?;
    let summary = json!({
        "gamma": gamma,
        "paths": n_paths,
        "t_end": t_end,
        "mode_index": n,
        "mean": m,
        "std_error": if se.is_finite() { json!(se) } else { Value::Null },
        "relative_error": (m - gamma).abs() / gamma,
    });
    out.json("estimate_gamma_summary.json", &summary)?;
    Ok(Run::ok(out, summary))
}

pub fn validate(quick: bool) -> Result<Run> {
    let scale = if quick { Scale::Quick } else { Scale::Full };
    let reports = run_all(scale);
    for r in &reports {
        println!("{}", r.line());
    }
    let failures = reports.iter().filter(|r| !r.passed).count();
    let mut out = Outputs::default();
    out.ndjson("validation.ndjson", &reports)?;
    Ok(Run {
        outputs: out,
        summary: json!({ "scale": scale, "criteria": reports.len(), "failed": failures }),
        failed: failures > 0,
    })
}
