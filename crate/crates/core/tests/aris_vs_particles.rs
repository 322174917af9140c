use randshear::aris::{solve_aris, ArisOptions};
use randshear::flow::{FlowSpec, Profile};
use randshear::monte_carlo::{simulate_forward, InitialData, SimConfig};
use randshear::ou_process::{grid_with_step, sample_ou_path};
use randshear::spectral::GridFunction;

#[test]
fn aris_moments_agree_with_particles_on_one_path() {
    let (gamma, pe, t, dt) = (1.0, 3.0, 4.0, 2e-3);
    let times = grid_with_step(t, dt).unwrap();
    let path = sample_ou_path(gamma, &times, 21).unwrap();
    let u = GridFunction::from_fn(256, |y| y).unwrap();
    let rec = solve_aris(&u, pe, &path, &ArisOptions::default()).unwrap();
    let n = rec.times.len() - 1;

    let cfg = SimConfig {
        dt,
        n_particles: 40_000,
        seed: 9,
        pe,
        record_every: 500,
        ..Default::default()
    };
    let flow = FlowSpec::multiplicative(Profile::linear());
    let mc = simulate_forward(&flow, &InitialData::DeltaLine, t, &cfg, Some(&path)).unwrap();
    let k = mc.times.len() - 1;

    let sd_mean = (mc.variance[k] / cfg.n_particles as f64).sqrt();
    assert!((mc.mean[k] - rec.t1bar[n]).abs() < 4.0 * sd_mean);
    // relative sd of a sample variance is about √(2/n) for near-Gaussian x
    let rel = (mc.variance[k] / rec.centered(n) - 1.0).abs();
    assert!(rel < 4.0 * (2.0 / cfg.n_particles as f64).sqrt(), "relative gap {rel}");
}
