//! Pathwise Aris moments for `v = u(y) ξ(t)`, ergodic estimators, the
//! OU time-integral identity and the moment/correlator predictions of the
//! wind model.

use serde::{Deserialize, Serialize};

use crate::eff_diffusivity::EigenData;
use crate::error::{Error, Result};
use crate::ou_process::OuPath;
use crate::spectral::cosine::{cosine_project, eigenvalue};
use crate::spectral::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArisOptions {
    /// Highest Neumann mode retained.
    pub n_max: usize,
    /// Record every this many path steps (the final time is always kept).
    pub record_every: usize,
    /// Store the mode amplitudes at each recorded time.
    pub record_modes: bool,
}

impl Default for ArisOptions {
    fn default() -> Self {
        Self {
            n_max: 64,
            record_every: 1,
            record_modes: false,
        }
    }
}

/// Cross-sectionally averaged moments along one realization of the signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArisRecord {
    pub times: Vec<f64>,
    pub t1bar: Vec<f64>,
    pub t2bar: Vec<f64>,
    /// `(T̄₂ - T̄₁²)/(2t)`, set to 1 at `t = 0`.
    pub kappa_estimate: Vec<f64>,
    /// `a_n(t)` for `n = 1..=n_max` at each recorded time, when requested.
    pub modes: Vec<Vec<f64>>,
}

impl ArisRecord {
    /// `T̄₂ - T̄₁²` at record index `i`.
    pub fn centered(&self, i: usize) -> f64 {
        self.t2bar[i] - self.t1bar[i] * self.t1bar[i]
    }
}

/// `(∫₀¹ e^{-hv} dv, ∫₀¹ v e^{-hv} dv)`.
fn phi12(h: f64) -> (f64, f64) {
    if h < 0.5 {
        let (mut p1, mut p2) = (0.0, 0.0);
        let mut term = 1.0; // (-h)^k / k!
        for k in 0..30 {
            if k > 0 {
                term *= -h / k as f64;
            }
            p1 += term / (k + 1) as f64;
            p2 += term / (k + 2) as f64;
        }
        (p1, p2)
    } else {
        let p1 = -(-h).exp_m1() / h;
        (p1, (p1 - (-h).exp()) / h)
    }
}

/// Exact update of `A(t) = ∫₀ᵗ e^{-λ(t-s)} ξ(s) ds` across one step on which
/// `ξ` is linear.
#[derive(Debug, Clone, Copy)]
struct ModeStep {
    decay: f64,
    w0: f64,
    w1: f64,
}

impl ModeStep {
    fn new(lambda: f64, dt: f64) -> Self {
        let h = lambda * dt;
        let (p1, p2) = phi12(h);
        Self {
            decay: (-h).exp(),
            w0: dt * p2,
            w1: dt * (p1 - p2),
        }
    }

    #[inline]
    fn apply(&self, a: f64, xi0: f64, xi1: f64) -> f64 {
        self.decay * a + self.w0 * xi0 + self.w1 * xi1
    }
}

/// Evolves the Aris moments along `path` for the flow `Pe u(y) ξ(t)` with
/// line-source data of unit mass.
pub fn solve_aris(u: &GridFunction, pe: f64, path: &OuPath, opts: &ArisOptions) -> Result<ArisRecord> {
    if opts.n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    if opts.record_every < 1 {
        return Err(Error::InvalidParameter("record_every must be at least 1".into()));
    }
    let xi = path.values()?;
    let coeffs = cosine_project(u, opts.n_max)?;
    let ubar = coeffs[0];
    let c: Vec<f64> = coeffs[1..].to_vec();
    let c2: Vec<f64> = c.iter().map(|v| v * v).collect();
    let lambdas: Vec<f64> = (1..=opts.n_max).map(eigenvalue).collect();

    let mut amp = vec![0.0; opts.n_max];
    let mut steps: Vec<ModeStep> = Vec::new();
    let mut step_dt = f64::NAN;
    // K(t) = ∫₀ᵗ ξ Σ c_n² A_n ds
    let mut k_int = 0.0;
    let mut q_prev = 0.0;

    let n_points = path.times.len();
    let capacity = n_points / opts.record_every + 2;
    let mut rec = ArisRecord {
        times: Vec::with_capacity(capacity),
        t1bar: Vec::with_capacity(capacity),
        t2bar: Vec::with_capacity(capacity),
        kappa_estimate: Vec::with_capacity(capacity),
        modes: Vec::new(),
    };
    let t0 = path.times[0];
    let push = |i: usize, amp: &[f64], k_int: f64, rec: &mut ArisRecord| {
        let t = path.times[i] - t0;
        let t1 = pe * ubar * path.integral[i];
        let centered = 2.0 * t + 2.0 * pe * pe * k_int;
        rec.times.push(path.times[i]);
        rec.t1bar.push(t1);
        rec.t2bar.push(centered + t1 * t1);
        rec.kappa_estimate
            .push(if t > 0.0 { centered / (2.0 * t) } else { 1.0 });
        if opts.record_modes {
            rec.modes.push(amp.iter().zip(&c).map(|(a, cn)| pe * cn * a).collect());
        }
    };
    push(0, &amp, 0.0, &mut rec);

    for i in 1..n_points {
        let dt = path.times[i] - path.times[i - 1];
        if dt != step_dt {
            steps = lambdas.iter().map(|&l| ModeStep::new(l, dt)).collect();
            step_dt = dt;
        }
        let (x0, x1) = (xi[i - 1], xi[i]);
        let mut q = 0.0;
        for ((a, st), w) in amp.iter_mut().zip(&steps).zip(&c2) {
            *a = st.apply(*a, x0, x1);
            q += w * *a;
        }
        k_int += 0.5 * dt * (x0 * q_prev + x1 * q);
        q_prev = q;
        if i % opts.record_every == 0 || i + 1 == n_points {
            push(i, &amp, k_int, &mut rec);
        }
    }
    Ok(rec)
}

/// Minimum span of the fitting window, in diffusive times.
pub const MIN_WINDOW: f64 = 10.0;

/// Least-squares slope of `(T̄₂ - T̄₁²)/2` against `t` over `window`
/// (default: trailing half of the record).
pub fn kappa_from_realization(record: &ArisRecord, window: Option<(f64, f64)>) -> Result<f64> {
    let t_end = *record.times.last().ok_or(Error::InvalidGrid("empty record".into()))?;
    let t_start = record.times[0];
    let (lo, hi) = window.unwrap_or((0.5 * (t_start + t_end), t_end));
    if lo < t_start || hi > t_end || hi <= lo {
        return Err(Error::InvalidParameter(format!(
            "window [{lo}, {hi}] is not inside the record [{t_start}, {t_end}]"
        )));
    }
    if hi - lo < MIN_WINDOW {
        return Err(Error::WindowTooShort {
            length: hi - lo,
            required: MIN_WINDOW,
        });
    }
    let idx: Vec<usize> = (0..record.times.len())
        .filter(|&i| record.times[i] >= lo && record.times[i] <= hi)
        .collect();
    if idx.len() < 2 {
        return Err(Error::InvalidParameter("window contains fewer than two records".into()));
    }
    let n = idx.len() as f64;
    let tm = idx.iter().map(|&i| record.times[i]).sum::<f64>() / n;
    let ym = idx.iter().map(|&i| 0.5 * record.centered(i)).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &i in &idx {
        let dx = record.times[i] - tm;
        sxy += dx * (0.5 * record.centered(i) - ym);
        sxx += dx * dx;
    }
    Ok(sxy / sxx)
}

/// `∫₀ᵗ ξ(s) A(s) ds` with `A(s) = ∫₀ˢ e^{-λ(s-τ)} ξ(τ) dτ`.
fn weighted_double_integral(lambda: f64, path: &OuPath) -> Result<f64> {
    let xi = path.values()?;
    let mut a = 0.0;
    let mut j = 0.0;
    let mut cached: Option<(f64, ModeStep)> = None;
    for i in 1..xi.len() {
        let dt = path.times[i] - path.times[i - 1];
        let st = match cached {
            Some((d, s)) if d == dt => s,
            _ => {
                let s = ModeStep::new(lambda, dt);
                cached = Some((dt, s));
                s
            }
        };
        let a_new = st.apply(a, xi[i - 1], xi[i]);
        j += 0.5 * dt * (xi[i - 1] * a + xi[i] * a_new);
        a = a_new;
    }
    Ok(j)
}

/// `(1/t) ∫₀ᵗ e^{-n²π²s} ξ(s) ∫₀ˢ e^{n²π²τ} ξ(τ) dτ ds` along `path`.
pub fn ou_integral_lhs(n: usize, path: &OuPath) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("mode index must be at least 1".into()));
    }
    let t = path.t_end() - path.times[0];
    if t <= 0.0 {
        return Err(Error::PathTooShort {
            t,
            required: f64::MIN_POSITIVE,
        });
    }
    Ok(weighted_double_integral(eigenvalue(n), path)? / t)
}

/// Long-time limit `1/2 - n²π²/(2(γ + n²π²))` of [`ou_integral_lhs`].
pub fn ou_integral_rhs(n: usize, gamma: f64) -> f64 {
    let l = eigenvalue(n);
    if gamma.is_infinite() {
        return 0.5;
    }
    0.5 - l / (2.0 * (gamma + l))
}

/// Both sides of the OU time-integral identity.
pub fn ou_integral_identity(n: usize, gamma: f64, path: &OuPath) -> Result<(f64, f64)> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
    }
    let t = path.t_end() - path.times.first().copied().unwrap_or(0.0);
    let required = (50.0 / gamma).max(50.0 / eigenvalue(n.max(1)));
    if t < required {
        return Err(Error::PathTooShort { t, required });
    }
    Ok((ou_integral_lhs(n, path)?, ou_integral_rhs(n, gamma)))
}

/// Inverts the identity: `γ̂ = 2n²π² I/(1 - 2I)` for `I ∈ (0, 1/2)`.
pub fn gamma_from_integral(lhs: f64, n: usize) -> Result<f64> {
    if !(lhs > 0.0 && lhs < 0.5) {
        return Err(Error::OutOfDomain {
            value: lhs,
            domain: "(0, 1/2)",
        });
    }
    Ok(2.0 * eigenvalue(n) * lhs / (1.0 - 2.0 * lhs))
}

/// Estimates the damping rate from one path.
pub fn estimate_gamma(path: &OuPath, n: usize) -> Result<f64> {
    gamma_from_integral(ou_integral_lhs(n, path)?, n)
}

/// Evaluation points and data for the `N`-point correlator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSpec {
    pub x: Vec<f64>,
    /// `∫₀¹ T̂₀(0, y) dy`.
    pub mass: f64,
    pub eigen: EigenData,
    pub t: f64,
}

/// `Ψ_N(x) = mass^N exp(-x Λ₁⁻¹ xᵀ/(2t)) / ((2πt)^{N/2} √det Λ₁)` with
/// `Λ₁ = (λ⁽²⁾ - λ⁽¹,¹⁾) I + λ⁽¹,¹⁾ e eᵀ`, inverted in `O(N)`.
pub fn npoint_correlator(spec: &CorrelatorSpec) -> Result<f64> {
    let n = spec.x.len();
    if n == 0 {
        return Err(Error::InvalidParameter("correlator needs at least one point".into()));
    }
    if !(spec.t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {} must be positive", spec.t)));
    }
    let (l2, l11) = (spec.eigen.lambda2, spec.eigen.lambda11);
    let d = l2 - l11;
    let nf = n as f64;
    let rank_one = d + nf * l11;
    if !(d > 0.0) || !(rank_one > 0.0) {
        return Err(Error::Singular(format!("lambda2 = {l2}, lambda11 = {l11}, N = {n}")));
    }
    let sum: f64 = spec.x.iter().sum();
    let sum_sq: f64 = spec.x.iter().map(|v| v * v).sum();
    let quad = (sum_sq - l11 * sum * sum / rank_one) / d;
    // log det = N ln d + ln(1 + N λ⁽¹,¹⁾/d)
    let log_det = nf * d.ln() + (rank_one / d).ln();
    let log_val = nf * spec.mass.abs().ln()
        - quad / (2.0 * spec.t)
        - 0.5 * nf * (2.0 * std::f64::consts::PI * spec.t).ln()
        - 0.5 * log_det;
    let sign = if spec.mass < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * log_val.exp())
}

/// `⟨T^N(0, ·, t)⟩ = mass^N (4πκ_eff t)^{-N/2} (1 + Nβ)^{-1/2}`.
pub fn nth_moment_prediction(n: usize, mass: f64, eigen: &EigenData, t: f64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    npoint_correlator(&CorrelatorSpec {
        x: vec![0.0; n],
        mass,
        eigen: *eigen,
        t,
    })
}

/// Recovers `(λ⁽²⁾, λ⁽¹,¹⁾)` from the first two moments at `x = 0`.
pub fn lambda_from_moments(m1: f64, m2: f64, mass: f64, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    if !(m1 > 0.0 && m2 > 0.0) || mass == 0.0 {
        return Err(Error::InconsistentMoments(format!(
            "moments must be positive: m1 = {m1}, m2 = {m2}"
        )));
    }
    let two_pi_t = 2.0 * std::f64::consts::PI * t;
    let lambda2 = mass * mass / (two_pi_t * m1 * m1);
    let root = mass * mass / (two_pi_t * m2);
    let mut sq = lambda2 * lambda2 - root * root;
    if sq < 0.0 {
        if sq > -1e-12 * lambda2 * lambda2 {
            sq = 0.0;
        } else {
            return Err(Error::InconsistentMoments(format!(
                "second moment {m2} implies a negative lambda11^2 = {sq}"
            )));
        }
    }
    Ok((lambda2, sq.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou_process::{sample_ou_path, uniform_grid};

    fn zero_path(t_end: f64, n: usize) -> OuPath {
        let times = uniform_grid(t_end, n).unwrap();
        let len = times.len();
        OuPath {
            times,
            values: Some(vec![0.0; len]),
            integral: vec![0.0; len],
            gamma: Some(1.0),
        }
    }

    #[test]
    fn phi_branches_agree() {
        let (a1, a2) = phi12(0.499_999_9);
        let (b1, b2) = phi12(0.500_000_1);
        assert!((a1 - b1).abs() < 1e-7 && (a2 - b2).abs() < 1e-7);
        let (p1, p2) = phi12(0.0);
        assert_eq!((p1, p2), (1.0, 0.5));
    }

    #[test]
    fn mode_step_is_exact_for_linear_signal() {
        // ξ(s) = s on [0, 1]: A(1) = ∫₀¹ e^{-λ(1-s)} s ds
        let l: f64 = 3.0;
        let a = ModeStep::new(l, 1.0).apply(0.0, 0.0, 1.0);
        let exact = 1.0 / l - (1.0 - (-l).exp()) / (l * l);
        assert!((a - exact).abs() < 1e-15);
    }

    #[test]
    fn pure_diffusion() {
        let u = GridFunction::from_fn(64, |y| y).unwrap();
        let rec = solve_aris(
            &u,
            1.0,
            &zero_path(20.0, 200),
            &ArisOptions {
                n_max: 8,
                ..Default::default()
            },
        )
        .unwrap();
        for i in 0..rec.times.len() {
            assert_eq!(rec.t1bar[i], 0.0);
            assert!((rec.t2bar[i] - 2.0 * rec.times[i]).abs() < 1e-12);
            assert!((rec.kappa_estimate[i] - 1.0).abs() < 1e-12);
        }
        let k = kappa_from_realization(&rec, None).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_flow_has_no_drift() {
        let u = GridFunction::from_fn(64, |y| (std::f64::consts::PI * y).cos()).unwrap();
        let times = uniform_grid(5.0, 500).unwrap();
        let path = sample_ou_path(2.0, &times, 4).unwrap();
        let rec = solve_aris(
            &u,
            2.0,
            &path,
            &ArisOptions {
                n_max: 8,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rec.t1bar.iter().all(|v| v.abs() < 1e-14));
        for i in 0..rec.times.len() {
            assert!(rec.centered(i) >= 0.0);
        }
    }

    #[test]
    fn record_stride_and_modes() {
        let u = GridFunction::from_fn(32, |y| y).unwrap();
        let times = uniform_grid(1.0, 100).unwrap();
        let path = sample_ou_path(1.0, &times, 1).unwrap();
        let opts = ArisOptions {
            n_max: 4,
            record_every: 30,
            record_modes: true,
        };
        let rec = solve_aris(&u, 1.0, &path, &opts).unwrap();
        assert_eq!(rec.times.len(), 5); // 0, 30, 60, 90, 100
        assert_eq!(rec.modes.len(), 5);
        assert_eq!(rec.modes[0].len(), 4);
        assert_eq!(*rec.times.last().unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        let u = GridFunction::from_fn(32, |y| y).unwrap();
        let p = zero_path(20.0, 200);
        assert!(solve_aris(
            &u,
            1.0,
            &p,
            &ArisOptions {
                n_max: 0,
                ..Default::default()
            }
        )
        .is_err());
        let mut white = p.clone();
        white.values = None;
        assert!(matches!(
            solve_aris(&u, 1.0, &white, &ArisOptions::default()),
            Err(Error::ValuesUnavailable)
        ));
        let rec = solve_aris(
            &u,
            1.0,
            &p,
            &ArisOptions {
                n_max: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(
            kappa_from_realization(&rec, Some((15.0, 20.0))),
            Err(Error::WindowTooShort { .. })
        ));
        assert!(ou_integral_identity(1, 1.0, &zero_path(10.0, 10)).is_err());
    }

    #[test]
    fn identity_rhs_limits() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((ou_integral_rhs(1, pi2) - 0.25).abs() < 1e-15);
        assert_eq!(ou_integral_rhs(1, f64::INFINITY), 0.5);
        assert_eq!(ou_integral_rhs(1, 0.0), 0.0);
    }

    #[test]
    fn gamma_inversion() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((gamma_from_integral(0.25, 1).unwrap() - pi2).abs() < 1e-12);
        assert!(gamma_from_integral(0.5, 1).is_err());
        assert!(gamma_from_integral(-0.1, 1).is_err());
        assert!(gamma_from_integral(0.49999, 1).unwrap() > gamma_from_integral(0.4999, 1).unwrap());
    }

    #[test]
    fn moment_predictions() {
        let e = EigenData::new(4.0, 2.0, Some(1.0), 1.0); // β = 1
        assert_eq!(nth_moment_prediction(0, 1.0, &e, 1.0).unwrap(), 1.0);
        let t = 2.0;
        let k = e.kappa_eff;
        let m3 = nth_moment_prediction(3, 1.0, &e, t).unwrap();
        let rescaled = m3 * (4.0 * std::f64::consts::PI * k * t).powf(1.5);
        assert!((rescaled - 0.5).abs() < 1e-14);
        let single = npoint_correlator(&CorrelatorSpec {
            x: vec![0.7],
            mass: 1.0,
            eigen: e,
            t,
        })
        .unwrap();
        let var = e.lambda2 * t;
        let exact = (-0.49 / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        assert!((single - exact).abs() < 1e-15);
    }

    #[test]
    fn moments_round_trip() {
        for (l2, l11) in [(3.0, 1.0), (2.5, 0.0)] {
            let e = EigenData::new(l2, l11, None, 1.0);
            let m1 = nth_moment_prediction(1, 1.0, &e, 10.0).unwrap();
            let m2 = nth_moment_prediction(2, 1.0, &e, 10.0).unwrap();
            let (a, b) = lambda_from_moments(m1, m2, 1.0, 10.0).unwrap();
            assert!((a - l2).abs() < 1e-10 && (b - l11).abs() < 1e-10, "{a} {b}");
        }
        assert!(lambda_from_moments(1.0, 0.01, 1.0, 1.0).is_err());
    }

    #[test]
    fn singular_covariance() {
        let e = EigenData::new(1.0, 1.0, None, 1.0);
        assert!(matches!(
            nth_moment_prediction(2, 1.0, &e, 1.0),
            Err(Error::Singular(_))
        ));
    }
}
