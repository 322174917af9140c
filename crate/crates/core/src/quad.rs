//! Double-exponential quadrature for integrands with endpoint singularities.

use crate::error::{Error, Result};

const MAX_LEVEL: u32 = 10;

/// Tanh–sinh rule on `[a, b]`. The integrand may be singular at either end;
/// abscissae are formed so that points near `a` are exact offsets from `a`.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let half = 0.5 * (b - a);
    let t_max = 5.0;
    let eval = |t: f64| -> f64 {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let du = std::f64::consts::FRAC_PI_2 * t.cosh();
        let ch = u.cosh();
        let w = half * du / (ch * ch);
        if w == 0.0 {
            return 0.0;
        }
        // distance from the nearer endpoint: (b - a) / (1 + e^{2|u|})
        let d = (b - a) / (1.0 + (2.0 * u.abs()).exp());
        let x = if t <= 0.0 { a + d } else { b - d };
        if d == 0.0 || x == a || x == b {
            return 0.0;
        }
        w * f(x)
    };
    refine(eval, -t_max, t_max, tol)
}

/// Exp–sinh rule on `[a, ∞)`; the integrand may be singular at `a`.
pub fn exp_sinh(f: impl Fn(f64) -> f64, a: f64, tol: f64) -> Result<f64> {
    let eval = |t: f64| -> f64 {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let d = u.exp();
        if d == 0.0 || !d.is_finite() {
            return 0.0;
        }
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() * d;
        let v = f(a + d);
        if v == 0.0 {
            0.0
        } else {
            w * v
        }
    };
    refine(eval, -4.8, 4.0, tol)
}

fn refine(g: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let mut h = 0.5;
    let mut n = ((hi - lo) / h).ceil() as i64;
    let mut sum: f64 = (0..=n).map(|i| g(lo + i as f64 * h)).sum();
    let mut prev = sum * h;
    for _ in 0..MAX_LEVEL {
        h *= 0.5;
        n *= 2;
        sum += (1..n).step_by(2).map(|i| g(lo + i as f64 * h)).sum::<f64>();
        let cur = sum * h;
        if !cur.is_finite() {
            return Err(Error::Numerical("non-finite quadrature sum".into()));
        }
        if (cur - prev).abs() <= tol * cur.abs().max(f64::MIN_POSITIVE) {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}
