//! Modified Bessel function of the second kind, order zero.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `K₀(x)` for `x > 0`.
pub fn bessel_k0(x: f64) -> f64 {
    if x <= 2.0 {
        k0_series(x)
    } else {
        (-x).exp() * k0_continued_fraction(x)
    }
}

/// `eˣ K₀(x)`, finite for large `x`.
pub fn bessel_k0_scaled(x: f64) -> f64 {
    if x <= 2.0 {
        x.exp() * k0_series(x)
    } else {
        k0_continued_fraction(x)
    }
}

fn k0_series(x: f64) -> f64 {
    if x <= 0.0 {
        return if x == 0.0 { f64::INFINITY } else { f64::NAN };
    }
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term < 1e-18 * i0 {
            break;
        }
    }
    -((0.5 * x).ln() + EULER_GAMMA) * i0 + tail
}

/// Steed's continued fraction for `eˣ K₀(x)`, effective for `x ≳ 2`.
fn k0_continued_fraction(x: f64) -> f64 {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let (mut q1, mut q2) = (0.0, 1.0);
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() / s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integral_oracle(x: f64) -> f64 {
        // K₀(x) = ∫₀^∞ e^{-x cosh t} dt; the trapezoid rule converges
        // geometrically for this analytic, rapidly decaying integrand.
        let h: f64 = 0.005;
        let mut s = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let v = (-x * t.cosh()).exp();
            s += v;
            if v < 1e-300 || t > 30.0 {
                break;
            }
            t += h;
        }
        s * h
    }

    #[test]
    fn reference_values() {
        assert!((bessel_k0(1.0) - 0.421_024_438_240_708_34).abs() < 1e-15);
        assert!((bessel_k0(0.1) - 2.427_069_024_702_017).abs() < 1e-13);
    }

    #[test]
    fn matches_integral_representation() {
        for x in [0.01, 0.5, 1.9, 2.0, 2.1, 5.0, 20.0] {
            let rel = (bessel_k0(x) - integral_oracle(x)).abs() / integral_oracle(x);
            assert!(rel < 1e-12, "x = {x}: rel {rel}");
        }
    }

    #[test]
    fn scaled_is_consistent() {
        for x in [0.5, 3.0, 50.0] {
            assert!((bessel_k0_scaled(x) * (-x).exp() - bessel_k0(x)).abs() < 1e-15 * bessel_k0_scaled(x));
        }
        assert!(bessel_k0_scaled(1e4).is_finite());
    }
}
