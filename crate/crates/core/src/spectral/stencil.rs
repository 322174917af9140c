//! Product integration of a piecewise-cubic interpolant against exponential
//! kernels on a uniform grid.
//!
//! For the interval `[y_j, y_{j+1}]` and `c = k h`:
//!
//! * `forward`  = `∫ a(s) e^{-k (y_{j+1} - s)} ds`
//! * `backward` = `∫ a(s) e^{-k (s - y_j)} ds`
//!
//! Both are exact for quintic `a`. The interpolant uses six nodes, shifted
//! inward near the boundaries. `c = 0` gives plain sixth-order interval
//! integrals.

const SERIES_THRESHOLD: f64 = 3.0;
const P: usize = 6;
const KINDS: usize = 5;

/// Node offsets relative to `j`: two left-boundary stencils, the centred
/// interior stencil, two right-boundary stencils.
const OFFSETS: [[i64; P]; KINDS] = [
    [0, 1, 2, 3, 4, 5],
    [-1, 0, 1, 2, 3, 4],
    [-2, -1, 0, 1, 2, 3],
    [-3, -2, -1, 0, 1, 2],
    [-4, -3, -2, -1, 0, 1],
];

pub(crate) struct ExpStencil {
    fwd: [[f64; P]; KINDS],
    bwd: [[f64; P]; KINDS],
}

impl ExpStencil {
    pub fn new(c: f64, h: f64) -> Self {
        let g = moments_decaying(c);
        let f = moments_growing(c);
        let mut fwd = [[0.0; P]; KINDS];
        let mut bwd = [[0.0; P]; KINDS];
        for (t, offs) in OFFSETS.iter().enumerate() {
            for k in 0..P {
                let coef = lagrange_monomials(offs, k);
                fwd[t][k] = h * (0..P).map(|m| coef[m] * f[m]).sum::<f64>();
                bwd[t][k] = h * (0..P).map(|m| coef[m] * g[m]).sum::<f64>();
            }
        }
        Self { fwd, bwd }
    }

    fn kind(j: usize, n: usize) -> usize {
        match j {
            0 => 0,
            1 => 1,
            _ if j + 1 == n => 4,
            _ if j + 2 == n => 3,
            _ => 2,
        }
    }

    fn apply(w: &[[f64; P]; KINDS], a: &[f64], j: usize) -> f64 {
        let n = a.len() - 1;
        let t = Self::kind(j, n);
        let mut s = 0.0;
        for (k, off) in OFFSETS[t].iter().enumerate() {
            s += w[t][k] * a[(j as i64 + off) as usize];
        }
        s
    }

    pub fn forward(&self, a: &[f64], j: usize) -> f64 {
        Self::apply(&self.fwd, a, j)
    }

    pub fn backward(&self, a: &[f64], j: usize) -> f64 {
        Self::apply(&self.bwd, a, j)
    }
}

/// Monomial coefficients of the Lagrange basis polynomial `k` for `nodes`.
fn lagrange_monomials(nodes: &[i64; P], k: usize) -> [f64; P] {
    let mut poly = [0.0; P];
    poly[0] = 1.0;
    let mut deg = 0;
    let mut denom = 1.0;
    for (i, &p) in nodes.iter().enumerate() {
        if i == k {
            continue;
        }
        // Multiply by (u - p).
        for m in (0..=deg + 1).rev() {
            let lower = if m > 0 { poly[m - 1] } else { 0.0 };
            let cur = if m <= deg { poly[m] } else { 0.0 };
            poly[m] = lower - p as f64 * cur;
        }
        deg += 1;
        denom *= (nodes[k] - p) as f64;
    }
    poly.map(|c| c / denom)
}

/// `∫₀¹ e^{-c u} u^m du` for `m < 6`.
fn moments_decaying(c: f64) -> [f64; P] {
    let mut g = [0.0; P];
    if c.abs() < SERIES_THRESHOLD {
        for (m, gm) in g.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut sum = 0.0;
            for k in 0..80 {
                if k > 0 {
                    term *= -c / k as f64;
                }
                sum += term / (k + m + 1) as f64;
            }
            *gm = sum;
        }
    } else {
        let e = (-c).exp();
        g[0] = -(-c).exp_m1() / c;
        for m in 1..P {
            g[m] = (m as f64 * g[m - 1] - e) / c;
        }
    }
    g
}

/// `∫₀¹ e^{-c (1 - u)} u^m du` for `m < 6`.
fn moments_growing(c: f64) -> [f64; P] {
    let mut f = [0.0; P];
    if c.abs() < SERIES_THRESHOLD {
        for (m, fm) in f.iter_mut().enumerate() {
            // Σ_k (-c)^k m! / (k + m + 1)!
            let mut term = 1.0 / (m + 1) as f64;
            let mut sum = term;
            for k in 1..80 {
                term *= -c / (k + m + 1) as f64;
                sum += term;
            }
            *fm = sum;
        }
    } else {
        f[0] = -(-c).exp_m1() / c;
        for m in 1..P {
            f[m] = (1.0 - m as f64 * f[m - 1]) / c;
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64) -> f64 {
        let n = 20000;
        let h = 1.0 / n as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn moments_match_quadrature() {
        for c in [0.0, 0.3, 2.99, 3.01, 7.0, 40.0] {
            let g = moments_decaying(c);
            let f = moments_growing(c);
            for m in 0..P {
                let gq = simpson(|u| (-c * u).exp() * u.powi(m as i32));
                let fq = simpson(|u| (-c * (1.0 - u)).exp() * u.powi(m as i32));
                assert!((g[m] - gq).abs() < 1e-11, "g c={c} m={m}");
                assert!((f[m] - fq).abs() < 1e-11, "f c={c} m={m}");
            }
        }
    }

    #[test]
    fn lagrange_reproduces_nodes() {
        let nodes = OFFSETS[2];
        for k in 0..P {
            let c = lagrange_monomials(&nodes, k);
            for (i, &p) in nodes.iter().enumerate() {
                let x = p as f64;
                let v: f64 = (0..P).map(|m| c[m] * x.powi(m as i32)).sum();
                assert!((v - if i == k { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn exact_for_quintic_data() {
        let n = 10;
        let h = 1.0 / n as f64;
        let p = |s: f64| 1.0 + s - 2.0 * s * s + 3.0 * s.powi(3) - s.powi(5);
        let a: Vec<f64> = (0..=n).map(|j| p(j as f64 * h)).collect();
        let k = 3.0;
        let st = ExpStencil::new(k * h, h);
        for j in [0, 1, 4, n - 2, n - 1] {
            let y0 = j as f64 * h;
            let fq = h * simpson(|u| p(y0 + u * h) * (-k * h * (1.0 - u)).exp());
            let bq = h * simpson(|u| p(y0 + u * h) * (-k * h * u).exp());
            assert!((st.forward(&a, j) - fq).abs() < 1e-13);
            assert!((st.backward(&a, j) - bq).abs() < 1e-13);
        }
    }
}
