//! One-dimensional quadrature.

/// Composite Simpson rule on `n` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

// 10-point Gauss-Legendre nodes and weights on [-1, 1]
const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Composite 10-point Gauss-Legendre rule on `panels` equal panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        let half = h / 2.0;
        let mut s = 0.0;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        let p = |x: f64| 3.0 * x.powi(7) - x.powi(4) + 2.0;
        let exact = 3.0 / 8.0 - 1.0 / 5.0 + 2.0;
        assert!((gauss_legendre(p, 0.0, 1.0, 1) - exact).abs() < 1e-14);
        assert!((simpson(|x| x * x * x, 0.0, 2.0, 2) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_integrals() {
        assert!((gauss_legendre(f64::exp, 0.0, 1.0, 4) - (1f64.exp() - 1.0)).abs() < 1e-14);
        assert!((simpson(f64::sin, 0.0, std::f64::consts::PI, 1000) - 2.0).abs() < 1e-11);
    }
}
