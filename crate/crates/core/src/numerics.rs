//! Small numerical helpers shared across modules: extrapolation, finite differences.

use num_complex::Complex64;

/// Two-point Richardson step: `g(h)` and `g(h/t)` with error `O(h^p)`.
pub fn richardson(g_h: f64, g_h_over_t: f64, t: f64, p: i32) -> f64 {
    let tp = t.powi(p);
    (tp * g_h_over_t - g_h) / (tp - 1.0)
}

pub fn richardson_c(g_h: Complex64, g_h_over_t: Complex64, t: f64, p: i32) -> Complex64 {
    let tp = t.powi(p);
    (g_h_over_t * tp - g_h) / (tp - 1.0)
}

/// Polynomial (Neville) extrapolation of samples `(h_i, g_i)` to `h = 0`.
///
/// Returns the extrapolated value and the magnitude of the last correction,
/// which serves as an error estimate.
pub fn neville_to_zero(h: &[f64], g: &[Complex64]) -> (Complex64, f64) {
    assert_eq!(h.len(), g.len());
    assert!(!h.is_empty());
    let mut p = g.to_vec();
    let n = h.len();
    let mut last = 0.0;
    for k in 1..n {
        for i in (k..n).rev() {
            let prev = p[i];
            p[i] = (p[i] * h[i - k] - p[i - 1] * h[i]) / (h[i - k] - h[i]);
            if i == n - 1 {
                last = (p[i] - prev).norm();
            }
        }
    }
    (p[n - 1], last)
}

/// Fourth-order central second derivative from samples at `-2h, -h, 0, h, 2h`.
pub fn d2_five_point<T>(f_m2: T, f_m1: T, f_0: T, f_p1: T, f_p2: T, h: f64) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    (f_m1 * 16.0 + f_p1 * 16.0 - f_m2 - f_p2 - f_0 * 30.0) * (1.0 / (12.0 * h * h))
}

/// Fourth-order central first derivative.
pub fn d1_five_point<T>(f_m2: T, f_m1: T, f_p1: T, f_p2: T, h: f64) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    (f_m2 - f_p2 + (f_p1 - f_m1) * 8.0) * (1.0 / (12.0 * h))
}

/// `(e^{-a ε} − e^{-b ε}) / ε` for `0 ≤ a ≤ b`, accurate for small `ε`.
pub fn exp_diff_over_eps(a: f64, b: f64, eps: f64) -> f64 {
    // e^{-aε}(1 − e^{-(b−a)ε})/ε = −e^{-aε}·expm1(−(b−a)ε)/ε
    if eps == 0.0 {
        return b - a;
    }
    -(-a * eps).exp() * (-(b - a) * eps).exp_m1() / eps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_quadratic_term() {
        let g = |h: f64| 3.0 + 2.0 * h * h;
        assert!((richardson(g(0.1), g(0.01), 10.0, 2) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn neville_exact_on_polynomials() {
        let h = [0.4, 0.2, 0.1, 0.05];
        let g: Vec<Complex64> =
            h.iter().map(|x| Complex64::new(1.0 + x - 2.0 * x * x * x, 0.5 * x)).collect();
        let (v, _) = neville_to_zero(&h, &g);
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn stencils() {
        let h = 1e-2;
        let x = 0.7f64;
        let f = |t: f64| t.sin();
        let d2 = d2_five_point(f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h), h);
        let d1 = d1_five_point(f(x - 2.0 * h), f(x - h), f(x + h), f(x + 2.0 * h), h);
        assert!((d2 + x.sin()).abs() < 1e-9);
        assert!((d1 - x.cos()).abs() < 1e-9);
    }

    #[test]
    fn exp_diff_small_eps() {
        let v = exp_diff_over_eps(2.0, 5.0, 1e-9);
        assert!((v - 3.0).abs() < 1e-7);
        let e = 0.3f64;
        let direct = ((-2.0 * e).exp() - (-5.0 * e).exp()) / e;
        assert!((exp_diff_over_eps(2.0, 5.0, e) - direct).abs() < 1e-14);
    }
}
