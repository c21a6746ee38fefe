//! Gauss-Legendre quadrature with node-doubling convergence checks.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; results are cached.
#[allow(clippy::type_complexity)]
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(found) = cache.lock().unwrap().get(&n) {
        return found.clone();
    }
    let computed = compute_gauss_legendre(n);
    cache.lock().unwrap().insert(n, computed.clone());
    computed
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut xi = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, xi);
            let dx = p / dp;
            xi -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, xi);
        x[i] = -xi;
        x[n - 1 - i] = xi;
        let wi = 2.0 / ((1.0 - xi * xi) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Fixed composite rule: `nseg` equal segments of [a, b], `order` points each.
pub fn composite_gauss(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    nseg: usize,
    order: usize,
) -> f64 {
    let (xs, ws) = gauss_legendre(order);
    let seg = (b - a) / nseg as f64;
    let mut total = 0.0;
    for k in 0..nseg {
        let lo = a + seg * k as f64;
        let mid = lo + 0.5 * seg;
        let half = 0.5 * seg;
        let mut acc = 0.0;
        for (x, w) in xs.iter().zip(ws.iter()) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// Integrate on [a, b], doubling the number of segments until two successive
/// composite estimates differ by at most `tol * max(1, |I|)`.
pub fn quad_doubling(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    const ORDER: usize = 16;
    const MAX_DOUBLINGS: u32 = 9;
    let mut nseg = 2usize;
    let mut last = composite_gauss(f, a, b, nseg, ORDER);
    for _ in 0..MAX_DOUBLINGS {
        nseg *= 2;
        let next = composite_gauss(f, a, b, nseg, ORDER);
        let change = (next - last).abs();
        if change <= tol * next.abs().max(1.0) {
            return Ok(next);
        }
        last = next;
    }
    let next = composite_gauss(f, a, b, nseg * 2, ORDER);
    Err(Error::QuadratureNoConvergence {
        doublings: MAX_DOUBLINGS,
        last_change: (next - last).abs(),
    })
}

/// Integral of a continuous `g` over the quarter-phase interval [0, pi/2].
///
/// This is the regularized form of the singular-endpoint energy integrals:
/// the substitution rho = sin(theta) has already absorbed the
/// (1 - rho^2)^(-1/2) weight, so `g` itself is smooth.
pub fn quad_regularized(g: &mut impl FnMut(f64) -> f64, tol: f64) -> Result<f64> {
    quad_doubling(g, 0.0, std::f64::consts::FRAC_PI_2, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        // n-point rule is exact through degree 2n-1
        for n in [2usize, 5, 8, 16] {
            let (xs, ws) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 0 {
                    2.0 / (deg as f64 + 1.0)
                } else {
                    0.0
                };
                let num: f64 = xs
                    .iter()
                    .zip(&ws)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                assert!(
                    (num - exact).abs() < 1e-13,
                    "n={n} deg={deg}: {num} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn regularized_basics() {
        let v = quad_regularized(&mut |_| 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, FRAC_PI_2, max_relative = 1e-14);
        let v = quad_regularized(&mut |t: f64| t.cos(), 1e-12).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-13);
    }

    #[test]
    fn doubling_handles_oscillation() {
        let v = quad_doubling(&mut |t: f64| (10.0 * t).sin(), 0.0, PI, 1e-12).unwrap();
        let exact = (1.0 - (10.0 * PI).cos()) / 10.0;
        assert_relative_eq!(v, exact, max_relative = 1e-12);
    }
}
