//! Bracketed root finding.

use crate::error::{Error, Result};

/// Plain bisection on [a, b]; requires a sign change.
pub fn bisect(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let fa = f(a);
    if fa == 0.0 {
        return Ok(a);
    }
    let fb = f(b);
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::InvalidBracket { a, b });
    }
    let neg_left = fa < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == neg_left {
            a = m;
        } else {
            b = m;
        }
        if (b - a).abs() <= xtol {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bisection to `xtol` followed by a short secant polish, clamped to the
/// bracket. Suitable for monotone functions.
pub fn find_root(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let mut x = bisect(f, a, b, xtol.max(1e-15))?;
    let lo = a.min(b);
    let hi = a.max(b);
    let mut x_prev = (x + 1e-3 * (hi - lo)).min(hi);
    let mut fx = f(x);
    let mut f_prev = f(x_prev);
    for _ in 0..3 {
        if fx == 0.0 || (fx - f_prev) == 0.0 {
            break;
        }
        let x_new = (x - fx * (x - x_prev) / (fx - f_prev)).clamp(lo, hi);
        if x_new == x {
            break;
        }
        x_prev = x;
        f_prev = fx;
        x = x_new;
        fx = f(x);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let r = find_root(&mut |x| x - 1.0, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(matches!(
            bisect(&mut |x: f64| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::InvalidBracket { .. })
        ));
    }

    #[test]
    fn transcendental_root() {
        let r = find_root(&mut |x: f64| x.cos() - x, 0.0, 1.0, 1e-14).unwrap();
        assert!((r.cos() - r).abs() < 1e-14);
    }
}
