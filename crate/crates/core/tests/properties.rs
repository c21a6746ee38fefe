//! Property tests for the model symmetries and the numeric kernels.

use combdrive::model::{self, DriveProfile, DriveSpec, ModelParams};
use combdrive::numerics::dd::Dd;
use proptest::prelude::*;

fn params() -> ModelParams {
    ModelParams::default_config()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // F(-x,t,d) = -F(x,t,d), F(x,-t,d) = F(x,t,d), F(x,t+Tv,d) = F(x,t,d)
    #[test]
    fn force_symmetry_suite(
        x in -0.95f64..0.95,
        t in -20.0f64..20.0,
        delta in 0.0f64..0.49,
    ) {
        let p = params();
        let d = DriveSpec { delta, profile: DriveProfile::Cosine };
        let f = model::force(x, t, &p, &d).unwrap();
        // 1e-14 at unit force scale; near the gap edges |F| grows like
        // (1-x^2)^-2 and drive-phase rounding scales with it
        let tol = 1e-14 * (1.0 + f.abs());
        let odd = (model::force(-x, t, &p, &d).unwrap() + f).abs();
        let even_t = (model::force(x, -t, &p, &d).unwrap() - f).abs();
        let per_t = (model::force(x, t + p.tv, &p, &d).unwrap() - f).abs();
        prop_assert!(odd <= tol, "oddness residual {odd}");
        prop_assert!(even_t <= tol, "time evenness residual {even_t}");
        prop_assert!(per_t <= tol, "periodicity residual {per_t}");
    }

    // x f(x) > 0 inside the basin, E even and increasing on [0, x*]
    #[test]
    fn restoring_inside_basin(frac in 1e-3f64..0.999) {
        let p = params();
        let x = frac * p.x_star;
        let f = model::force(x, 0.0, &p, &DriveSpec::autonomous()).unwrap();
        prop_assert!(x * f > 0.0);
        let e = model::energy(x, &p).unwrap();
        prop_assert!((model::energy(-x, &p).unwrap() - e).abs() <= 1e-16);
        let e2 = model::energy((frac * 1.0009).min(0.9999) * p.x_star, &p).unwrap();
        prop_assert!(e2 > e);
    }

    // closed-form dF/dx against central differences
    #[test]
    fn dforce_matches_fd(x in -0.9f64..0.9, t in 0.0f64..6.3, delta in 0.0f64..0.4) {
        let p = params();
        let d = DriveSpec { delta, profile: DriveProfile::Cosine };
        let h = 1e-6;
        if x.abs() < 0.9 - 2.0 * h {
            let fd = (model::force(x + h, t, &p, &d).unwrap()
                - model::force(x - h, t, &p, &d).unwrap())
                / (2.0 * h);
            let an = model::dforce_dx(x, t, &p, &d).unwrap();
            prop_assert!((an - fd).abs() <= 1e-6 * an.abs().max(1.0), "{an} vs {fd}");
        }
    }

    // double-double: sums track terms 1e-25 below the leading one
    #[test]
    fn dd_add_roundtrip(a in -1e3f64..1e3, scale in -25f64..-18f64) {
        prop_assume!(a.abs() > 1e-3);
        let tiny = a * 10f64.powf(scale);
        let s = Dd::from_f64(a) + Dd::from_f64(tiny) - Dd::from_f64(a);
        let err = (s.to_f64() - tiny).abs();
        prop_assert!(err <= 1e-8 * tiny.abs(), "lost the tiny term: {err:e}");
    }

    #[test]
    fn dd_mul_div_inverse(a in -1e4f64..1e4, b in -1e4f64..1e4) {
        prop_assume!(a.abs() > 1e-6 && b.abs() > 1e-6);
        let q = Dd::from_f64(a) / Dd::from_f64(b);
        let back = q * Dd::from_f64(b);
        let err = (back - Dd::from_f64(a)).abs().to_f64();
        prop_assert!(err <= 1e-27 * a.abs(), "div/mul roundtrip error {err:e}");
    }

    #[test]
    fn dd_sqrt_square(a in 1e-8f64..1e8) {
        let r = Dd::from_f64(a).sqrt();
        let err = (r.sqr() - Dd::from_f64(a)).abs().to_f64();
        prop_assert!(err <= 1e-28 * a, "sqrt roundtrip error {err:e}");
    }

    // Gauss-Legendre exactness on random polynomials within the rule degree
    #[test]
    fn quadrature_polynomial_exactness(
        coeffs in proptest::collection::vec(-3.0f64..3.0, 1..10),
    ) {
        let val = combdrive::numerics::quad_doubling(
            &mut |x: f64| {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            },
            -1.0,
            1.0,
            1e-13,
        )
        .unwrap();
        let exact: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { 2.0 * c / (k as f64 + 1.0) } else { 0.0 })
            .sum();
        prop_assert!((val - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
    }
}
