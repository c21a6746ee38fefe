//! First-order derivative of the Poincare trace in the drive amplitude.
//!
//! For the odd (m,p)-orbit family, the derivative of the trace at delta = 0
//! has three equivalent forms:
//!
//! ```text
//! (a)  tau' = -p T'(hbar) Int_0^{mTv} F23(t) xdot(t) dt,
//!      F23 = -8 beta V0 x Pdot / (1-x^2)^2
//! (b)  tau' = omega0^2 p T'(hbar) Int_0^{mTv} G(t) cos(omega0 t) dt,
//!      G = 4 beta V0 / (1-x^2)        (integration by parts of (a))
//! (c)  for m = 2np:
//!      tau' = 4 p^2 omega0^2 T'(hbar_n) A_n,
//!      A_n = Int_0^{nTv/2} G_n(t) cos(omega0 t) dt   (symmetry folding)
//! ```
//!
//! The `p^2` in (c) comes from the 2p repetitions of the G-period inside
//! [0, mTv]; at p = 1 it reduces to the quarter-interval form exactly. When
//! `m/(2p)` is not an integer the cosine picks no harmonic of G and
//! tau'(0) = 0: the delicate case, where first-order theory is silent.
//!
//! The even family satisfies `tauhat' = (-1)^n tau'` through the quarter-
//! period shift relating the two orbits.

use serde::Serialize;

use crate::error::Result;
use crate::model::ModelParams;
use crate::numerics::quad::composite_gauss;
use crate::orbits::{check_admissible, SymmetricOrbit, Symmetry};
use crate::period::{level_for_period, period_derivative_of_level};

/// tau'(0) with every applicable evaluation route.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePrime {
    /// Authoritative value (the cosine form (b)).
    pub value: f64,
    pub symmetry: Symmetry,
    pub m: u32,
    pub p: u32,
    /// Set when m = 2np.
    pub n: Option<u32>,
    /// True iff m/(2p) is not an integer, where tau'(0) = 0.
    pub delicate: bool,
    /// Route (a): the F23 integral.
    pub general_integral: f64,
    /// Route (b): the cosine form.
    pub cosine_form: f64,
    /// Route (c): the quarter form (only when m = 2np). For the even family
    /// this is `(-1)^n` times the odd quarter form.
    pub quarter_form: Option<f64>,
    /// A_n when m = 2np.
    pub a_n: Option<f64>,
    /// |omega0^2 p T'| Int |G|: the natural magnitude against which the
    /// delicate-case zero is measured.
    pub scale: f64,
    /// T'(hbar) at the orbit energy.
    pub t_prime: f64,
}

impl TracePrime {
    /// Largest relative disagreement between the applicable routes.
    pub fn cross_method_spread(&self) -> f64 {
        let mut vals = vec![self.general_integral, self.cosine_form];
        if let Some(q) = self.quarter_form {
            vals.push(q);
        }
        let denom = vals
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
            .max(self.scale * 1e-30);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / denom
    }
}

/// 2048-node composite Gauss integral with a doubled-grid consistency check.
fn orbit_integral(f: &mut impl FnMut(f64) -> f64, t0: f64, t1: f64) -> (f64, f64) {
    let coarse = composite_gauss(f, t0, t1, 128, 16);
    let fine = composite_gauss(f, t0, t1, 256, 16);
    (fine, (fine - coarse).abs())
}

struct OrbitGeometry {
    sym: SymmetricOrbit,
    t_prime: f64,
}

fn geometry(m: u32, p: u32, params: &ModelParams) -> Result<OrbitGeometry> {
    check_admissible(m, p, params)?;
    let level = level_for_period(m as f64 * params.tv / p as f64, params)?;
    let sym = SymmetricOrbit::build(&level, params)?;
    let t_prime = period_derivative_of_level(&level, params)?;
    Ok(OrbitGeometry { sym, t_prime })
}

fn resonance_index(m: u32, p: u32) -> Option<u32> {
    if m.is_multiple_of(2 * p) {
        Some(m / (2 * p))
    } else {
        None
    }
}

fn tau_prime_impl(m: u32, p: u32, symmetry: Symmetry, params: &ModelParams) -> Result<TracePrime> {
    let geo = geometry(m, p, params)?;
    let span = m as f64 * params.tv;
    let om = params.omega0;
    let g_amp = params.coupling / params.v0; // 4 beta V0
    let n = resonance_index(m, p);

    let eval = |t: f64| -> [f64; 2] {
        match symmetry {
            Symmetry::Odd => geo.sym.eval_odd(t).unwrap(),
            Symmetry::Even => geo.sym.eval_even(t).unwrap(),
        }
    };

    // (a) Int F23 xdot; F23 = -8 beta V0 x Pdot / (1-x^2)^2, Pdot = -om sin
    let (i_a, _) = orbit_integral(
        &mut |t| {
            let [x, v] = eval(t);
            let w = 1.0 - x * x;
            let pdot = -om * (om * t).sin();
            (-2.0 * g_amp * x * pdot / (w * w)) * v
        },
        0.0,
        span,
    );
    let general_integral = -(p as f64) * geo.t_prime * i_a;

    // (b) Int G cos(om t)
    let (i_b, _) = orbit_integral(
        &mut |t| {
            let [x, _] = eval(t);
            g_amp / (1.0 - x * x) * (om * t).cos()
        },
        0.0,
        span,
    );
    let cosine_form = om * om * (p as f64) * geo.t_prime * i_b;

    let (i_abs, _) = orbit_integral(
        &mut |t| {
            let [x, _] = eval(t);
            (g_amp / (1.0 - x * x)).abs()
        },
        0.0,
        span,
    );
    let scale = (om * om * (p as f64) * geo.t_prime * i_abs).abs();

    // (c) quarter form via A_n, folded to [0, n Tv / 2] along the odd orbit
    let (quarter_form, a_n) = if let Some(nn) = n {
        let half = nn as f64 * params.tv / 2.0;
        let (a_val, _) = orbit_integral(
            &mut |t| {
                let [x, _] = geo.sym.eval_odd(t).unwrap();
                g_amp / (1.0 - x * x) * (om * t).cos()
            },
            0.0,
            half,
        );
        let q_odd = 4.0 * (p as f64) * (p as f64) * om * om * geo.t_prime * a_val;
        let q = match symmetry {
            Symmetry::Odd => q_odd,
            Symmetry::Even => {
                if nn % 2 == 0 {
                    q_odd
                } else {
                    -q_odd
                }
            }
        };
        (Some(q), Some(a_val))
    } else {
        (None, None)
    };

    Ok(TracePrime {
        value: cosine_form,
        symmetry,
        m,
        p,
        n,
        delicate: n.is_none(),
        general_integral,
        cosine_form,
        quarter_form,
        a_n,
        scale,
        t_prime: geo.t_prime,
    })
}

/// tau'(0) of the odd (m,p) family, all three routes cross-evaluated.
pub fn tau_prime_odd(m: u32, p: u32, params: &ModelParams) -> Result<TracePrime> {
    tau_prime_impl(m, p, Symmetry::Odd, params)
}

/// tauhat'(0) of the even (m,p) family; for m = 2np this equals
/// `(-1)^n tau'(0)` of the odd family.
pub fn tau_prime_even(m: u32, p: u32, params: &ModelParams) -> Result<TracePrime> {
    tau_prime_impl(m, p, Symmetry::Even, params)
}

/// A_n = Int_0^{nTv/2} G_n cos(omega0 t) dt along the odd (2n,1) orbit.
pub fn a_coefficient(n: u32, params: &ModelParams) -> Result<f64> {
    let tp = tau_prime_odd(2 * n, 1, params)?;
    Ok(tp.a_n.unwrap())
}

/// The multiplicative coefficient G(t) = 4 beta V0 / (1 - x(t)^2) along an
/// orbit, with the time origin of the orbit's own symmetry class.
pub struct GFunction {
    sym: SymmetricOrbit,
    symmetry: Symmetry,
    g_amp: f64,
}

impl GFunction {
    pub fn along_orbit(
        orbit: &crate::orbits::AutonomousOrbit,
        params: &ModelParams,
    ) -> Result<Self> {
        Ok(GFunction {
            sym: SymmetricOrbit::build(&orbit.level, params)?,
            symmetry: orbit.symmetry,
            g_amp: params.coupling / params.v0,
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let [x, _] = match self.symmetry {
            Symmetry::Odd => self.sym.eval_odd(t)?,
            Symmetry::Even => self.sym.eval_even(t)?,
        };
        Ok(self.g_amp / (1.0 - x * x))
    }
}

/// The mixed-derivative forcing term F23(t) along an orbit (cosine drive).
pub struct F23Function {
    sym: SymmetricOrbit,
    symmetry: Symmetry,
    g_amp: f64,
    omega0: f64,
}

impl F23Function {
    pub fn along_orbit(
        orbit: &crate::orbits::AutonomousOrbit,
        params: &ModelParams,
    ) -> Result<Self> {
        Ok(F23Function {
            sym: SymmetricOrbit::build(&orbit.level, params)?,
            symmetry: orbit.symmetry,
            g_amp: params.coupling / params.v0,
            omega0: params.omega0,
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let [x, _] = match self.symmetry {
            Symmetry::Odd => self.sym.eval_odd(t)?,
            Symmetry::Even => self.sym.eval_even(t)?,
        };
        let w = 1.0 - x * x;
        let pdot = -self.omega0 * (self.omega0 * t).sin();
        Ok(-2.0 * self.g_amp * x * pdot / (w * w))
    }
}

/// The convexity certificate of the cubic U(Y) behind the paper's sign
/// analysis for G''.
///
/// `U(y1) = -(1-x+^2)^2 x+ f(x+) < 0` identically (G has a strict maximum at
/// the orbit apex), so the positivity claim fails in a neighborhood of y1;
/// the report carries the violations rather than erroring.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    pub n: u32,
    pub hbar: f64,
    /// Larger root of Y^2 - (1 + 4bV0^2 - 2H) Y + 4bV0^2, equal to 1 - x+^2.
    pub y1: f64,
    /// The paper's displayed branch (minus sign), kept for reference.
    pub y1_minus_branch: f64,
    /// 1 - x+^2 from the turning point, for the cross-check.
    pub y1_from_turning_point: f64,
    pub u_at_0: f64,
    pub u_at_1: f64,
    /// 20 beta V0^2 and 2 hbar_n, the expected endpoint values.
    pub expected_u0: f64,
    pub expected_u1: f64,
    /// min U over the 1000-point grid of [y1, 1].
    pub min_u: f64,
    /// Grid points with U <= 0.
    pub violations: u32,
    /// min of the centered finite-difference G'' over [0, nTv/2].
    pub g_second_min_fd: f64,
    /// U at y1 from the closed form -(1-x+^2)^2 x+ f(x+).
    pub u_at_y1_closed_form: f64,
}

pub fn convexity_certificate(n: u32, params: &ModelParams) -> Result<ConvexityReport> {
    check_admissible(2 * n, 1, params)?;
    let level = level_for_period(2.0 * n as f64 * params.tv, params)?;
    let sym = SymmetricOrbit::build(&level, params)?;
    let h = level.hbar;
    let c = params.coupling;
    // s = 1/2 - H + 2 beta V0^2 and the radicand as displayed in the source
    // analysis, evaluated in double-double: for n >= 3 the radicand is below
    // the f64 resolution of H around hbar*
    let (y1, y1_minus_branch) = {
        use crate::model::energy_dd_raw;
        use crate::numerics::dd::Dd;
        let h_dd = energy_dd_raw(params.dd.x_star - level.gap_dd(), params.dd.coupling);
        let c_dd = params.dd.coupling;
        let half = Dd::from_f64(0.5);
        let quarter = Dd::from_f64(0.25);
        let s_dd = half - h_dd + half * c_dd;
        let rad = quarter * c_dd.sqr() - c_dd * h_dd - half * c_dd + h_dd.sqr() + quarter - h_dd;
        let root = rad.max(Dd::ZERO).sqrt();
        ((s_dd + root).to_f64(), (s_dd - root).to_f64())
    };
    // stable 1 - x+^2 = Y* + d (x* + x+)
    let y1_from_turning_point = params.y_star + level.gap * (params.x_star + level.x_plus);

    let u = |y: f64| {
        -2.0 * y.powi(3)
            + (3.0 * c + 6.0 - 6.0 * h) * y * y
            + (8.0 * h - 4.0 - 8.0 * c) * y
            + 5.0 * c
    };
    let u_at_0 = u(0.0);
    let u_at_1 = u(1.0);
    let mut min_u = f64::INFINITY;
    let mut violations = 0u32;
    for i in 0..1000 {
        let y = y1 + (1.0 - y1) * i as f64 / 999.0;
        let v = u(y);
        min_u = min_u.min(v);
        if v <= 0.0 {
            violations += 1;
        }
    }

    // closed-form endpoint value of U at the apex
    let xp = level.x_plus;
    let yp = y1_from_turning_point;
    let f_xp = xp * (1.0 - c / (yp * yp));
    let u_at_y1_closed_form = -yp * yp * xp * f_xp;

    // finite-difference G'' along the orbit (odd time origin)
    let g_amp = c / params.v0;
    let half = n as f64 * params.tv / 2.0;
    let dt = half * 1e-4;
    let g_of = |t: f64| -> f64 {
        let [x, _] = sym.eval_odd(t).unwrap();
        g_amp / (1.0 - x * x)
    };
    let mut g_second_min_fd = f64::INFINITY;
    for i in 0..=200 {
        let t = (half - 2.0 * dt) * i as f64 / 200.0 + dt;
        let g2 = (g_of(t + dt) - 2.0 * g_of(t) + g_of(t - dt)) / (dt * dt);
        g_second_min_fd = g_second_min_fd.min(g2);
    }

    Ok(ConvexityReport {
        n,
        hbar: h,
        y1,
        y1_minus_branch,
        y1_from_turning_point,
        u_at_0,
        u_at_1,
        expected_u0: 5.0 * c,
        expected_u1: 2.0 * h,
        min_u,
        violations,
        g_second_min_fd,
        u_at_y1_closed_form,
    })
}

/// What the first-order theorems predict for the continued family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PredictedKind {
    Elliptic,
    Hyperbolic,
    /// m/(2p) not an integer: tau'(0) = 0, first order is inconclusive.
    UndeterminedDelicate,
}

impl std::fmt::Display for PredictedKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PredictedKind::Elliptic => write!(f, "elliptic"),
            PredictedKind::Hyperbolic => write!(f, "hyperbolic"),
            PredictedKind::UndeterminedDelicate => write!(f, "undetermined (delicate)"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Prediction {
    pub kind: PredictedKind,
    pub n: Option<u32>,
    /// omega0 < 2 n sqrt(1 - 4 beta V0^2), the hypothesis of the theorems.
    pub frequency_condition_ok: bool,
}

/// The stability verdict the source theorems assert for (m, p, symmetry):
/// odd with n odd elliptic, odd with n even hyperbolic, even always
/// hyperbolic, delicate undetermined.
pub fn predict_stability(
    m: u32,
    p: u32,
    symmetry: Symmetry,
    params: &ModelParams,
) -> Result<Prediction> {
    check_admissible(m, p, params)?;
    let n = resonance_index(m, p);
    match n {
        None => Ok(Prediction {
            kind: PredictedKind::UndeterminedDelicate,
            n: None,
            frequency_condition_ok: true,
        }),
        Some(nn) => {
            let freq_ok = params.omega0 < 2.0 * nn as f64 * (1.0 - params.coupling).sqrt();
            let kind = match symmetry {
                Symmetry::Even => PredictedKind::Hyperbolic,
                Symmetry::Odd => {
                    if nn % 2 == 1 {
                        PredictedKind::Elliptic
                    } else {
                        PredictedKind::Hyperbolic
                    }
                }
            };
            Ok(Prediction {
                kind,
                n,
                frequency_condition_ok: freq_ok,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::odd_orbit;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::default_config()
    }

    #[test]
    fn g_at_origin_of_odd_orbit() {
        let p = params();
        let orb = odd_orbit(2, 1, &p).unwrap();
        let g = GFunction::along_orbit(&orb, &p).unwrap();
        // x(0) = 0 so G(0) = 4 beta V0 = 0.5
        assert_relative_eq!(g.eval(0.0).unwrap(), 0.5, max_relative = 1e-12);
        // G_n(nTv - t) = G_n(t)
        let ntv = p.tv;
        let mut max_res: f64 = 0.0;
        for i in 0..40 {
            let t = ntv * i as f64 / 39.0;
            max_res = max_res.max((g.eval(ntv - t).unwrap() - g.eval(t).unwrap()).abs());
        }
        assert!(max_res < 1e-9, "reflection residual {max_res}");
    }

    #[test]
    fn f23_values_and_fd_oracle() {
        let p = params();
        let orb = odd_orbit(2, 1, &p).unwrap();
        let f23 = F23Function::along_orbit(&orb, &p).unwrap();
        assert!(f23.eval(0.0).unwrap().abs() < 1e-12);
        // mixed central finite difference of F in (t, delta) at delta = 0
        let sym = SymmetricOrbit::build(&orb.level, &p).unwrap();
        let h = 1e-5;
        let dplus = crate::model::DriveSpec {
            delta: h,
            profile: crate::model::DriveProfile::Cosine,
        };
        let dminus = crate::model::DriveSpec {
            delta: -h,
            profile: crate::model::DriveProfile::Cosine,
        };
        for i in 1..20 {
            let t = orb.minimal_period * i as f64 / 21.0;
            let [x, _] = sym.eval_odd(t).unwrap();
            let f =
                |tt: f64, dd: &crate::model::DriveSpec| crate::model::force(x, tt, &p, dd).unwrap();
            let fd = (f(t + h, &dplus) - f(t - h, &dplus) - f(t + h, &dminus) + f(t - h, &dminus))
                / (4.0 * h * h);
            let an = f23.eval(t).unwrap();
            assert!(
                (an - fd).abs() <= 1e-6 * an.abs().max(1.0),
                "t={t}: F23 {an} vs fd {fd}"
            );
        }
    }

    #[test]
    fn tau_prime_21_reference() {
        // frozen 30-digit quadrature references
        let p = params();
        let tp = tau_prime_odd(2, 1, &p).unwrap();
        assert!(!tp.delicate);
        assert_eq!(tp.n, Some(1));
        assert_relative_eq!(tp.value, -4580.228915, max_relative = 1e-8);
        assert_relative_eq!(tp.a_n.unwrap(), -0.3744141054, max_relative = 1e-8);
        assert!(
            tp.cross_method_spread() <= 1e-8,
            "spread {}",
            tp.cross_method_spread()
        );
        assert!(tp.value < 0.0);
    }

    #[test]
    fn tau_prime_41_reference() {
        let p = params();
        let tp = tau_prime_odd(4, 1, &p).unwrap();
        assert_eq!(tp.n, Some(2));
        assert_relative_eq!(tp.value, -1332773531.0, max_relative = 1e-7);
        assert_relative_eq!(tp.a_n.unwrap(), -0.3750782995, max_relative = 1e-7);
        assert!(tp.cross_method_spread() <= 1e-8);
        // the measured sign: negative, unlike the source's claimed alternation
        assert!(tp.value < 0.0);
    }

    #[test]
    fn delicate_cases_vanish() {
        let p = params();
        for (m, pp) in [(3u32, 1u32), (3, 2), (4, 3), (5, 1), (5, 2), (5, 3), (5, 4)] {
            let tp = tau_prime_odd(m, pp, &p).unwrap();
            assert!(tp.delicate);
            assert!(tp.quarter_form.is_none());
            assert!(
                tp.value.abs() <= 1e-8 * tp.scale,
                "({m},{pp}): tau' = {} vs scale {}",
                tp.value,
                tp.scale
            );
        }
    }

    #[test]
    fn even_odd_relation() {
        let p = params();
        for n in 1..=2u32 {
            let odd = tau_prime_odd(2 * n, 1, &p).unwrap();
            let even = tau_prime_even(2 * n, 1, &p).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_relative_eq!(even.value, sign * odd.value, max_relative = 1e-8);
            assert!(
                even.cross_method_spread() <= 1e-8,
                "spread {}",
                even.cross_method_spread()
            );
        }
    }

    #[test]
    fn p_squared_scaling() {
        // (4,2) runs the same geometric orbit as (2,1) but over 4 Tv; the
        // trace derivative scales by p^2 = 4 (tr M^2 = tr(M)^2 - 2).
        let p = params();
        let t21 = tau_prime_odd(2, 1, &p).unwrap();
        let t42 = tau_prime_odd(4, 2, &p).unwrap();
        assert_relative_eq!(t42.value, 4.0 * t21.value, max_relative = 1e-8);
        assert!(t42.cross_method_spread() <= 1e-8);
    }

    #[test]
    fn certificate_endpoints_and_y1() {
        let p = params();
        let rep = convexity_certificate(1, &p).unwrap();
        assert_relative_eq!(rep.u_at_0, 1.25, max_relative = 1e-14);
        assert_relative_eq!(rep.u_at_1, 2.0 * rep.hbar, max_relative = 1e-12);
        assert!((rep.y1 - rep.y1_from_turning_point).abs() <= 1e-10);
        assert_relative_eq!(rep.y1, 0.5183567849, max_relative = 1e-8);
        // U(y1) < 0: the certificate's positivity claim fails at the apex
        assert!(rep.min_u < 0.0);
        assert_relative_eq!(rep.u_at_y1_closed_form, -0.0090037209, max_relative = 1e-6);
        assert!(rep.g_second_min_fd < 0.0);
        assert!(rep.violations > 0);
    }

    #[test]
    fn predictions_follow_the_theorem() {
        let p = params();
        let pr = predict_stability(2, 1, Symmetry::Odd, &p).unwrap();
        assert_eq!(pr.kind, PredictedKind::Elliptic);
        assert!(pr.frequency_condition_ok);
        let pr = predict_stability(4, 1, Symmetry::Odd, &p).unwrap();
        assert_eq!(pr.kind, PredictedKind::Hyperbolic);
        let pr = predict_stability(3, 1, Symmetry::Odd, &p).unwrap();
        assert_eq!(pr.kind, PredictedKind::UndeterminedDelicate);
        let pr = predict_stability(2, 1, Symmetry::Even, &p).unwrap();
        assert_eq!(pr.kind, PredictedKind::Hyperbolic);
        assert!(predict_stability(1, 1, Symmetry::Odd, &p).is_err());
    }
}
