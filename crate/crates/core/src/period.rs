//! The period function T(hbar) of the autonomous oscillation, its
//! derivative, and its inverse.
//!
//! For `hbar in (0, hbar*)` the closed orbit through the turning points
//! `+-x+(hbar)` has minimal period
//!
//! ```text
//! T = 2 sqrt(2) Int_0^{pi/2} f(x+ sin th, x+) dth,
//! f(x, x+) = (1/2 - 2 beta V0^2 / ((1-x^2)(1-x+^2)))^(-1/2)
//! ```
//!
//! and its energy derivative has the same weight with the extra rational
//! factor `4 beta V0^2 x^2 v(x) / ((1-x^2)^2 - 4 beta V0^2)^2`,
//! `v(x) = (1-x^2)(3+x^2) - 12 beta V0^2`, which is positive inside the
//! saddle loop, so T is strictly increasing: from `2 pi / sqrt(1-4 beta V0^2)`
//! at the center to infinity at the saddle connection.
//!
//! # Numerical form
//!
//! Energies exponentially close to `hbar*` (the interesting ones: the
//! resonant energy with `T = 2nTv` sits at `hbar* - O(e^{-2nTv})`) are not
//! representable as distances in hbar, so levels are keyed by the turning
//! point gap `d = x* - x+`. All cancellation-prone combinations are carried
//! in exactly factored form:
//!
//! ```text
//! A = (1-x^2) - Y* = (x* - x)(x* + x),   x* - x+ cos u = 2 x* sin^2(u/2) + d cos u
//! B = (1-x+^2) - Y* = d (x* + x+)
//! (1-x^2)(1-x+^2) - Y*^2 = Y*(A+B) + AB
//! ```
//!
//! (with `x = x+ cos u`, `u = pi/2 - theta`, so the apex is `u = 0` exactly).
//! The remaining `1/sqrt(u^2 + w^2)`-type concentration at the apex, of width
//! `w ~ sqrt(d)`, is removed by the substitution `u = w sinh v`, after which
//! Gauss-Legendre node doubling converges at every admissible energy.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{energy_dd_raw, DriveSpec, Field, ModelParams};
use crate::numerics::dd::Dd;
use crate::numerics::gbs::{integrate_gbs, GbsOptions};
use crate::numerics::quad::composite_gauss;
use crate::numerics::rk::OdeSystem;
use crate::numerics::QUAD_TOL;

/// Levels closer to the separatrix than this (in hbar* - hbar) route the
/// orbit integrations through double-double arithmetic.
pub const NEAR_SEPARATRIX_DD: f64 = 1e-4;

/// Refuse the hbar-parametrized API closer to hbar* than this relative gap;
/// the quadrature itself stays meaningful (via the gap parametrization) but
/// f64 energies do not.
pub const HBAR_CUTOFF_REL: f64 = 1e-12;

/// An energy level keyed by its turning point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyLevel {
    /// Turning point x+ in (0, x*).
    pub x_plus: f64,
    /// Gap x* - x+ (exact representation of near-separatrix levels).
    pub gap: f64,
    /// Sub-f64 correction to the gap: the resonant gap as a double-double is
    /// `gap + gap_lo`. Monodromy traces of deep resonances need the period
    /// matched to ~1e-17 relative, far below what a single f64 gap or an f64
    /// quadrature inversion can express.
    pub gap_lo: f64,
    /// Energy E(x+), possibly rounded to hbar* for deep levels.
    pub hbar: f64,
    /// hbar* - hbar computed in extended precision.
    pub eps: f64,
}

impl EnergyLevel {
    pub fn from_gap(gap: f64, params: &ModelParams) -> Result<Self> {
        if !(gap > 0.0 && gap < params.x_star) {
            return Err(Error::EnergyRange {
                hbar: f64::NAN,
                max: params.h_star,
            });
        }
        let x_plus = params.x_star - gap;
        let h_dd = energy_dd_raw(params.dd.x_star - Dd::from_f64(gap), params.dd.coupling);
        let eps = (params.dd.h_star - h_dd).to_f64();
        Ok(EnergyLevel {
            x_plus,
            gap,
            gap_lo: 0.0,
            hbar: h_dd.to_f64(),
            eps,
        })
    }

    pub fn from_hbar(hbar: f64, params: &ModelParams) -> Result<Self> {
        if !(hbar > 0.0 && hbar < params.h_star) {
            return Err(Error::EnergyRange {
                hbar,
                max: params.h_star,
            });
        }
        let x_plus = crate::model::turning_point(hbar, params)?;
        Self::from_gap(params.x_star - x_plus, params)
    }

    /// True when orbit work at this level needs double-double precision.
    pub fn needs_dd(&self) -> bool {
        self.eps < NEAR_SEPARATRIX_DD
    }

    /// Initial speed of the odd-symmetric orbit, eta = sqrt(2 hbar).
    pub fn eta(&self) -> f64 {
        (2.0 * self.hbar).sqrt()
    }

    /// The turning-point gap at full double-double precision.
    pub fn gap_dd(&self) -> Dd {
        Dd::from_f64(self.gap) + Dd::from_f64(self.gap_lo)
    }
}

/// Integrand machinery shared by T and dT/dhbar.
struct QuarterIntegrand {
    x_star: f64,
    y_star: f64,
    c: f64,
    x_plus: f64,
    d: f64,
    b: f64,
    /// sinh-substitution width
    w: f64,
    v_max: f64,
}

impl QuarterIntegrand {
    fn new(level: &EnergyLevel, params: &ModelParams) -> Self {
        let x_star = params.x_star;
        let y_star = params.y_star;
        let d = level.gap;
        let x_plus = level.x_plus;
        let b = d * (x_star + x_plus);
        // N(0) = B(2Y* + B); w chosen so N ~ Y* x*^2 (u^2 + w^2) near u = 0
        let w = (b * (2.0 * y_star + b) / y_star).sqrt() / x_star;
        let v_max = (std::f64::consts::FRAC_PI_2 / w).asinh();
        QuarterIntegrand {
            x_star,
            y_star,
            c: params.coupling,
            x_plus,
            d,
            b,
            w,
            v_max,
        }
    }

    /// weight f(x+ cos u, x+) and abscissa x at substitution parameter v
    #[inline]
    fn weight(&self, v: f64) -> (f64, f64, f64) {
        let u = self.w * v.sinh();
        let jac = self.w * v.cosh();
        let cu = u.cos();
        let s2 = (0.5 * u).sin();
        // x* - x+ cos u, in cancellation-free form
        let t1 = 2.0 * self.x_star * s2 * s2 + self.d * cu;
        let x = self.x_plus * cu;
        let a = t1 * (self.x_star + x);
        let n = self.y_star * (a + self.b) + a * self.b;
        let f = (2.0 * (self.y_star + a) * (self.y_star + self.b) / n).sqrt();
        (f * jac, x, a)
    }

    /// rational factor of the dT/dhbar integrand
    #[inline]
    fn derivative_factor(&self, x: f64, a: f64) -> f64 {
        let x2 = x * x;
        let vx = (1.0 - x2) * (3.0 + x2) - 3.0 * self.c;
        let n2 = a * (a + 2.0 * self.y_star);
        self.c * x2 * vx / (n2 * n2)
    }
}

fn quarter_quad(
    q: &QuarterIntegrand,
    f: impl Fn(&QuarterIntegrand, f64) -> f64,
    tol: f64,
) -> Result<f64> {
    let mut nseg = 4usize;
    let mut g = |v: f64| f(q, v);
    let mut last = composite_gauss(&mut g, 0.0, q.v_max, nseg, 16);
    for _ in 0..8 {
        nseg *= 2;
        let next = composite_gauss(&mut g, 0.0, q.v_max, nseg, 16);
        let change = (next - last).abs();
        if change <= tol * next.abs() {
            return Ok(next);
        }
        last = next;
    }
    Err(Error::QuadratureNoConvergence {
        doublings: 8,
        last_change: f64::NAN,
    })
}

/// Minimal period at an energy level (gap-parametrized; valid arbitrarily
/// close to the separatrix).
pub fn period_of_level(level: &EnergyLevel, params: &ModelParams) -> Result<f64> {
    let q = QuarterIntegrand::new(level, params);
    let integral = quarter_quad(&q, |q, v| q.weight(v).0, QUAD_TOL)?;
    Ok(2.0 * std::f64::consts::SQRT_2 * integral)
}

/// dT/dhbar at an energy level.
pub fn period_derivative_of_level(level: &EnergyLevel, params: &ModelParams) -> Result<f64> {
    let q = QuarterIntegrand::new(level, params);
    let integral = quarter_quad(
        &q,
        |q, v| {
            let (fw, x, a) = q.weight(v);
            q.derivative_factor(x, a) * fw
        },
        QUAD_TOL,
    )?;
    // hbar in the sqrt(2)/hbar prefactor: safe in f64, hbar ~ hbar* here
    Ok(std::f64::consts::SQRT_2 / level.hbar * integral)
}

fn check_hbar_domain(hbar: f64, params: &ModelParams) -> Result<()> {
    let max = params.h_star * (1.0 - HBAR_CUTOFF_REL);
    if hbar > 0.0 && hbar <= max {
        Ok(())
    } else {
        Err(Error::EnergyRange { hbar, max })
    }
}

/// T(hbar). Domain (0, hbar*(1 - 1e-12)]; accuracy <= 1e-10 relative.
pub fn period(hbar: f64, params: &ModelParams) -> Result<f64> {
    check_hbar_domain(hbar, params)?;
    let level = EnergyLevel::from_hbar(hbar, params)?;
    period_of_level(&level, params)
}

/// T'(hbar) > 0. Domain as [`period`].
pub fn period_derivative(hbar: f64, params: &ModelParams) -> Result<f64> {
    check_hbar_domain(hbar, params)?;
    let level = EnergyLevel::from_hbar(hbar, params)?;
    period_derivative_of_level(&level, params)
}

/// The level with T(level) = `t_target`, solved in log-gap space.
///
/// Valid for any target above the infimum, including targets whose energy is
/// not f64-distinguishable from hbar*.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the guard
pub fn level_for_period(t_target: f64, params: &ModelParams) -> Result<EnergyLevel> {
    if !(t_target > params.t_infimum) || !t_target.is_finite() {
        return Err(Error::PeriodRange {
            target: t_target,
            infimum: params.t_infimum,
        });
    }
    let t_of_ln_gap = |lg: f64, params: &ModelParams| -> Result<f64> {
        let level = EnergyLevel::from_gap(lg.exp(), params)?;
        period_of_level(&level, params)
    };
    // T decreases with gap; bracket [lg_lo, lg_hi] with T(lg_lo) > target
    let mut lg_hi = (params.x_star * (1.0 - 1e-9)).ln();
    let mut lg_lo = {
        // seed from the asymptotic T ~ ln(K/eps), eps ~ 2 lambda d^2 with margin
        let guess = 0.05 * (-0.5 * t_target).exp().max(1e-280);
        guess.ln().min(lg_hi - 1.0)
    };
    let mut f_lo = t_of_ln_gap(lg_lo, params)? - t_target;
    for _ in 0..200 {
        if f_lo > 0.0 {
            break;
        }
        lg_lo -= 5.0;
        f_lo = t_of_ln_gap(lg_lo, params)? - t_target;
    }
    if f_lo <= 0.0 {
        return Err(Error::PeriodRange {
            target: t_target,
            infimum: params.t_infimum,
        });
    }
    let mut f_hi = t_of_ln_gap(lg_hi, params)? - t_target;
    while f_hi > 0.0 {
        // target barely above the infimum: push the turning point toward 0
        lg_hi = (params.x_star - (params.x_star - lg_hi.exp()) / 8.0).ln();
        f_hi = t_of_ln_gap(lg_hi, params)? - t_target;
        if params.x_star - lg_hi.exp() < 1e-14 {
            return Err(Error::PeriodRange {
                target: t_target,
                infimum: params.t_infimum,
            });
        }
    }
    // bisection in ln(gap)
    let (mut a, mut b) = (lg_lo, lg_hi);
    for _ in 0..90 {
        let m = 0.5 * (a + b);
        let fm = t_of_ln_gap(m, params)? - t_target;
        if fm > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    // secant polish on the log variable
    let mut x0 = a;
    let mut x1 = 0.5 * (a + b);
    let mut f0 = t_of_ln_gap(x0, params)? - t_target;
    let mut f1 = t_of_ln_gap(x1, params)? - t_target;
    for _ in 0..4 {
        if f1 == f0 || f1 == 0.0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = t_of_ln_gap(x1, params)? - t_target;
    }
    let mut level = EnergyLevel::from_gap(x1.exp(), params)?;
    if level.needs_dd() {
        let refined = refine_gap_dd(level.gap, t_target, params)?;
        level.gap_lo = (refined - Dd::from_f64(level.gap)).to_f64();
    }
    Ok(level)
}

/// (x, xdot, psi1, psi1') of the autonomous flow: the variational column
/// tracking the turning-point displacement.
struct QuarterVar {
    field: Field<Dd>,
}

impl OdeSystem<Dd, 4> for QuarterVar {
    #[inline]
    fn eval(&self, t: Dd, y: &[Dd; 4], dydt: &mut [Dd; 4]) {
        let q = self.field.dforce_dx(t, y[0]);
        dydt[0] = y[1];
        dydt[1] = -self.field.force(t, y[0]);
        dydt[2] = y[3];
        dydt[3] = -q * y[2];
    }
}

/// Polish the resonant gap in double-double by quarter-period shooting:
/// from `(x* - d, 0)` the orbit reaches x = 0 at exactly T/4, so Newton on
/// `x(t_target/4) = 0` with the co-integrated variational derivative pins
/// T(d) = t_target to the integrator tolerance (~1e-22) instead of the f64
/// quadrature floor (~1e-16, which already shifts deep traces at O(1)).
fn refine_gap_dd(gap: f64, t_target: f64, params: &ModelParams) -> Result<Dd> {
    let sys = QuarterVar {
        field: Field::<Dd>::new(params, &DriveSpec::autonomous()),
    };
    let quarter = t_target / 4.0;
    let mut d = Dd::from_f64(gap);
    for _ in 0..4 {
        let y0 = [params.dd.x_star - d, Dd::ZERO, Dd::ONE, Dd::ZERO];
        let sol = integrate_gbs(&sys, y0, 0.0, quarter, &GbsOptions::default())?;
        let yf = sol.final_state();
        let g = yf[0];
        let slope = yf[2];
        if g.abs().to_f64() < 1e-26 || slope.to_f64() == 0.0 {
            break;
        }
        // x+ = x* - d, so dx(t)/dd = -psi1
        d += g / slope;
    }
    Ok(d)
}

/// The unique hbar with T(hbar) = `t_target` (monotonicity of T).
///
/// `|T(hbar) - t_target| <= 1e-10 t_target` holds on the domain where hbar
/// itself is representable; targets beyond the hbar cutoff must use
/// [`level_for_period`].
pub fn period_inverse(t_target: f64, params: &ModelParams) -> Result<f64> {
    let level = level_for_period(t_target, params)?;
    if level.eps < params.h_star * HBAR_CUTOFF_REL {
        return Err(Error::PeriodRange {
            target: t_target,
            infimum: params.t_infimum,
        });
    }
    Ok(level.hbar)
}

/// nu_m = floor(m Tv sqrt(1 - 4 beta V0^2) / (2 pi)); (m,p) is admissible
/// iff 1 <= p <= nu_m.
pub fn max_p(m: u32, params: &ModelParams) -> u32 {
    let v = m as f64 * params.tv * (1.0 - params.coupling).sqrt() / (2.0 * std::f64::consts::PI);
    let f = v.floor();
    // guard the mathematically-integer boundary against downward rounding
    if v - f > 1.0 - 1e-12 {
        f as u32 + 1
    } else {
        f as u32
    }
}

/// One evaluated point of the period function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PeriodPoint {
    pub hbar: f64,
    pub t: f64,
    pub dt_dhbar: f64,
    pub x_plus: f64,
}

/// T, T' and the turning point at one energy.
pub fn period_point(hbar: f64, params: &ModelParams) -> Result<PeriodPoint> {
    check_hbar_domain(hbar, params)?;
    let level = EnergyLevel::from_hbar(hbar, params)?;
    let t = period_of_level(&level, params)?;
    let dt = period_derivative_of_level(&level, params)?;
    debug_assert!(t > params.t_infimum);
    debug_assert!(dt > 0.0);
    Ok(PeriodPoint {
        hbar,
        t,
        dt_dhbar: dt,
        x_plus: level.x_plus,
    })
}

/// Verification report for the three period-function properties.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodTheoremReport {
    /// |T(1e-10 hbar*) - 2 pi / sqrt(1 - 4 beta V0^2)|
    pub limit_error: f64,
    /// T at hbar*(1 - 10^-k), k = 4, 6, 8, 10
    pub growth_values: Vec<f64>,
    pub growth_monotone: bool,
    /// T at k = 10 exceeds 3x the infimum
    pub growth_exceeds: bool,
    pub min_derivative: f64,
    pub max_fd_rel_err: f64,
    pub t_monotone_on_grid: bool,
    pub grid_size: usize,
}

impl PeriodTheoremReport {
    pub fn limit_pass(&self) -> bool {
        self.limit_error <= 1e-5
    }
    pub fn growth_pass(&self) -> bool {
        self.growth_monotone && self.growth_exceeds
    }
    pub fn derivative_pass(&self) -> bool {
        self.min_derivative > 0.0 && self.max_fd_rel_err <= 1e-6 && self.t_monotone_on_grid
    }
    pub fn all_pass(&self) -> bool {
        self.limit_pass() && self.growth_pass() && self.derivative_pass()
    }
}

/// T at a fixed quadrature resolution: the adaptive doubling stops at
/// hbar-dependent depths, which makes its leftover error discontinuous in
/// hbar; finite differences need an error that cancels between neighboring
/// evaluations.
fn period_fixed_grid(hbar: f64, params: &ModelParams) -> Result<f64> {
    let level = EnergyLevel::from_hbar(hbar, params)?;
    let q = QuarterIntegrand::new(&level, params);
    let mut g = |v: f64| q.weight(v).0;
    let integral = composite_gauss(&mut g, 0.0, q.v_max, 48, 16);
    Ok(2.0 * std::f64::consts::SQRT_2 * integral)
}

/// Centered finite difference of T with the achieved-step correction; the
/// step adapts to the distance from both ends of the energy interval.
pub fn period_fd_derivative(hbar: f64, params: &ModelParams) -> Result<f64> {
    let eps = params.h_star - hbar;
    // keep the step well inside (0, hbar*) while leaving Delta T large
    // enough that quadrature noise stays below 1e-6 relative
    let h = (1e-6 * params.h_star).min(0.4 * hbar).min(5e-4 * eps);
    let hp = hbar + h;
    let hm = hbar - h;
    let achieved = (hp - hbar) + (hbar - hm);
    Ok((period_fixed_grid(hp, params)? - period_fixed_grid(hm, params)?) / achieved)
}

/// Check Theorem-style properties of T over a log-spaced energy grid.
pub fn verify_period_theorem(
    params: &ModelParams,
    grid_size: usize,
) -> Result<PeriodTheoremReport> {
    let grid_size = grid_size.max(10);
    let limit_error = (period(1e-10 * params.h_star, params)? - params.t_infimum).abs();

    let mut growth_values = Vec::new();
    for k in [4, 6, 8, 10] {
        let hb = params.h_star * (1.0 - 10f64.powi(-k));
        growth_values.push(period(hb, params)?);
    }
    let growth_monotone = growth_values.windows(2).all(|w| w[1] > w[0]);
    let growth_exceeds = *growth_values.last().unwrap() > 3.0 * params.t_infimum;

    let lo = 1e-6 * params.h_star;
    let hi = (1.0 - 1e-6) * params.h_star;
    let ratio = (hi / lo).powf(1.0 / (grid_size - 1) as f64);
    let mut min_derivative = f64::INFINITY;
    let mut max_fd_rel_err: f64 = 0.0;
    let mut t_monotone_on_grid = true;
    let mut hb = lo;
    let mut t_last = 0.0;
    for i in 0..grid_size {
        let t = period(hb, params)?;
        if i > 0 && t <= t_last {
            t_monotone_on_grid = false;
        }
        t_last = t;
        let dt = period_derivative(hb, params)?;
        min_derivative = min_derivative.min(dt);
        let fd = period_fd_derivative(hb, params)?;
        max_fd_rel_err = max_fd_rel_err.max(((dt - fd) / dt).abs());
        hb *= ratio;
    }

    Ok(PeriodTheoremReport {
        limit_error,
        growth_values,
        growth_monotone,
        growth_exceeds,
        min_derivative,
        max_fd_rel_err,
        t_monotone_on_grid,
        grid_size,
    })
}
