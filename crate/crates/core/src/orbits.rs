//! Odd and even (m,p)-periodic solutions of the autonomous equation.
//!
//! An (m,p)-periodic solution is an `m Tv`-periodic solution with exactly
//! `2p` zeros per period; here they are the closed orbits of the autonomous
//! equation at the resonant energy `T(hbar) = m Tv / p`, started either at
//! `(0, eta)` (odd in time) or at `(x+, 0)` (even in time). Both symmetry
//! classes are `T/2`-anti-periodic, and at equal energy they are the same
//! closed curve a quarter period apart.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{energy_dd_raw, energy_raw, Field, ModelParams};
use crate::numerics::dd::Dd;
use crate::numerics::gbs::{integrate_gbs, GbsOptions, GbsSolution};
use crate::numerics::real::Real;
use crate::numerics::rk::{integrate_ivp, IvpSolution, RkOptions};
use crate::period::{level_for_period, max_p, period_of_level, EnergyLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Symmetry {
    Odd,
    Even,
}

impl std::fmt::Display for Symmetry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Symmetry::Odd => write!(f, "odd"),
            Symmetry::Even => write!(f, "even"),
        }
    }
}

/// A symmetric periodic solution of the autonomous (`delta = 0`) equation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AutonomousOrbit {
    pub symmetry: Symmetry,
    pub m: u32,
    pub p: u32,
    pub level: EnergyLevel,
    /// eta (odd) or xi = x+ (even).
    pub init: f64,
    /// m Tv / p = T(hbar).
    pub minimal_period: f64,
    /// Set when m = 2 n p.
    pub n: Option<u32>,
}

pub(crate) fn check_admissible(m: u32, p: u32, params: &ModelParams) -> Result<()> {
    let nu_m = max_p(m, params);
    if m >= 1 && p >= 1 && p <= nu_m {
        Ok(())
    } else {
        Err(Error::Inadmissible { m, p, nu_m })
    }
}

fn resonance_index(m: u32, p: u32) -> Option<u32> {
    if m.is_multiple_of(2 * p) {
        Some(m / (2 * p))
    } else {
        None
    }
}

fn build_orbit(
    symmetry: Symmetry,
    m: u32,
    p: u32,
    params: &ModelParams,
) -> Result<AutonomousOrbit> {
    check_admissible(m, p, params)?;
    let t_target = m as f64 * params.tv / p as f64;
    let level = level_for_period(t_target, params)?;
    let init = match symmetry {
        Symmetry::Odd => level.eta(),
        Symmetry::Even => level.x_plus,
    };
    Ok(AutonomousOrbit {
        symmetry,
        m,
        p,
        level,
        init,
        minimal_period: t_target,
        n: resonance_index(m, p),
    })
}

/// The odd (m,p)-periodic solution: starts at `(0, eta)`, `eta = sqrt(2 hbar)`,
/// with `hbar` solving `T(hbar) = m Tv / p`.
pub fn odd_orbit(m: u32, p: u32, params: &ModelParams) -> Result<AutonomousOrbit> {
    build_orbit(Symmetry::Odd, m, p, params)
}

/// The even (m,p)-periodic solution: starts at `(x+(hbar), 0)`.
pub fn even_orbit(m: u32, p: u32, params: &ModelParams) -> Result<AutonomousOrbit> {
    build_orbit(Symmetry::Even, m, p, params)
}

impl AutonomousOrbit {
    pub fn initial_state(&self) -> [f64; 2] {
        match self.symmetry {
            Symmetry::Odd => [0.0, self.init],
            Symmetry::Even => [self.init, 0.0],
        }
    }

    /// Initial state recomputed in double-double from the refined
    /// turning-point gap, so that deep levels keep their full meaning.
    pub(crate) fn initial_state_dd(&self, params: &ModelParams) -> [Dd; 2] {
        let x_plus = params.dd.x_star - self.level.gap_dd();
        match self.symmetry {
            Symmetry::Odd => {
                let h = energy_dd_raw(x_plus, params.dd.coupling);
                [Dd::ZERO, (Dd::from_f64(2.0) * h).sqrt()]
            }
            Symmetry::Even => [x_plus, Dd::ZERO],
        }
    }
}

/// Autonomous field as an ODE system in (x, xdot).
pub(crate) struct AutoField<S: Real> {
    field: Field<S>,
}

impl<S: Real> AutoField<S> {
    pub fn new(params: &ModelParams) -> Self {
        AutoField {
            field: Field::new(params, &crate::model::DriveSpec::autonomous()),
        }
    }
}

impl<S: Real> crate::numerics::rk::OdeSystem<S, 2> for AutoField<S> {
    #[inline(always)]
    fn eval(&self, t: S, y: &[S; 2], dydt: &mut [S; 2]) {
        dydt[0] = y[1];
        dydt[1] = -self.field.force(t, y[0]);
    }
}

/// Double-double node chain plus an f64 shadow: the extrapolation
/// integrator records exact states at macro-step nodes; point evaluations
/// re-integrate locally (span <= one macro step, so no error amplification)
/// with the dense Runge-Kutta, caching one dense segment per node.
pub(crate) struct DdOrbitSolution {
    nodes: GbsSolution<Dd, 2>,
    params: ModelParams,
    segments: RefCell<HashMap<usize, IvpSolution<f64, 2>>>,
}

impl DdOrbitSolution {
    fn eval(&self, t: f64) -> Result<[f64; 2]> {
        let i = self.nodes.anchor_index(t);
        let t_anchor = self.nodes.times[i];
        if t == t_anchor {
            let y = self.nodes.states[i];
            return Ok([y[0].to_f64(), y[1].to_f64()]);
        }
        let mut cache = self.segments.borrow_mut();
        if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(i) {
            let t_next = if i + 1 < self.nodes.times.len() {
                self.nodes.times[i + 1]
            } else {
                // allow a small overshoot past the final node
                let dir = (self.nodes.t_end() - self.nodes.times[0]).signum();
                t_anchor + dir * 0.3
            };
            let y = self.nodes.states[i];
            let sys = AutoField::<f64>::new(&self.params);
            let seg = integrate_ivp(
                &sys,
                [y[0].to_f64(), y[1].to_f64()],
                t_anchor,
                t_next,
                &f64_opts(true),
            )?;
            e.insert(seg);
        }
        cache.get(&i).unwrap().eval(t)
    }
}

/// Precision-dispatched dense solution of the autonomous equation.
pub(crate) enum AutoSolution {
    F64(IvpSolution<f64, 2>),
    Dd(DdOrbitSolution),
}

impl AutoSolution {
    pub fn eval(&self, t: f64) -> Result<[f64; 2]> {
        match self {
            AutoSolution::F64(s) => s.eval(t),
            AutoSolution::Dd(s) => s.eval(t),
        }
    }

    /// Exact double-double state when available (nodes only in dd mode).
    pub fn eval_dd(&self, t: f64) -> Result<[Dd; 2]> {
        match self {
            AutoSolution::F64(s) => {
                let y = s.eval(t)?;
                Ok([Dd::from_f64(y[0]), Dd::from_f64(y[1])])
            }
            AutoSolution::Dd(s) => {
                let i = s.nodes.anchor_index(t);
                if s.nodes.times[i] == t {
                    Ok(s.nodes.states[i])
                } else {
                    let y = s.eval(t)?;
                    Ok([Dd::from_f64(y[0]), Dd::from_f64(y[1])])
                }
            }
        }
    }

    pub fn n_steps(&self) -> usize {
        match self {
            AutoSolution::F64(s) => s.n_steps,
            AutoSolution::Dd(s) => s.nodes.n_steps,
        }
    }
}

pub(crate) fn f64_opts(dense: bool) -> RkOptions {
    RkOptions {
        rel_tol: 5e-13,
        abs_tol: 1e-14,
        dense,
        ..Default::default()
    }
}

pub(crate) fn gbs_opts() -> GbsOptions {
    GbsOptions::default()
}

/// Integrate the autonomous equation from an orbit's own initial condition,
/// in double-double when the level is close to the separatrix.
pub(crate) fn integrate_orbit(
    orbit: &AutonomousOrbit,
    params: &ModelParams,
    t0: f64,
    t1: f64,
    dense: bool,
) -> Result<AutoSolution> {
    let _ = dense;
    if orbit.level.needs_dd() {
        let sys = AutoField::<Dd>::new(params);
        let y0 = orbit.initial_state_dd(params);
        let nodes = integrate_gbs(&sys, y0, t0, t1, &gbs_opts())?;
        Ok(AutoSolution::Dd(DdOrbitSolution {
            nodes,
            params: *params,
            segments: RefCell::new(HashMap::new()),
        }))
    } else {
        let sys = AutoField::<f64>::new(params);
        Ok(AutoSolution::F64(integrate_ivp(
            &sys,
            orbit.initial_state(),
            t0,
            t1,
            &f64_opts(dense),
        )?))
    }
}

/// Time-sampled path with integrator metadata.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// (x, xdot) at the sample times.
    pub states: Vec<[f64; 2]>,
    pub hbar: f64,
    /// max |H(x,xdot) - hbar| over the samples.
    pub energy_drift: f64,
    pub n_steps: usize,
}

/// Sample one minimal period from the symmetric initial condition.
pub fn sample_orbit(
    orbit: &AutonomousOrbit,
    params: &ModelParams,
    num_points: usize,
) -> Result<Trajectory> {
    let n = num_points.max(2);
    let t_end = orbit.minimal_period;
    let sol = integrate_orbit(orbit, params, 0.0, t_end, true)?;
    let mut times = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut drift: f64 = 0.0;
    // drift in double-double: f64 evaluation of H would hide sub-1e-16 errors
    // and overstate ~1e-16 ones
    let h_ref = match &sol {
        AutoSolution::Dd(_) => energy_dd_raw(
            params.dd.x_star - Dd::from_f64(orbit.level.gap),
            params.dd.coupling,
        ),
        AutoSolution::F64(_) => Dd::from_f64(orbit.level.hbar),
    };
    for i in 0..n {
        let t = t_end * i as f64 / (n - 1) as f64;
        let y = sol.eval(t)?;
        let h = match &sol {
            AutoSolution::Dd(_) => {
                let yd = sol.eval_dd(t)?;
                (Dd::from_f64(0.5) * yd[1].sqr() + energy_dd_raw(yd[0], params.dd.coupling))
                    .to_f64()
            }
            AutoSolution::F64(_) => 0.5 * y[1] * y[1] + energy_raw(y[0], params.coupling),
        };
        drift = drift.max((Dd::from_f64(h) - h_ref).to_f64().abs());
        times.push(t);
        states.push(y);
    }
    Ok(Trajectory {
        times,
        states,
        hbar: orbit.level.hbar,
        energy_drift: drift,
        n_steps: sol.n_steps(),
    })
}

/// Symmetry residual report; all maxima over a uniform grid on [0, T/2].
#[derive(Debug, Clone, Serialize)]
pub struct SymmetryResiduals {
    /// max |x(-t) + x(t)| (odd) or |x(-t) - x(t)| (even).
    pub time_reflection: f64,
    /// max |x(t + T/2) + x(t)|.
    pub anti_periodicity: f64,
    /// max |x(T/2 - t) - x(t)| (odd) or |x(T/2 - t) + x(t)| (even).
    pub half_reflection: f64,
    /// For m = 2np odd orbits: min slope of x on [0, n Tv / 2] (positive iff
    /// strictly increasing there).
    pub monotone_min_slope: Option<f64>,
    pub grid_points: usize,
}

impl SymmetryResiduals {
    pub fn max_residual(&self) -> f64 {
        self.time_reflection
            .max(self.anti_periodicity)
            .max(self.half_reflection)
    }
}

pub fn symmetry_residuals(
    orbit: &AutonomousOrbit,
    params: &ModelParams,
) -> Result<SymmetryResiduals> {
    let t = orbit.minimal_period;
    let fwd = integrate_orbit(orbit, params, 0.0, t, true)?;
    let bwd = integrate_orbit(orbit, params, 0.0, -t / 2.0, true)?;
    let grid = 129usize;
    let mut refl: f64 = 0.0;
    let mut anti: f64 = 0.0;
    let mut half: f64 = 0.0;
    for i in 0..grid {
        let s = (t / 2.0) * i as f64 / (grid - 1) as f64;
        let x_t = fwd.eval(s)?[0];
        let x_neg = bwd.eval(-s)?[0];
        let x_shift = fwd.eval(s + t / 2.0)?[0];
        let x_mirror = fwd.eval(t / 2.0 - s)?[0];
        match orbit.symmetry {
            Symmetry::Odd => {
                refl = refl.max((x_neg + x_t).abs());
                half = half.max((x_mirror - x_t).abs());
            }
            Symmetry::Even => {
                refl = refl.max((x_neg - x_t).abs());
                half = half.max((x_mirror + x_t).abs());
            }
        }
        anti = anti.max((x_shift + x_t).abs());
    }
    let monotone_min_slope = match (orbit.symmetry, orbit.n) {
        (Symmetry::Odd, Some(n)) => {
            let span = n as f64 * params.tv / 2.0;
            let mut min_slope = f64::INFINITY;
            let mut prev = fwd.eval(0.0)?[0];
            let pts = 257usize;
            for i in 1..pts {
                let s = span * i as f64 / (pts - 1) as f64;
                let x = fwd.eval(s)?[0];
                min_slope = min_slope.min((x - prev) / (span / (pts - 1) as f64));
                prev = x;
            }
            Some(min_slope)
        }
        _ => None,
    };
    Ok(SymmetryResiduals {
        time_reflection: refl,
        anti_periodicity: anti,
        half_reflection: half,
        monotone_min_slope,
        grid_points: grid,
    })
}

/// Zero census of x(t) over [0, m Tv).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZeroCount {
    pub count: u32,
    /// Zeros where |xdot| < 1e-10 (tangency warning).
    pub tangential: u32,
}

/// Count the zeros of x(t) on `[0, m Tv)`; an (m,p)-orbit has exactly 2p.
///
/// Sign changes are located on a dense grid and refined by bisection on the
/// dense output; the t = 0 zero of an odd start is counted directly.
pub fn count_zeros(orbit: &AutonomousOrbit, params: &ModelParams) -> Result<ZeroCount> {
    let span = orbit.m as f64 * params.tv;
    let sol = integrate_orbit(orbit, params, 0.0, span, true)?;
    count_zeros_of(&sol, span, orbit.symmetry == Symmetry::Odd)
}

pub(crate) fn count_zeros_of(
    sol: &AutoSolution,
    span: f64,
    zero_at_origin: bool,
) -> Result<ZeroCount> {
    let margin = 1e-9 * span;
    let n = 4096usize;
    let mut count = 0u32;
    let mut tangential = 0u32;
    if zero_at_origin {
        count += 1;
        // dx/dt at 0 is eta != 0 on a nonconstant orbit; still check
        if sol.eval(0.0)?[1].abs() < 1e-10 {
            tangential += 1;
        }
    }
    let lo = margin;
    let hi = span - margin;
    let mut t_prev = lo;
    let mut x_prev = sol.eval(t_prev)?[0];
    for i in 1..=n {
        let t = lo + (hi - lo) * i as f64 / n as f64;
        let x = sol.eval(t)?[0];
        if x_prev != 0.0 && x != 0.0 && x_prev.signum() != x.signum() {
            // refine by bisection on the dense output
            let (mut a, mut b) = (t_prev, t);
            let neg_left = x_prev < 0.0;
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                let xm = sol.eval(mid)?[0];
                if xm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if (xm < 0.0) == neg_left {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let z = 0.5 * (a + b);
            count += 1;
            if sol.eval(z)?[1].abs() < 1e-10 {
                tangential += 1;
            }
        }
        t_prev = t;
        x_prev = x;
    }
    Ok(ZeroCount { count, tangential })
}

/// Re-measure the orbit's minimal period by time of flight.
///
/// Integrates from the turning point `(x+, 0)` (the only anchor that keeps
/// deep levels representable) and measures the time between consecutive
/// downward x = 0 crossings, where the section is maximally transversal
/// (|xdot| = eta).
pub fn measure_period(orbit: &AutonomousOrbit, params: &ModelParams) -> Result<f64> {
    let t_nom = orbit.minimal_period;
    let even_anchor = AutonomousOrbit {
        symmetry: Symmetry::Even,
        init: orbit.level.x_plus,
        ..*orbit
    };
    let sol = integrate_orbit(&even_anchor, params, 0.0, 1.35 * t_nom, true)?;
    let mut crossings = Vec::new();
    let n = 2048usize;
    let mut t_prev = 0.0;
    let mut x_prev = sol.eval(0.0)?[0];
    for i in 1..=n {
        let t = 1.35 * t_nom * i as f64 / n as f64;
        let x = sol.eval(t)?[0];
        if x_prev > 0.0 && x <= 0.0 {
            let (mut a, mut b) = (t_prev, t);
            for _ in 0..90 {
                let mid = 0.5 * (a + b);
                if sol.eval(mid)?[0] > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            crossings.push(0.5 * (a + b));
        }
        t_prev = t;
        x_prev = x;
    }
    if crossings.len() < 2 {
        return Err(Error::NonPeriodicBase {
            period: t_nom,
            residual: f64::NAN,
        });
    }
    Ok(crossings[1] - crossings[0])
}

/// Quarter-anchored symmetric evaluator for delta = 0 orbits.
///
/// Near the separatrix a full-period integration decoheres (errors amplify
/// like 1/(hbar* - hbar)); the quarter from the turning point down to x = 0
/// is the numerically clean piece, and the rest of the orbit is its image
/// under the exact time symmetries. First-order trace integrals sample this.
pub(crate) struct SymmetricOrbit {
    quarter: AutoSolution,
    pub period: f64,
    pub quarter_time: f64,
}

impl SymmetricOrbit {
    pub fn build(level: &EnergyLevel, params: &ModelParams) -> Result<Self> {
        let period = period_of_level(level, params)?;
        let quarter_time = 0.25 * period;
        let anchor = AutonomousOrbit {
            symmetry: Symmetry::Even,
            m: 0,
            p: 0,
            level: *level,
            init: level.x_plus,
            minimal_period: period,
            n: None,
        };
        let quarter = integrate_orbit(&anchor, params, 0.0, quarter_time, true)?;
        Ok(SymmetricOrbit {
            quarter,
            period,
            quarter_time,
        })
    }

    /// (x, xdot) with the odd time origin (x(0) = 0, xdot(0) = eta > 0).
    pub fn eval_odd(&self, t: f64) -> Result<[f64; 2]> {
        let tau = t.rem_euclid(self.period);
        let q = self.quarter_time;
        if tau < q {
            let y = self.quarter.eval(q - tau)?;
            Ok([y[0], -y[1]])
        } else if tau < 2.0 * q {
            self.quarter.eval(tau - q)
        } else {
            let y = self.eval_odd(tau - 2.0 * q)?;
            Ok([-y[0], -y[1]])
        }
    }

    /// (x, xdot) with the even time origin (x(0) = x+, xdot(0) = 0).
    pub fn eval_even(&self, t: f64) -> Result<[f64; 2]> {
        let tau = t.rem_euclid(self.period);
        let q = self.quarter_time;
        if tau < q {
            self.quarter.eval(tau)
        } else if tau < 2.0 * q {
            let y = self.quarter.eval(2.0 * q - tau)?;
            Ok([-y[0], y[1]])
        } else {
            let y = self.eval_even(tau - 2.0 * q)?;
            Ok([-y[0], -y[1]])
        }
    }
}


#[cfg(test)]
mod oracle_tests {
    use super::*;
    use approx::assert_relative_eq;

    // quadrature period against the time-of-flight oracle at off-resonance
    // energies (deterministic pseudo-random sample of the energy range)
    #[test]
    fn period_matches_time_of_flight_on_sampled_energies() {
        let p = ModelParams::default_config();
        let mut u = 0.37;
        for _ in 0..10 {
            u = (u * 997.0 + 0.1234) % 1.0;
            let hbar = p.h_star * (0.02 + 0.9 * u);
            let level = EnergyLevel::from_hbar(hbar, &p).unwrap();
            let t_quad = period_of_level(&level, &p).unwrap();
            let orbit = AutonomousOrbit {
                symmetry: Symmetry::Even,
                m: 1,
                p: 1,
                level,
                init: level.x_plus,
                minimal_period: t_quad,
                n: None,
            };
            let t_flight = measure_period(&orbit, &p).unwrap();
            assert_relative_eq!(t_quad, t_flight, max_relative = 1e-8);
        }
    }

    // both quarter-shift relations at equal energy:
    // S(t + T/4) = C(t) and C(t + T/4) = -S(t)
    #[test]
    fn both_quarter_shift_relations() -> crate::Result<()> {
        let p = ModelParams::default_config();
        let orb = odd_orbit(3, 2, &p)?;
        let sym = SymmetricOrbit::build(&orb.level, &p)?;
        let q = sym.quarter_time;
        let mut worst: f64 = 0.0;
        for i in 0..80 {
            let t = orb.minimal_period * i as f64 / 79.0;
            let s_shift = sym.eval_odd(t + q)?[0];
            let c_t = sym.eval_even(t)?[0];
            worst = worst.max((s_shift - c_t).abs());
            let c_shift = sym.eval_even(t + q)?[0];
            let s_t = sym.eval_odd(t)?[0];
            worst = worst.max((c_shift + s_t).abs());
        }
        assert!(worst <= 1e-10, "quarter-shift residual {worst}");
        Ok(())
    }
}
