//! Hill-equation monodromy along a periodic solution and the linear
//! stability classification of the Poincare trace.
//!
//! Along an mTv-periodic solution x(t) the linearization is
//! `y'' + q(t) y = 0` with `q(t) = dF/dx(x(t), t, delta)`. The normalized
//! fundamental solutions give the trace `tau = psi1(mTv) + psi2'(mTv)`:
//! |tau| < 2 is elliptic (linearly stable), |tau| > 2 hyperbolic
//! (Lyapunov unstable), |tau| = 2 parabolic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{energy_dd_raw, DriveSpec, Field, ModelParams};
use crate::numerics::dd::Dd;
use crate::numerics::gbs::integrate_gbs;
use crate::numerics::real::Real;
use crate::numerics::rk::{integrate_ivp, IvpSolution, OdeSystem, RkOptions};
use crate::orbits::{f64_opts, gbs_opts};
use crate::period::NEAR_SEPARATRIX_DD;

/// Fundamental-solution endpoint data of the Hill equation over [0, m Tv].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Monodromy {
    pub psi1_end: f64,
    pub dpsi1_end: f64,
    pub psi2_end: f64,
    pub dpsi2_end: f64,
    /// psi1(mTv) + psi2'(mTv).
    pub trace: f64,
    pub period_used: f64,
    /// Wronskian at the endpoint (Liouville: exactly 1 for a Hill system).
    pub determinant: f64,
    /// Max |Wronskian - 1| sampled at interior points.
    pub wronskian_drift: f64,
    /// |state(mTv) - state(0)| of the base solution.
    pub base_return_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StabilityKind {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

impl std::fmt::Display for StabilityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StabilityKind::Elliptic => write!(f, "elliptic"),
            StabilityKind::Hyperbolic => write!(f, "hyperbolic"),
            StabilityKind::Parabolic => write!(f, "parabolic"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictSource {
    NumericalTrace,
    FirstOrderCriterion,
    TheoremPrediction,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    pub trace: f64,
    pub source: VerdictSource,
}

/// Threshold classification of the trace; `|tau| - 2` within `tol` of zero
/// is reported parabolic.
pub fn classify(trace: f64, tol: f64) -> StabilityVerdict {
    let excess = trace.abs() - 2.0;
    let kind = if excess.abs() <= tol {
        StabilityKind::Parabolic
    } else if excess < 0.0 {
        StabilityKind::Elliptic
    } else {
        StabilityKind::Hyperbolic
    };
    StabilityVerdict {
        kind,
        trace,
        source: VerdictSource::NumericalTrace,
    }
}

/// [`classify`] at the default 1e-9 tolerance.
pub fn classify_default(trace: f64) -> StabilityVerdict {
    classify(trace, 1e-9)
}

/// Base flow plus two variational copies, co-integrated as one 6-dim system
/// so no interpolation of q(t) enters the trace.
pub(crate) struct Variational6<S: Real> {
    field: Field<S>,
}

impl<S: Real> Variational6<S> {
    pub fn new(params: &ModelParams, drive: &DriveSpec) -> Self {
        Variational6 {
            field: Field::new(params, drive),
        }
    }
}

impl<S: Real> OdeSystem<S, 6> for Variational6<S> {
    #[inline(always)]
    fn eval(&self, t: S, y: &[S; 6], dydt: &mut [S; 6]) {
        let q = self.field.dforce_dx(t, y[0]);
        dydt[0] = y[1];
        dydt[1] = -self.field.force(t, y[0]);
        dydt[2] = y[3];
        dydt[3] = -q * y[2];
        dydt[4] = y[5];
        dydt[5] = -q * y[4];
    }
}

/// Which arithmetic carries the integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F64,
    Dd,
}

/// Choose the precision from the proximity of the initial energy to the
/// saddle energy (the conditioning of near-separatrix monodromies grows like
/// 1/(hbar* - hbar), beyond f64 for the resonant levels with n >= 2).
pub fn recommended_precision(state: [f64; 2], params: &ModelParams) -> Precision {
    let h = Dd::from_f64(0.5) * Dd::from_f64(state[1]).sqr()
        + energy_dd_raw(Dd::from_f64(state[0]), params.dd.coupling);
    let eps = (params.dd.h_star - h).to_f64();
    if eps.abs() < NEAR_SEPARATRIX_DD {
        Precision::Dd
    } else {
        Precision::F64
    }
}

fn finish_monodromy<S: Real>(
    yf: [S; 6],
    initial_state: [S; 2],
    period: f64,
    wronskian_drift: f64,
) -> Result<Monodromy> {
    let dx = (yf[0] - initial_state[0]).to_f64();
    let dv = (yf[1] - initial_state[1]).to_f64();
    let base_return_residual = dx.hypot(dv);
    if base_return_residual > 1e-7 {
        return Err(Error::NonPeriodicBase {
            period,
            residual: base_return_residual,
        });
    }
    Ok(Monodromy {
        psi1_end: yf[2].to_f64(),
        dpsi1_end: yf[3].to_f64(),
        psi2_end: yf[4].to_f64(),
        dpsi2_end: yf[5].to_f64(),
        trace: (yf[2] + yf[5]).to_f64(),
        period_used: period,
        determinant: (yf[2] * yf[5] - yf[3] * yf[4]).to_f64(),
        wronskian_drift,
        base_return_residual,
    })
}

fn monodromy_core_f64(
    initial_state: [f64; 2],
    drive: &DriveSpec,
    params: &ModelParams,
    m: u32,
) -> Result<Monodromy> {
    let period = m as f64 * params.tv;
    let sys = Variational6::<f64>::new(params, drive);
    let y0 = [initial_state[0], initial_state[1], 1.0, 0.0, 0.0, 1.0];
    // extrapolation keeps the accumulated truncation of the large
    // variational components near 1e-10 where a tableau method leaves 1e-7
    let opts = crate::numerics::gbs::GbsOptions {
        tol: 3e-15,
        ..Default::default()
    };
    let sol = integrate_gbs(&sys, y0, 0.0, period, &opts)?;
    let mut wronskian_drift: f64 = 0.0;
    for i in 1..=10 {
        let t = period * i as f64 / 11.0;
        let k = sol.anchor_index(t);
        let y = sol.states[k];
        let w = y[2] * y[5] - y[3] * y[4];
        wronskian_drift = wronskian_drift.max((w - 1.0).abs());
    }
    finish_monodromy(sol.final_state(), initial_state, period, wronskian_drift)
}

fn monodromy_core_dd(
    initial_state: [Dd; 2],
    drive: &DriveSpec,
    params: &ModelParams,
    m: u32,
) -> Result<Monodromy> {
    let period = m as f64 * params.tv;
    let sys = Variational6::<Dd>::new(params, drive);
    let y0 = [
        initial_state[0],
        initial_state[1],
        Dd::ONE,
        Dd::ZERO,
        Dd::ZERO,
        Dd::ONE,
    ];
    let sol = integrate_gbs(&sys, y0, 0.0, period, &gbs_opts())?;
    // Wronskian sampled at the extrapolation nodes nearest 10 interior times
    let mut wronskian_drift: f64 = 0.0;
    for i in 1..=10 {
        let t = period * i as f64 / 11.0;
        let k = sol.anchor_index(t);
        let y = sol.states[k];
        let w = y[2] * y[5] - y[3] * y[4];
        wronskian_drift = wronskian_drift.max((w - Dd::ONE).abs().to_f64());
    }
    finish_monodromy(sol.final_state(), initial_state, period, wronskian_drift)
}

/// Monodromy over [0, m Tv] from a state on an mTv-periodic solution,
/// with the arithmetic chosen by [`recommended_precision`].
pub fn monodromy(
    initial_state: [f64; 2],
    drive: &DriveSpec,
    params: &ModelParams,
    m: u32,
) -> Result<Monodromy> {
    monodromy_with(
        initial_state,
        drive,
        params,
        m,
        recommended_precision(initial_state, params),
    )
}

/// Monodromy with an explicit precision choice; the double-double route
/// lifts the f64 initial state exactly.
pub fn monodromy_with(
    initial_state: [f64; 2],
    drive: &DriveSpec,
    params: &ModelParams,
    m: u32,
    precision: Precision,
) -> Result<Monodromy> {
    match precision {
        Precision::F64 => monodromy_core_f64(initial_state, drive, params, m),
        Precision::Dd => monodromy_core_dd(
            [
                Dd::from_f64(initial_state[0]),
                Dd::from_f64(initial_state[1]),
            ],
            drive,
            params,
            m,
        ),
    }
}

/// 2x2 double-double matrix product.
fn mat_mul(a: [Dd; 4], b: [Dd; 4]) -> [Dd; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// Trace over the full m Tv interval from the variational endpoint of a
/// symmetric sub-interval.
///
/// With q even in t and symmetric about the midpoint of [0, L], the
/// fundamental matrix satisfies Psi(L) = sigma Psi(L/2)^{-1} sigma Psi(L/2),
/// giving Psi(L) = [[ad+bc, 2bd], [2ac, ad+bc]] from Psi(L/2) = [[a,b],[c,d]].
/// Integrating only the clean piece is what makes deep near-separatrix
/// traces computable: each avoided saddle passage costs a factor ~T'(hbar)
/// in error amplification.
pub(crate) fn compose_symmetric(yf: [Dd; 6], repeats: u32) -> ([Dd; 4], Dd) {
    let (a, c, b, d) = (yf[2], yf[3], yf[4], yf[5]);
    let two = Dd::from_f64(2.0);
    let diag = a * d + b * c;
    let half = [diag, two * b * d, two * a * c, diag];
    let mut m = [Dd::ONE, Dd::ZERO, Dd::ZERO, Dd::ONE];
    for _ in 0..repeats {
        m = mat_mul(m, half);
    }
    let w = a * d - b * c;
    (m, w)
}

/// Monodromy of an autonomous orbit over its m forcing periods.
///
/// Near-separatrix levels integrate the fundamental solutions over one
/// quarter of the minimal period in double-double from the exact level
/// initial condition, then assemble the full-period matrix through the
/// reversibility algebra; a direct integration over [0, m Tv] would pass
/// the saddle creep 2p times and lose the trace to conditioning (measured:
/// O(100) error at (5,1) even at tolerance 1e-22).
pub fn orbit_monodromy(
    orbit: &crate::orbits::AutonomousOrbit,
    params: &ModelParams,
) -> Result<Monodromy> {
    let drive = DriveSpec::autonomous();
    if !orbit.level.needs_dd() {
        return monodromy_core_f64(orbit.initial_state(), &drive, params, orbit.m);
    }
    let period = orbit.m as f64 * params.tv;
    let t_min = orbit.minimal_period;
    let quarter = 0.25 * t_min;
    let sys = Variational6::<Dd>::new(params, &drive);
    let s0 = orbit.initial_state_dd(params);
    let y0 = [s0[0], s0[1], Dd::ONE, Dd::ZERO, Dd::ZERO, Dd::ONE];
    let sol = integrate_gbs(&sys, y0, 0.0, quarter, &gbs_opts())?;
    // Wronskian sampled at the quarter's extrapolation nodes
    let mut wronskian_drift: f64 = 0.0;
    for i in 1..=10 {
        let t = quarter * i as f64 / 11.0;
        let k = sol.anchor_index(t);
        let y = sol.states[k];
        let w = y[2] * y[5] - y[3] * y[4];
        wronskian_drift = wronskian_drift.max((w - Dd::ONE).abs().to_f64());
    }
    // Psi(T/2) composed from the quarter, then M = Psi(T/2)^{2p}
    let (m, w_quarter) = compose_symmetric(sol.final_state(), 2 * orbit.p);
    wronskian_drift = wronskian_drift.max((w_quarter - Dd::ONE).abs().to_f64());

    // the base-return contract is still measured by direct integration
    let base_sys = crate::orbits::AutoField::<Dd>::new(params);
    let full = integrate_gbs(&base_sys, s0, 0.0, period, &gbs_opts())?;
    let bf = full.final_state();
    let base_return_residual = (bf[0] - s0[0]).to_f64().hypot((bf[1] - s0[1]).to_f64());
    if base_return_residual > 1e-7 {
        return Err(Error::NonPeriodicBase {
            period,
            residual: base_return_residual,
        });
    }

    Ok(Monodromy {
        psi1_end: m[0].to_f64(),
        dpsi1_end: m[2].to_f64(),
        psi2_end: m[1].to_f64(),
        dpsi2_end: m[3].to_f64(),
        trace: (m[0] + m[3]).to_f64(),
        period_used: period,
        determinant: (m[0] * m[3] - m[1] * m[2]).to_f64(),
        wronskian_drift,
        base_return_residual,
    })
}

/// Independent code path: integrate the base solution alone, then drive the
/// 2x2 state-transition flow from the interpolated coefficient q(t).
///
/// Agreement with [`monodromy`] validates both the co-integration and the
/// dense output.
pub fn monodromy_via_matrix_flow(
    initial_state: [f64; 2],
    drive: &DriveSpec,
    params: &ModelParams,
    m: u32,
) -> Result<Monodromy> {
    let period = m as f64 * params.tv;
    let tight = RkOptions {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        dense: true,
        ..Default::default()
    };
    let base_sys = |t: f64, y: &[f64; 2], dydt: &mut [f64; 2]| {
        let field = Field::<f64>::new(params, drive);
        dydt[0] = y[1];
        dydt[1] = -field.force(t, y[0]);
    };
    let base = integrate_ivp(&base_sys, initial_state, 0.0, period, &tight)?;
    let field = Field::<f64>::new(params, drive);
    let stm_sys = |t: f64, y: &[f64; 4], dydt: &mut [f64; 4]| {
        let x = base.eval(t).map(|s| s[0]).unwrap_or(f64::NAN);
        let q = field.dforce_dx(t, x);
        // columns (psi1, psi1') and (psi2, psi2')
        dydt[0] = y[1];
        dydt[1] = -q * y[0];
        dydt[2] = y[3];
        dydt[3] = -q * y[2];
    };
    let stm = integrate_ivp(
        &stm_sys,
        [1.0, 0.0, 0.0, 1.0],
        0.0,
        period,
        &RkOptions {
            dense: false,
            ..tight
        },
    )?;
    let yf = stm.final_state();
    let bf = base.final_state();
    let base_return_residual = (bf[0] - initial_state[0]).hypot(bf[1] - initial_state[1]);
    Ok(Monodromy {
        psi1_end: yf[0],
        dpsi1_end: yf[1],
        psi2_end: yf[2],
        dpsi2_end: yf[3],
        trace: yf[0] + yf[3],
        period_used: period,
        determinant: yf[0] * yf[3] - yf[1] * yf[2],
        wronskian_drift: 0.0,
        base_return_residual,
    })
}

/// The Hill coefficient q(t) = dF/dx along a base solution.
pub struct HillPotential {
    base: IvpSolution<f64, 2>,
    field: Field<f64>,
}

impl HillPotential {
    /// q along an autonomous orbit, over [0, m Tv].
    pub fn along_orbit(
        orbit: &crate::orbits::AutonomousOrbit,
        params: &ModelParams,
    ) -> Result<Self> {
        let drive = DriveSpec::autonomous();
        let sys = |t: f64, y: &[f64; 2], dydt: &mut [f64; 2]| {
            let field = Field::<f64>::new(params, &drive);
            dydt[0] = y[1];
            dydt[1] = -field.force(t, y[0]);
        };
        let span = orbit.m.max(1) as f64 * params.tv;
        let base = integrate_ivp(&sys, orbit.initial_state(), 0.0, span, &f64_opts(true))?;
        Ok(HillPotential {
            base,
            field: Field::new(params, &drive),
        })
    }

    /// q along a forced base solution started at `state`.
    pub fn along_state(
        state: [f64; 2],
        drive: &DriveSpec,
        params: &ModelParams,
        m: u32,
    ) -> Result<Self> {
        let sys = |t: f64, y: &[f64; 2], dydt: &mut [f64; 2]| {
            let field = Field::<f64>::new(params, drive);
            dydt[0] = y[1];
            dydt[1] = -field.force(t, y[0]);
        };
        let base = integrate_ivp(&sys, state, 0.0, m as f64 * params.tv, &f64_opts(true))?;
        Ok(HillPotential {
            base,
            field: Field::new(params, drive),
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let y = self.base.eval(t)?;
        Ok(self.field.dforce_dx(t, y[0]))
    }
}

/// q(t) for the trivial x = 0 solution: `1 - 4 beta V(t)^2`, constant
/// `1 - 4 beta V0^2` when delta = 0.
pub fn hill_potential_at_origin(t: f64, drive: &DriveSpec, params: &ModelParams) -> f64 {
    Field::<f64>::new(params, drive).dforce_dx(t, 0.0)
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
    fn classify_thresholds() {
        assert_eq!(classify(1.5, 1e-9).kind, StabilityKind::Elliptic);
        assert_eq!(classify(2.3, 1e-9).kind, StabilityKind::Hyperbolic);
        assert_eq!(classify(-2.5, 1e-9).kind, StabilityKind::Hyperbolic);
        assert_eq!(classify(2.0 + 4e-10, 1e-9).kind, StabilityKind::Parabolic);
        assert_eq!(classify(-2.0 + 4e-10, 1e-9).kind, StabilityKind::Parabolic);
    }

    #[test]
    fn constant_coefficient_trace() {
        // x = 0, delta = 0: q = 0.75, tau over 2 Tv = 2 cos(2 Tv sqrt(0.75))
        let p = params();
        let drive = DriveSpec::autonomous();
        assert_eq!(hill_potential_at_origin(0.3, &drive, &p), 0.75);
        let m = monodromy([0.0, 0.0], &drive, &p, 2).unwrap();
        let expect = 2.0 * (2.0 * p.tv * 0.75f64.sqrt()).cos();
        assert_relative_eq!(m.trace, expect, max_relative = 1e-10);
        assert_relative_eq!(m.determinant, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn autonomous_orbit_trace_is_two() {
        let p = params();
        let orb = odd_orbit(2, 1, &p).unwrap();
        let m = monodromy(orb.initial_state(), &DriveSpec::autonomous(), &p, 2).unwrap();
        assert!((m.trace - 2.0).abs() < 1e-6, "tau = {}", m.trace);
        assert!((m.determinant - 1.0).abs() < 1e-8);
        assert!(
            m.wronskian_drift < 1e-8,
            "wronskian drift {}",
            m.wronskian_drift
        );
    }

    #[test]
    fn two_code_paths_agree() {
        // The 1e-9 cross-path agreement is a conditioning-limited statement:
        // it holds on orbits whose variational solutions stay moderate. The
        // trace error scales with T'(hbar); (4,3) has T' ~ 31 and meets the
        // contract, (2,1) with T' ~ 3e3 is checked against the double-double
        // reference at its f64 conditioning floor instead.
        let p = params();
        let orb = crate::orbits::odd_orbit(4, 3, &p).unwrap();
        let a = monodromy_with(
            orb.initial_state(),
            &DriveSpec::autonomous(),
            &p,
            4,
            Precision::F64,
        )
        .unwrap();
        let b = monodromy_via_matrix_flow(orb.initial_state(), &DriveSpec::autonomous(), &p, 4)
            .unwrap();
        assert!(
            (a.trace - b.trace).abs() <= 1e-9,
            "{} vs {}",
            a.trace,
            b.trace
        );
        assert!((a.psi2_end - b.psi2_end).abs() / a.psi2_end.abs().max(1.0) < 1e-8);

        let orb = odd_orbit(2, 1, &p).unwrap();
        let r = monodromy_with(
            orb.initial_state(),
            &DriveSpec::autonomous(),
            &p,
            2,
            Precision::Dd,
        )
        .unwrap();
        let a = monodromy_with(
            orb.initial_state(),
            &DriveSpec::autonomous(),
            &p,
            2,
            Precision::F64,
        )
        .unwrap();
        let b = monodromy_via_matrix_flow(orb.initial_state(), &DriveSpec::autonomous(), &p, 2)
            .unwrap();
        assert!(
            (a.trace - r.trace).abs() <= 5e-9,
            "co-integrated {} vs dd {}",
            a.trace,
            r.trace
        );
        assert!(
            (b.trace - r.trace).abs() <= 5e-7,
            "matrix-flow {} vs dd {}",
            b.trace,
            r.trace
        );
    }

    #[test]
    fn rejects_non_periodic_base() {
        let p = params();
        // a state well off any 2Tv-periodic orbit
        let err = monodromy([0.3, 0.1], &DriveSpec::autonomous(), &p, 2);
        assert!(matches!(err, Err(Error::NonPeriodicBase { .. })));
    }

    #[test]
    fn q_is_even_and_half_periodic_along_orbit() {
        let p = params();
        let orb = odd_orbit(2, 1, &p).unwrap();
        let q = HillPotential::along_orbit(&orb, &p).unwrap();
        let t_half = orb.minimal_period / 2.0;
        for i in 0..40 {
            let t = t_half * i as f64 / 39.0;
            let a = q.eval(t).unwrap();
            let b = q.eval(t + t_half).unwrap();
            assert!(
                (a - b).abs() < 1e-7,
                "q not T/2-periodic at {t}: {a} vs {b}"
            );
        }
        // evenness via the orbit symmetry x(T-t) = -x(t), q even in x
        for i in 1..20 {
            let t = 0.4 * i as f64 / 19.0;
            let a = q.eval(t).unwrap();
            let b = q.eval(orb.minimal_period - t).unwrap();
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn precision_dispatch() {
        let p = params();
        assert_eq!(recommended_precision([0.1, 0.0], &p), Precision::F64);
        let deep = odd_orbit(4, 1, &p).unwrap();
        assert_eq!(
            recommended_precision(deep.initial_state(), &p),
            Precision::Dd
        );
    }
}

#[cfg(test)]
mod convergence_tests {
    use super::*;
    use crate::numerics::rk::{integrate_ivp, RkOptions};
    use crate::orbits::odd_orbit;

    // |tau - 2| decreases as the integrator tolerance tightens
    #[test]
    fn trace_error_decreases_with_tolerance() {
        let p = ModelParams::default_config();
        let orb = odd_orbit(2, 1, &p).unwrap();
        let sys = Variational6::<f64>::new(&p, &DriveSpec::autonomous());
        let y0 = [0.0, orb.init, 1.0, 0.0, 0.0, 1.0];
        let mut last = f64::INFINITY;
        for rt in [1e-7, 1e-9, 1e-11] {
            let opts = RkOptions {
                rel_tol: rt,
                abs_tol: rt * 1e-2,
                dense: false,
                ..Default::default()
            };
            let sol = integrate_ivp(&sys, y0, 0.0, 2.0 * p.tv, &opts).unwrap();
            let yf = sol.final_state();
            let err = (yf[2] + yf[5] - 2.0).abs();
            assert!(
                err < last,
                "tau error did not decrease at rtol {rt}: {err} vs {last}"
            );
            last = err;
        }
    }
}
