//! Shooting-based continuation of the forced symmetric periodic orbits.
//!
//! The reversibility symmetries reduce periodicity to a scalar boundary
//! condition on half the interval: an odd mTv-periodic solution is the
//! solution with `x(0) = 0, xdot(0) = eta` and `x(mTv/2) = 0`; an even one
//! has `x(0) = xi, xdot(0) = 0` and `xdot(mTv/2) = 0`. Newton iterates on
//! the scalar map with the derivative supplied by the co-integrated
//! variational equation; each converged member carries its monodromy trace
//! over the full m Tv.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hill::Variational6;
use crate::model::{DriveSpec, ModelParams};
use crate::numerics::dd::Dd;
use crate::numerics::gbs::integrate_gbs;
use crate::numerics::real::Real;
use crate::numerics::rk::{integrate_ivp, RkOptions};
use crate::orbits::{check_admissible, even_orbit, f64_opts, gbs_opts, odd_orbit, Symmetry};
use crate::period::level_for_period;

/// A forced (delta > 0) symmetric periodic solution found by shooting.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ForcedOrbit {
    pub symmetry: Symmetry,
    pub m: u32,
    pub p: u32,
    pub delta: f64,
    /// eta(delta) for odd, xi(delta) for even.
    pub init: f64,
    /// |half-interval boundary value| at the accepted iterate.
    pub shooting_residual: f64,
    /// Poincare trace over [0, m Tv].
    pub trace: f64,
    /// |state(mTv) - state(0)|.
    pub return_residual: f64,
    pub newton_iterations: u32,
}

struct ShootOutcome<S: Real> {
    init: S,
    residual: f64,
    iterations: u32,
}

fn shoot_core<S: Real>(
    symmetry: Symmetry,
    guess: S,
    half: f64,
    propagate: &impl Fn([S; 6], f64) -> Result<[S; 6]>,
    res_tol: f64,
) -> Result<ShootOutcome<S>> {
    let boundary = |u: S| -> Result<(S, S)> {
        let y0 = match symmetry {
            Symmetry::Odd => [S::zero(), u, S::zero(), S::zero(), S::zero(), S::one()],
            Symmetry::Even => [u, S::zero(), S::one(), S::zero(), S::zero(), S::one()],
        };
        let yf = propagate(y0, half)?;
        Ok(match symmetry {
            Symmetry::Odd => (yf[0], yf[4]),  // x(half), dx/d eta
            Symmetry::Even => (yf[1], yf[3]), // xdot(half), dxdot/d xi
        })
    };

    let mut u = guess;
    let (mut res, mut deriv) = boundary(u)?;
    let mut best = ShootOutcome {
        init: u,
        residual: res.abs().to_f64(),
        iterations: 1,
    };
    let max_iter = 30u32;
    for it in 1..=max_iter {
        let res_f = res.abs().to_f64();
        if res_f <= res_tol || deriv.to_f64() == 0.0 {
            break;
        }
        // damped Newton: near a separatrix the full step can throw the
        // trajectory out of the oscillation region entirely
        let step = res / deriv;
        let mut lambda = 1.0f64;
        let mut advanced = false;
        while lambda >= 1.0 / 4096.0 {
            let cand = u - step * S::from_f64(lambda);
            match boundary(cand) {
                Ok((r2, d2)) if r2.abs().to_f64() < res_f => {
                    u = cand;
                    res = r2;
                    deriv = d2;
                    advanced = true;
                    break;
                }
                _ => lambda *= 0.5,
            }
        }
        let res_f = res.abs().to_f64();
        if res_f < best.residual {
            best = ShootOutcome {
                init: u,
                residual: res_f,
                iterations: it + 1,
            };
        }
        if !advanced {
            break;
        }
    }
    if best.residual > 1e-9 {
        return Err(Error::ShootingNoConvergence {
            iterations: max_iter,
            residual: best.residual,
        });
    }
    Ok(best)
}

fn closeup<S: Real>(
    symmetry: Symmetry,
    init: S,
    span: f64,
    propagate: &impl Fn([S; 6], f64) -> Result<[S; 6]>,
) -> Result<(f64, f64)> {
    let y0 = match symmetry {
        Symmetry::Odd => [S::zero(), init, S::one(), S::zero(), S::zero(), S::one()],
        Symmetry::Even => [init, S::zero(), S::one(), S::zero(), S::zero(), S::one()],
    };
    let yf = propagate(y0, span)?;
    let trace = (yf[2] + yf[5]).to_f64();
    let (dx, dv) = match symmetry {
        Symmetry::Odd => (yf[0].to_f64(), (yf[1] - init).to_f64()),
        Symmetry::Even => ((yf[0] - init).to_f64(), yf[1].to_f64()),
    };
    Ok((trace, dx.hypot(dv)))
}

fn shoot_dispatch(
    symmetry: Symmetry,
    m: u32,
    p: u32,
    delta: f64,
    guess: f64,
    params: &ModelParams,
) -> Result<ForcedOrbit> {
    check_admissible(m, p, params)?;
    let drive = DriveSpec::cosine(delta, params)?;
    let level = level_for_period(m as f64 * params.tv / p as f64, params)?;
    let half = m as f64 * params.tv / 2.0;
    let span = m as f64 * params.tv;
    if level.needs_dd() {
        let sys = Variational6::<Dd>::new(params, &drive);
        let opts = gbs_opts();
        let prop = |y0: [Dd; 6], t1: f64| -> Result<[Dd; 6]> {
            Ok(integrate_gbs(&sys, y0, 0.0, t1, &opts)?.final_state())
        };
        let out = shoot_core::<Dd>(symmetry, Dd::from_f64(guess), half, &prop, 1e-17)?;
        // full-period return residual measured directly; trace assembled
        // from the half interval (q is symmetric about mTv/2), avoiding one
        // error-amplifying saddle passage
        let (_, ret) = closeup(symmetry, out.init, span, &prop)?;
        let y0 = match symmetry {
            Symmetry::Odd => [Dd::ZERO, out.init, Dd::ONE, Dd::ZERO, Dd::ZERO, Dd::ONE],
            Symmetry::Even => [out.init, Dd::ZERO, Dd::ONE, Dd::ZERO, Dd::ZERO, Dd::ONE],
        };
        let yh = prop(y0, half)?;
        let (mat, _) = crate::hill::compose_symmetric(yh, 1);
        let trace = (mat[0] + mat[3]).to_f64();
        Ok(ForcedOrbit {
            symmetry,
            m,
            p,
            delta,
            init: out.init.to_f64(),
            shooting_residual: out.residual,
            trace,
            return_residual: ret,
            newton_iterations: out.iterations,
        })
    } else {
        let sys = Variational6::<f64>::new(params, &drive);
        let opts = RkOptions {
            dense: false,
            ..f64_opts(false)
        };
        let prop = |y0: [f64; 6], t1: f64| -> Result<[f64; 6]> {
            Ok(integrate_ivp(&sys, y0, 0.0, t1, &opts)?.final_state())
        };
        let out = shoot_core::<f64>(symmetry, guess, half, &prop, 5e-13)?;
        let (trace, ret) = closeup(symmetry, out.init, span, &prop)?;
        Ok(ForcedOrbit {
            symmetry,
            m,
            p,
            delta,
            init: out.init,
            shooting_residual: out.residual,
            trace,
            return_residual: ret,
            newton_iterations: out.iterations,
        })
    }
}

/// Find the odd mTv-periodic forced solution near `guess`.
pub fn shoot_odd(
    m: u32,
    p: u32,
    delta: f64,
    guess: f64,
    params: &ModelParams,
) -> Result<ForcedOrbit> {
    shoot_dispatch(Symmetry::Odd, m, p, delta, guess, params)
}

/// Find the even mTv-periodic forced solution near `guess`.
pub fn shoot_even(
    m: u32,
    p: u32,
    delta: f64,
    guess: f64,
    params: &ModelParams,
) -> Result<ForcedOrbit> {
    shoot_dispatch(Symmetry::Even, m, p, delta, guess, params)
}

/// A delta-family of forced orbits; aborts cleanly at the first member that
/// fails to converge (possible fold or loss of the orbit).
#[derive(Debug, Clone, Serialize)]
pub struct FamilyResult {
    pub symmetry: Symmetry,
    pub m: u32,
    pub p: u32,
    pub members: Vec<ForcedOrbit>,
    pub aborted: Option<(f64, String)>,
}

/// Predictor-corrector sweep over an increasing delta grid starting at 0;
/// each member seeds the next.
pub fn continue_family(
    m: u32,
    p: u32,
    symmetry: Symmetry,
    delta_grid: &[f64],
    params: &ModelParams,
) -> Result<FamilyResult> {
    check_admissible(m, p, params)?;
    if delta_grid.is_empty() || delta_grid[0] != 0.0 {
        return Err(Error::InvalidParams("delta grid must start at 0".into()));
    }
    if delta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(
            "delta grid must be strictly increasing".into(),
        ));
    }
    if *delta_grid.last().unwrap() >= params.delta_max {
        return Err(Error::DriveRange {
            delta: *delta_grid.last().unwrap(),
            max: params.delta_max,
        });
    }
    let seed = match symmetry {
        Symmetry::Odd => odd_orbit(m, p, params)?.init,
        Symmetry::Even => even_orbit(m, p, params)?.init,
    };
    let mut members = Vec::with_capacity(delta_grid.len());
    let mut aborted = None;
    let mut guess = seed;
    for &delta in delta_grid {
        match shoot_dispatch(symmetry, m, p, delta, guess, params) {
            Ok(orbit) => {
                guess = orbit.init;
                members.push(orbit);
            }
            Err(e) => {
                aborted = Some((delta, e.to_string()));
                break;
            }
        }
    }
    Ok(FamilyResult {
        symmetry,
        m,
        p,
        members,
        aborted,
    })
}

/// Finite-difference slope of tau(delta) at delta = 0 from the smallest
/// family members: least-squares fit of `tau - tau(0) = a delta + b delta^2`
/// over up to four points (two points reproduce Richardson extrapolation).
pub fn trace_slope_fd(family: &FamilyResult) -> Result<f64> {
    let zero = family
        .members
        .iter()
        .find(|o| o.delta == 0.0)
        .ok_or(Error::InsufficientFamily)?;
    let mut pts: Vec<(f64, f64)> = family
        .members
        .iter()
        .filter(|o| o.delta > 0.0)
        .map(|o| (o.delta, o.trace - zero.trace))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientFamily);
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.truncate(4);
    // normal equations for [a, b] in r = a d + b d^2
    let (mut s2, mut s3, mut s4, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(d, r) in &pts {
        s2 += d * d;
        s3 += d * d * d;
        s4 += d * d * d * d;
        r1 += d * r;
        r2 += d * d * r;
    }
    let det = s2 * s4 - s3 * s3;
    if det == 0.0 {
        return Err(Error::InsufficientFamily);
    }
    Ok((r1 * s4 - r2 * s3) / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::default_config()
    }

    #[test]
    fn autonomous_seed_is_fixed_point() {
        let p = params();
        let orb = odd_orbit(2, 1, &p).unwrap();
        let shot = shoot_odd(2, 1, 0.0, orb.init, &p).unwrap();
        assert_relative_eq!(shot.init, orb.init, max_relative = 1e-9);
        assert!(shot.shooting_residual <= 1e-10);
        assert!((shot.trace - 2.0).abs() < 1e-6);
        assert!(shot.return_residual <= 1e-8);
    }

    #[test]
    fn even_seed_is_fixed_point() {
        let p = params();
        let orb = even_orbit(2, 1, &p).unwrap();
        let shot = shoot_even(2, 1, 0.0, orb.init, &p).unwrap();
        assert_relative_eq!(shot.init, orb.init, max_relative = 1e-9);
        assert!(shot.shooting_residual <= 1e-10);
    }

    #[test]
    fn small_delta_shift_is_linear() {
        let p = params();
        let orb = odd_orbit(2, 1, &p).unwrap();
        let s1 = shoot_odd(2, 1, 1e-3, orb.init, &p).unwrap();
        let s2 = shoot_odd(2, 1, 5e-4, orb.init, &p).unwrap();
        let d1 = (s1.init - orb.init).abs();
        let d2 = (s2.init - orb.init).abs();
        assert!(d1 > 0.0 && d2 > 0.0);
        // halving delta roughly halves the shift
        assert!((d1 / d2 - 2.0).abs() < 0.2, "ratio {}", d1 / d2);
    }

    #[test]
    fn family_21_odd_elliptic_band() {
        let p = params();
        let grid = [0.0, 1e-4, 2e-4, 5e-4, 1e-3];
        let fam = continue_family(2, 1, Symmetry::Odd, &grid, &p).unwrap();
        assert!(fam.aborted.is_none());
        assert_eq!(fam.members.len(), grid.len());
        for o in &fam.members[1..] {
            assert!(
                o.trace < 2.0 && o.trace.abs() < 2.0,
                "delta {}: tau {}",
                o.delta,
                o.trace
            );
            assert!(o.return_residual <= 1e-8);
        }
        let slope = trace_slope_fd(&fam).unwrap();
        assert_relative_eq!(slope, -4580.228915, max_relative = 1e-2);
    }

    #[test]
    fn family_grid_validation() {
        let p = params();
        assert!(continue_family(2, 1, Symmetry::Odd, &[1e-4, 2e-4], &p).is_err());
        assert!(continue_family(2, 1, Symmetry::Odd, &[0.0, 2e-4, 1e-4], &p).is_err());
        assert!(continue_family(2, 1, Symmetry::Odd, &[0.0, 0.6], &p).is_err());
        assert!(matches!(
            trace_slope_fd(&FamilyResult {
                symmetry: Symmetry::Odd,
                m: 2,
                p: 1,
                members: vec![],
                aborted: None
            }),
            Err(Error::InsufficientFamily)
        ));
    }
}
