//! The comb-drive finger actuator model.
//!
//! Nondimensional equation of motion for the movable finger:
//!
//! ```text
//! x'' + F(x, t, delta) = 0
//! F(x, t, delta) = x (1 - 4 beta V(t)^2 / (1 - x^2)^2)
//! V(t) = V0 + delta P(t),   P(t) = cos(omega0 t)
//! ```
//!
//! valid for |x| < 1 (the finger must stay between the electrodes). For
//! `0 < V0 < V* = 1/(2 sqrt(beta))` the autonomous equation has a center at
//! the origin and saddles at `+-x*`, `x* = sqrt(1 - 2 V0 sqrt(beta))`;
//! otherwise the finger pulls in to one of the fixed electrodes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{dd::Dd, real::Real};

/// Validated physical constants plus cached derived quantities.
///
/// The electrostatic coupling is stored as `c = (2 sqrt(beta) V0)^2`, which
/// equals `4 beta V0^2` up to rounding; using one primitive everywhere keeps
/// the near-saddle factorizations `(1-x^2)^2 - c = (1-x^2-Y*)(1-x^2+Y*)`
/// exact, with `Y* = 2 sqrt(beta) V0 = 1 - x*^2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelParams {
    pub beta: f64,
    pub v0: f64,
    pub tv: f64,
    /// Drive angular frequency 2 pi / Tv.
    pub omega0: f64,
    /// Pull-in voltage V* = 1/(2 sqrt(beta)).
    pub v_star: f64,
    /// Saddle position x* = sqrt(1 - 2 V0 sqrt(beta)).
    pub x_star: f64,
    /// Saddle energy hbar* = E(x*).
    pub h_star: f64,
    /// Y* = 2 sqrt(beta) V0 = 1 - x*^2.
    pub y_star: f64,
    /// Electrostatic coupling c = Y*^2 (= 4 beta V0^2).
    pub coupling: f64,
    /// Small-oscillation period 2 pi / sqrt(1 - c), the infimum of T(hbar).
    pub t_infimum: f64,
    /// Largest admissible drive amplitude, -V0 / min P = V0 for the cosine.
    pub delta_max: f64,
    #[serde(skip)]
    pub(crate) dd: DdConsts,
}

/// Double-double images of the derived constants, recomputed from the f64
/// primitives so their defining relations hold to ~1e-32.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DdConsts {
    pub x_star: Dd,
    pub coupling: Dd,
    pub h_star: Dd,
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // !(x > 0) deliberately catches NaN
impl ModelParams {
    /// Defaults used throughout the verification suite:
    /// beta = 1/4, V0 = 1/2, Tv = 2 pi (so omega0 = 1, c = 1/4,
    /// x* = sqrt(1/2), hbar* = 1/8).
    pub fn default_config() -> Self {
        Self::new(0.25, 0.5, 2.0 * std::f64::consts::PI).unwrap()
    }

    pub fn new(beta: f64, v0: f64, tv: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "beta = {beta} must be positive"
            )));
        }
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(Error::InvalidParams(format!("V0 = {v0} must be positive")));
        }
        if !(tv > 0.0) || !tv.is_finite() {
            return Err(Error::InvalidParams(format!("Tv = {tv} must be positive")));
        }
        let v_star = 1.0 / (2.0 * beta.sqrt());
        if v0 >= v_star {
            return Err(Error::InvalidParams(format!(
                "V0 = {v0} >= V* = {v_star}: pull-in (side instability), no oscillation regime"
            )));
        }
        let y_star = 2.0 * beta.sqrt() * v0;
        let coupling = y_star * y_star;
        debug_assert!(coupling < 1.0);
        let x_star = (1.0 - y_star).sqrt();

        let y_star_dd = Dd::from_f64(y_star);
        let coupling_dd = y_star_dd.sqr();
        let x_star_dd = (Dd::ONE - y_star_dd).sqrt();
        let h_star_dd = energy_dd_raw(x_star_dd, coupling_dd);

        Ok(ModelParams {
            beta,
            v0,
            tv,
            omega0: 2.0 * std::f64::consts::PI / tv,
            v_star,
            x_star,
            h_star: h_star_dd.to_f64(),
            y_star,
            coupling,
            t_infimum: 2.0 * std::f64::consts::PI / (1.0 - coupling).sqrt(),
            delta_max: v0,
            dd: DdConsts {
                x_star: x_star_dd,
                coupling: coupling_dd,
                h_star: h_star_dd,
            },
        })
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if x.abs() < 1.0 {
            Ok(())
        } else {
            Err(Error::OutsideGap { x })
        }
    }
}

/// Periodic drive profile; `P` is even with zero mean over one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DriveProfile {
    /// P(t) = cos(omega0 t), minimum -1.
    Cosine,
}

impl DriveProfile {
    pub fn min_value(&self) -> f64 {
        match self {
            DriveProfile::Cosine => -1.0,
        }
    }
}

/// Drive perturbation `V(t) = V0 + delta P(t)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DriveSpec {
    pub delta: f64,
    pub profile: DriveProfile,
}

impl DriveSpec {
    /// The unperturbed (autonomous) drive.
    pub fn autonomous() -> Self {
        DriveSpec {
            delta: 0.0,
            profile: DriveProfile::Cosine,
        }
    }

    /// Cosine drive with amplitude `delta`; requires `0 <= delta < delta_max`
    /// so V(t) stays positive.
    pub fn cosine(delta: f64, params: &ModelParams) -> Result<Self> {
        let max = -params.v0 / DriveProfile::Cosine.min_value();
        if !(0.0..params.delta_max.min(max)).contains(&delta) {
            return Err(Error::DriveRange { delta, max });
        }
        Ok(DriveSpec {
            delta,
            profile: DriveProfile::Cosine,
        })
    }

    /// P(t).
    pub fn profile_value(&self, t: f64, params: &ModelParams) -> f64 {
        match self.profile {
            DriveProfile::Cosine => (params.omega0 * t).cos(),
        }
    }

    /// dP/dt.
    pub fn profile_dot(&self, t: f64, params: &ModelParams) -> f64 {
        match self.profile {
            DriveProfile::Cosine => -params.omega0 * (params.omega0 * t).sin(),
        }
    }
}

/// Restoring force F(x,t,delta) of the equation x'' + F = 0.
pub fn force(x: f64, t: f64, params: &ModelParams, drive: &DriveSpec) -> Result<f64> {
    params.check_x(x)?;
    Ok(Field::<f64>::new(params, drive).force(t, x))
}

/// dF/dx in closed form: `1 - 4 beta V(t)^2 (1 + 3x^2) / (1 - x^2)^3`.
pub fn dforce_dx(x: f64, t: f64, params: &ModelParams, drive: &DriveSpec) -> Result<f64> {
    params.check_x(x)?;
    Ok(Field::<f64>::new(params, drive).dforce_dx(t, x))
}

/// Potential energy `E(x) = x^2/2 - 2 beta V0^2/(1-x^2) + 2 beta V0^2`,
/// even, `E(0) = 0`, strictly increasing on `[0, x*]`.
pub fn energy(x: f64, params: &ModelParams) -> Result<f64> {
    params.check_x(x)?;
    Ok(energy_raw(x, params.coupling))
}

#[inline(always)]
pub(crate) fn energy_raw(x: f64, c: f64) -> f64 {
    let h = 0.5 * c;
    0.5 * x * x - h / (1.0 - x * x) + h
}

#[inline(always)]
pub(crate) fn energy_dd_raw(x: Dd, c: Dd) -> Dd {
    let half = Dd::from_f64(0.5);
    let h = half * c;
    half * x.sqr() - h / (Dd::ONE - x.sqr()) + h
}

/// Total energy H(x, xdot) = xdot^2/2 + E(x), conserved when delta = 0.
pub fn hamiltonian(x: f64, xdot: f64, params: &ModelParams) -> Result<f64> {
    Ok(0.5 * xdot * xdot + energy(x, params)?)
}

/// Equilibrium classification of the autonomous equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    Center,
    Saddle,
}

#[derive(Debug, Clone, Serialize)]
pub struct Equilibria {
    pub points: Vec<(f64, EquilibriumKind)>,
    pub pull_in: bool,
    pub pull_in_voltage: f64,
}

/// Equilibria of the autonomous field in (-1, 1) for arbitrary positive
/// `(beta, V0)`, including the pulled-in regime `V0 >= V*`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the guard
pub fn equilibria(beta: f64, v0: f64) -> Result<Equilibria> {
    if !(beta > 0.0) || !(v0 > 0.0) {
        return Err(Error::InvalidParams(format!(
            "equilibria need beta > 0 and V0 > 0 (got {beta}, {v0})"
        )));
    }
    let v_star = 1.0 / (2.0 * beta.sqrt());
    if v0 < v_star {
        let x_star = (1.0 - 2.0 * v0 * beta.sqrt()).sqrt();
        Ok(Equilibria {
            points: vec![
                (0.0, EquilibriumKind::Center),
                (x_star, EquilibriumKind::Saddle),
                (-x_star, EquilibriumKind::Saddle),
            ],
            pull_in: false,
            pull_in_voltage: v_star,
        })
    } else {
        Ok(Equilibria {
            points: vec![(0.0, EquilibriumKind::Center)],
            pull_in: true,
            pull_in_voltage: v_star,
        })
    }
}

/// The unique `x+ in (0, x*]` with `E(x+) = hbar`, for `hbar in (0, hbar*]`.
///
/// Bisection on the strictly increasing E followed by one Newton polish;
/// the result satisfies `|E(x+) - hbar| <= 1e-13`.
pub fn turning_point(hbar: f64, params: &ModelParams) -> Result<f64> {
    if !(hbar > 0.0 && hbar <= params.h_star) {
        return Err(Error::EnergyRange {
            hbar,
            max: params.h_star,
        });
    }
    let c = params.coupling;
    let g = |x: f64| energy_raw(x, c) - hbar;
    let mut a = 0.0f64;
    let mut b = params.x_star;
    if g(b) <= 0.0 {
        return Ok(b); // hbar == h_star to rounding
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if g(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-16 {
            break;
        }
    }
    let mut x = 0.5 * (a + b);
    // Newton polish: E'(x) = f(x)
    let fx = x * (1.0 - c / ((1.0 - x * x) * (1.0 - x * x)));
    if fx != 0.0 {
        let step = g(x) / fx;
        if step.is_finite() && (x - step) > 0.0 && (x - step) < 1.0 {
            x -= step;
        }
    }
    Ok(x)
}

/// Generic-scalar evaluation of the vector field; used by the integrator in
/// both f64 and double-double precision.
#[derive(Debug, Clone, Copy)]
pub struct Field<S: Real> {
    /// coupling c = 4 beta V0^2
    pub c: S,
    /// relative drive amplitude delta / V0
    pub dr: S,
    pub omega0: S,
    autonomous: bool,
}

impl<S: Real> Field<S> {
    pub fn new(params: &ModelParams, drive: &DriveSpec) -> Self {
        Field {
            c: S::from_f64(params.coupling),
            dr: S::from_f64(drive.delta / params.v0),
            omega0: S::from_f64(params.omega0),
            autonomous: drive.delta == 0.0,
        }
    }

    /// (V(t)/V0)^2
    #[inline(always)]
    fn ratio_sq(&self, t: S) -> S {
        if self.autonomous {
            S::one()
        } else {
            let r = S::one() + self.dr * (self.omega0 * t).cos_approx();
            r * r
        }
    }

    #[inline(always)]
    pub fn force(&self, t: S, x: S) -> S {
        let one = S::one();
        let w = one - x * x;
        x * (one - self.c * self.ratio_sq(t) / (w * w))
    }

    #[inline(always)]
    pub fn dforce_dx(&self, t: S, x: S) -> S {
        let one = S::one();
        let three = S::from_f64(3.0);
        let w = one - x * x;
        one - self.c * self.ratio_sq(t) * (one + three * x * x) / (w * w * w)
    }
}
