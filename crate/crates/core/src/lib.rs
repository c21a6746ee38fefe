//! Periodic orbits and linear stability of the comb-drive finger actuator.
//!
//! A movable electrode between two fixed electrodes obeys, in nondimensional
//! form,
//!
//! ```text
//! x'' + x (1 - 4 beta V(t)^2 / (1 - x^2)^2) = 0,     |x| < 1,
//! V(t) = V0 + delta * cos(omega0 t)
//! ```
//!
//! For `delta = 0` the equation is conservative; inside the saddle loop the
//! origin is surrounded by a family of periodic orbits parametrized by the
//! energy `hbar` with minimal period `T(hbar)`. This crate provides
//!
//! - the model itself ([`model`]): force, energy, equilibria, turning points;
//! - the period function `T(hbar)`, its derivative and inverse ([`period`]);
//! - odd/even `(m,p)`-periodic solutions of the autonomous equation
//!   ([`orbits`]);
//! - Hill-equation monodromy and elliptic/hyperbolic classification
//!   ([`hill`]);
//! - the first-order trace derivative `tau'(0)` in the drive amplitude and
//!   its several analytic forms ([`firstorder`]);
//! - shooting-based continuation of the forced symmetric orbits in `delta`
//!   ([`continuation`]);
//! - the end-to-end verification suite ([`verify`]).
//!
//! Shared numeric kernels (adaptive Runge-Kutta with dense output, Gauss-
//! Legendre quadrature with node doubling, bracketed root finding, and a
//! double-double scalar for ill-conditioned near-separatrix work) live in
//! [`numerics`].

pub mod error;
pub mod numerics;

pub mod continuation;
pub mod firstorder;
pub mod hill;
pub mod model;
pub mod orbits;
pub mod period;
pub mod verify;

pub use continuation::ForcedOrbit;
pub use error::{Error, Result};
pub use firstorder::TracePrime;
pub use hill::{Monodromy, StabilityKind, StabilityVerdict};
pub use model::{DriveSpec, ModelParams};
pub use orbits::{AutonomousOrbit, Symmetry, Trajectory};
pub use period::EnergyLevel;
