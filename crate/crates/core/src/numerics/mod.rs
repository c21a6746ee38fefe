//! Shared numeric kernels with explicit tolerance contracts.

pub mod dd;
pub mod gbs;
pub mod quad;
pub mod real;
pub mod rk;
pub mod root;

pub use dd::Dd;
pub use gbs::{integrate_gbs, GbsOptions, GbsSolution};
pub use quad::{composite_gauss, quad_doubling, quad_regularized};
pub use real::Real;
pub use rk::{integrate_ivp, IvpSolution, OdeSystem, RkOptions};
pub use root::{bisect, find_root};

/// Default ODE relative tolerance (f64 paths).
pub const ODE_REL_TOL: f64 = 1e-11;
/// Default ODE absolute tolerance (f64 paths).
pub const ODE_ABS_TOL: f64 = 1e-12;
/// Default quadrature tolerance.
pub const QUAD_TOL: f64 = 1e-12;
/// Default root-finding tolerance.
pub const ROOT_TOL: f64 = 1e-13;
/// ODE tolerance used on double-double paths.
pub const ODE_TOL_DD: f64 = 1e-21;
