use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("position x = {x} outside the electrode gap (|x| must be < 1)")]
    OutsideGap { x: f64 },

    #[error("energy hbar = {hbar} outside (0, {max}]")]
    EnergyRange { hbar: f64, max: f64 },

    #[error("target period {target} at or below the infimum {infimum}")]
    PeriodRange { target: f64, infimum: f64 },

    #[error("drive amplitude delta = {delta} outside [0, {max})")]
    DriveRange { delta: f64, max: f64 },

    #[error("(m,p) = ({m},{p}) inadmissible: requires 1 <= p <= {nu_m}")]
    Inadmissible { m: u32, p: u32, nu_m: u32 },

    #[error("invalid bracket [{a}, {b}]: no sign change")]
    InvalidBracket { a: f64, b: f64 },

    #[error("step size underflow at t = {t} (trajectory approaching |x| = 1?)")]
    StepSizeUnderflow { t: f64 },

    #[error("integrator exceeded {0} steps")]
    MaxSteps(usize),

    #[error("quadrature did not converge after {doublings} node doublings (last change {last_change:e})")]
    QuadratureNoConvergence { doublings: u32, last_change: f64 },

    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    ShootingNoConvergence { iterations: u32, residual: f64 },

    #[error("base state is not {period}-periodic (return residual {residual:e})")]
    NonPeriodicBase { period: f64, residual: f64 },

    #[error("family has too few members for a slope estimate (need delta=0 plus >= 2 small-delta members)")]
    InsufficientFamily,

    #[error("interpolation time {t} outside solution span [{t0}, {t1}]")]
    OutOfSpan { t: f64, t0: f64, t1: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
