use thiserror::Error;

use crate::spectra::Unit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unit mismatch: expected {expected}, found {found}")]
    UnitMismatch { expected: Unit, found: Unit },

    #[error("cannot divide by Omega^2 at a zero-frequency bin (index {index})")]
    ZeroFrequency { index: usize },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },

    #[error("{name} must be finite")]
    NonFinite { name: &'static str },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: grid has {grid} points, values have {values}")]
    LengthMismatch { grid: usize, values: usize },

    #[error("frequency {omega} rad/s outside tabulated range [{min}, {max}]")]
    OutOfRange { omega: f64, min: f64, max: f64 },

    #[error("traces are defined on different frequency grids")]
    GridMismatch,

    #[error("tone at {omega_mod} rad/s exceeds the Nyquist limit {nyquist} rad/s")]
    Aliasing { omega_mod: f64, nyquist: f64 },

    #[error("cavity not resolved by the time step: kappa*dt = {kappa_dt} (must be < 0.1)")]
    UnresolvedCavity { kappa_dt: f64 },

    #[error("tone not found near {omega_mod} rad/s")]
    ToneNotFound { omega_mod: f64 },

    #[error("calibration tone too weak: SNR {snr} (need > {required})")]
    WeakTone { snr: f64, required: f64 },

    #[error("no cooling at zero power")]
    NoCooling,

    #[error("effective mass required for {0}")]
    MissingEffectiveMass(&'static str),

    #[error("internal inconsistency: closed form {closed_form} vs numeric {numeric} (relative {relative})")]
    Inconsistent {
        closed_form: f64,
        numeric: f64,
        relative: f64,
    },

    #[error("malformed trace file: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite { name });
    }
    if value <= 0.0 {
        return Err(Error::NonPositive { name, value });
    }
    Ok(())
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite { name });
    }
    if value < 0.0 {
        return Err(Error::Negative { name, value });
    }
    Ok(())
}
