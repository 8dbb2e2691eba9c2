use thiserror::Error;

/// Errors raised by the solvers and their input validation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("comb width {comb} exceeds waveguide band {band} (N*comb_spacing/light_speed must be < 2*band_halfwidth)")]
    CombExceedsBand { comb: f64, band: f64 },

    #[error("cannot normalize an all-zero amplitude vector")]
    ZeroVector,

    #[error("amplitude vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("resonator index {index} is outside the comb [{min}, {max}]")]
    IndexOutOfRange { index: i64, min: i64, max: i64 },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("step size too large: max|A|*h = {0:.3} must be < 1")]
    StepTooLarge(f64),

    #[error("too few waveguide modes per band: {got} (need at least {min})")]
    TooFewModes { got: usize, min: usize },

    #[error("undersampled series: {0}")]
    Undersampled(String),

    #[error("energy difference needs two distinct resonators, got {0} twice")]
    IdenticalIndices(i64),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
