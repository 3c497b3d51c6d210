use alloc::string::String;
use core::fmt;

/// Failure modes of the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Points per axis must be a power of two (and at least 4).
    NotPowerOfTwo(usize),
    /// Requested grid would need more bytes than the configured budget.
    BudgetExceeded { required: u128, budget: u128 },
    /// A parameter is outside its admissible range.
    InvalidParameter { name: &'static str, reason: String },
    /// An axis index past the number of grid axes.
    AxisOutOfRange { axis: usize, axes: usize },
    /// Two operands live on different grids or have incompatible shapes.
    GridMismatch(&'static str),
    /// Time step above the explicit stability bound.
    StepTooLarge { dt: f64, bound: f64 },
    /// A NaN or infinity appeared during propagation.
    NonFinite { time: f64, what: &'static str },
    /// The mean density handed to the localization rate does not integrate to N.
    DensityNormalization { expected: f64, found: f64 },
    /// Dense pair storage refused.
    PairBudgetExceeded { pairs: usize, limit: usize },
    /// Single-particle modes are not orthonormal on the grid.
    NonOrthonormal { k: usize, l: usize, overlap: f64 },
    /// Fock-space oracle outside its tractable range.
    TruncationExceeded { modes: usize, particles: usize },
    /// Correlation function vanishes identically.
    ZeroCorrelation,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotPowerOfTwo(m) => write!(f, "points per axis {m} is not a power of two >= 4"),
            Error::BudgetExceeded { required, budget } => {
                write!(f, "grid needs {required} bytes, budget is {budget} bytes")
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::AxisOutOfRange { axis, axes } => {
                write!(f, "axis {axis} out of range for {axes}-axis grid")
            }
            Error::GridMismatch(what) => write!(f, "grid mismatch: {what}"),
            Error::StepTooLarge { dt, bound } => {
                write!(f, "time step {dt} exceeds stability bound {bound}")
            }
            Error::NonFinite { time, what } => write!(f, "non-finite {what} at t = {time}"),
            Error::DensityNormalization { expected, found } => {
                write!(f, "mean density integrates to {found}, expected {expected}")
            }
            Error::PairBudgetExceeded { pairs, limit } => {
                write!(f, "{pairs} pair values requested, dense limit is {limit}")
            }
            Error::NonOrthonormal { k, l, overlap } => {
                write!(f, "modes {k},{l} have overlap {overlap} on this grid")
            }
            Error::TruncationExceeded { modes, particles } => write!(
                f,
                "Fock oracle limited to 4 modes and 6 particles, got {modes} and {particles}"
            ),
            Error::ZeroCorrelation => write!(f, "correlation function vanishes identically"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
