use core::fmt;

/// Errors raised by the model, integrators, analysis and control routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input value is NaN or infinite.
    NonFinite { what: &'static str },
    /// An input value violates its documented range.
    OutOfRange {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// The natural death rate is zero, so `Λ/μ` is undefined.
    ZeroMortality,
    /// Persistence bounds were requested but `R₀ˢ ≤ 1`.
    BelowThreshold { r0s: f64 },
    /// A time-stepping step produced a non-finite state.
    NonFiniteStep { step: usize },
    /// A trajectory in an ensemble failed.
    Trajectory { index: u64, step: usize },
    /// Two time grids that must agree do not.
    GridMismatch,
    /// An operation requiring data received none.
    Empty { what: &'static str },
    /// Histograms of different compartments were compared.
    ComponentMismatch,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite { what } => write!(f, "{what} is not finite"),
            Error::OutOfRange {
                what,
                value,
                expected,
            } => write!(f, "{what} = {value} is out of range (expected {expected})"),
            Error::ZeroMortality => {
                write!(f, "natural death rate mu is zero; extinction index is undefined")
            }
            Error::BelowThreshold { r0s } => write!(
                f,
                "persistence bounds need R0s > 1, got R0s = {r0s}"
            ),
            Error::NonFiniteStep { step } => {
                write!(f, "state became non-finite at step {step}")
            }
            Error::Trajectory { index, step } => write!(
                f,
                "trajectory {index} became non-finite at step {step}"
            ),
            Error::GridMismatch => write!(f, "control grid does not match the time grid"),
            Error::Empty { what } => write!(f, "{what} is empty"),
            Error::ComponentMismatch => {
                write!(f, "histograms describe different compartments")
            }
        }
    }
}

impl core::error::Error for Error {}
