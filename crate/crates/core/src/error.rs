use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every module.
///
/// The variants are coarse on purpose: callers in the CLI map them onto
/// exit codes (validation, runtime, precondition), and the message carries
/// the specifics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation
    /// (superluminal velocity, non-timelike vector, `t < t_on`, ...).
    Domain(&'static str),
    /// Structural validation failed (non-orthogonal rotation, broken
    /// antisymmetry, invalid species parameters, ...).
    Validation(&'static str),
    /// A numeric parameter would overflow double range.
    Overflow(&'static str),
    /// A sampled profile was queried outside its support.
    Extrapolation,
    /// Least squares or a linear solve was singular.
    Singular(&'static str),
    /// The field solver detected a blow-up.
    Unstable { step_growth: f64 },
    /// A particle left the computational box.
    Outflow { particle: usize },
    /// An operation precondition does not hold (e.g. boosted slice requested
    /// before `T_A`, worldline history too short, no asymptotic charge).
    Precondition(&'static str),
    /// Adaptive integration could not meet its tolerance.
    StepSizeUnderflow { t: f64 },
    /// An iterative solve did not reach its target.
    NoConvergence { residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Validation(m) => write!(f, "validation error: {m}"),
            Error::Overflow(m) => write!(f, "overflow: {m}"),
            Error::Extrapolation => write!(f, "extrapolation outside sampled profile support"),
            Error::Singular(m) => write!(f, "singular system: {m}"),
            Error::Unstable { step_growth } => {
                write!(f, "field solver unstable: norm grew by {step_growth:.3e} in one step")
            }
            Error::Outflow { particle } => {
                write!(f, "particle {particle} left the grid extent (enlarge the domain)")
            }
            Error::Precondition(m) => write!(f, "precondition violated: {m}"),
            Error::StepSizeUnderflow { t } => write!(f, "adaptive step size underflow at t = {t}"),
            Error::NoConvergence { residual } => {
                write!(f, "iterative solve stalled at residual {residual:.3e}")
            }
        }
    }
}

impl core::error::Error for Error {}
