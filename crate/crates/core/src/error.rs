//! Error type shared by all modules of the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the link model, the constellation designs and the
/// numerical kernels behind them.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the supported domain of a function.
    Domain { what: &'static str, value: f64 },
    /// A parameter violates the invariants of its type.
    InvalidParam { what: &'static str, value: f64 },
    /// Bisection bracket does not contain a sign change.
    Bracket { lo: f64, hi: f64 },
    /// Iteration budget exhausted before reaching the tolerance.
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
    /// Background light alone saturates the SPAD array: the peak transmit
    /// photon-rate bound is non-positive and no signal can be carried.
    InfeasibleLink { peak_rate_bound: f64 },
    /// Numerical failure that cannot be attributed to a single argument.
    Numeric { what: &'static str },
    /// Receiver moments are not strictly increasing in the mean.
    UnorderedMoments,
    /// Incidence angle falls outside the receiver field of view.
    OutOfFov { angle: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => {
                write!(f, "domain error: {what} (got {value:e})")
            }
            Error::InvalidParam { what, value } => {
                write!(f, "invalid parameter: {what} (got {value:e})")
            }
            Error::Bracket { lo, hi } => {
                write!(f, "no sign change on bracket [{lo:e}, {hi:e}]")
            }
            Error::NoConvergence { what, iterations } => {
                write!(f, "{what} failed to converge after {iterations} iterations")
            }
            Error::InfeasibleLink { peak_rate_bound } => {
                write!(
                    f,
                    "infeasible link: background saturates the array \
                     (peak transmit rate bound {peak_rate_bound:e} photons/s)"
                )
            }
            Error::Numeric { what } => write!(f, "numerical failure: {what}"),
            Error::UnorderedMoments => {
                write!(f, "receiver means must be strictly increasing")
            }
            Error::OutOfFov { angle } => {
                write!(f, "incidence angle {angle} rad outside the field of view")
            }
        }
    }
}

impl std::error::Error for Error {}
