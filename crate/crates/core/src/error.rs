use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model or configuration parameter is outside its admissible range.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An adaptive integration ran out of its subdivision budget.
    #[error("{what}: quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        what: &'static str,
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    /// A series did not reach its term tolerance within the term budget.
    #[error("{what}: series did not converge within {terms} terms")]
    SeriesNonConvergence { what: &'static str, terms: usize },

    /// Eavesdropper and fading lists passed to an aggregate have different lengths.
    #[error("length mismatch: {positions} eavesdropper positions but {fading} fading draws")]
    LengthMismatch { positions: usize, fading: usize },

    /// An eavesdropper sits exactly on the transmitter.
    #[error("eavesdropper coincides with the transmitter")]
    CoincidentEavesdropper,

    /// The requested quantity is undefined for the given inputs.
    #[error("{0}")]
    Undefined(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check(ok: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason })
    }
}
