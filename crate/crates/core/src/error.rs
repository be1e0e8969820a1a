use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// User-supplied data failed validation.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Two pre-packed solids overlap.
    #[error("inadmissible pre-packed configuration: points {first} and {second} overlap (gauge distance {gauge})")]
    Inadmissible { first: usize, second: usize, gauge: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("time horizon too small: horizon {horizon} but the baseline run was not saturated (vacancy bound {vacancy} at last arrival time {last_time})")]
    HorizonTooSmall { horizon: f64, last_time: f64, vacancy: f64 },

    #[error("degenerate tail: {0}")]
    DegenerateTail(String),

    #[error("infeasible parameter: {0}")]
    Infeasible(String),

    #[error("certification failed: {0}")]
    Certification(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
