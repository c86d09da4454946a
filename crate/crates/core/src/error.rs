use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative method failed or the working precision was insufficient.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A solved weight came out negative beyond tolerance.
    #[error("negative weight p[{index}] = {value} at {bits} bits")]
    NegativeWeight { index: usize, value: String, bits: u32 },

    /// Should be impossible for valid input; reported with diagnostics.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),
}
