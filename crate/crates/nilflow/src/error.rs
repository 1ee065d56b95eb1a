use thiserror::Error;

/// Error taxonomy shared by the whole crate. The CLI maps these onto exit
/// codes: usage -> 2, domain/precondition/integrity -> 3, budget exhaustion
/// in strict mode -> 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("obstruction |D| = {magnitude:.3e} above tolerance {tol:.3e}")]
    Obstruction { magnitude: f64, tol: f64 },
    #[error("small divisor {0:.3e} below machine safety")]
    SmallDivisor(f64),
    #[error("degenerate pair: the two points coincide")]
    DegeneratePair,
    #[error("undefined fit: {0}")]
    UndefinedFit(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
