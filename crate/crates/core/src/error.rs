//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate targets: {0}")]
    DegenerateTargets(String),

    /// All eigenvalues of the residual Gram fell below the retention cutoff.
    /// The fit is (numerically) exact and no whitened coordinates exist; the
    /// caller must propagate this rather than treat the direction as Gaussian.
    #[error("degenerate residuals: {0}")]
    DegenerateResiduals(String),

    #[error("excessive ties: {0}")]
    ExcessiveTies(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code: 2 parse/validation, 3 numerical failure, 4 undecidable.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::InsufficientData(_)
            | Error::DegenerateInput(_)
            | Error::DegenerateTargets(_)
            | Error::Domain(_)
            | Error::ResourceLimit(_)
            | Error::Parse { .. }
            | Error::Io(_) => 2,
            Error::Numerical(_) | Error::DegenerateResiduals(_) => 3,
            Error::ExcessiveTies(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_cover_the_contract() {
        assert_eq!(Error::InvalidArgument("x".into()).exit_code(), 2);
        assert_eq!(Error::Parse { line: 3, message: "x".into() }.exit_code(), 2);
        assert_eq!(Error::Numerical("x".into()).exit_code(), 3);
        assert_eq!(Error::DegenerateResiduals("x".into()).exit_code(), 3);
        assert_eq!(Error::ExcessiveTies("x".into()).exit_code(), 4);
    }
}
