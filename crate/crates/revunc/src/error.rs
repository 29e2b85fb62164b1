//! Crate-wide error type and result alias.
//!
//! Errors are grouped by how a caller should react: `Validation`/`Parse`/
//! `Config` mean the inputs are wrong, `Numerical` means a decomposition or
//! sampler step failed and a retry with fresh randomness may help, and
//! `MissingArtifact` means an upstream pipeline stage has not produced its
//! output yet. The CLI maps these groups onto distinct process exit codes.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Identifies which Gibbs block raised a numerical error; useful when deciding
/// whether to retry an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GibbsBlock {
    /// Latent state draw (simulation smoother).
    States,
    /// One of the stochastic-volatility components.
    Volatility,
    /// Time-varying intercept/persistence draw.
    Coefficients,
    /// Random-walk innovation covariance draw.
    InnovationCov,
}

impl std::fmt::Display for GibbsBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            GibbsBlock::States => "states",
            GibbsBlock::Volatility => "volatility",
            GibbsBlock::Coefficients => "coefficients",
            GibbsBlock::InnovationCov => "innovation-cov",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (CSV cells, quarter labels, table layout).
    #[error("parse error: {0}")]
    Parse(String),

    /// Structurally valid input that violates a documented requirement
    /// (too few quarters, non-positive levels, inconsistent dimensions, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Bad or contradictory run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A matrix decomposition or sampler step lost positive definiteness or
    /// produced non-finite values.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A numerical failure attributed to a specific Gibbs block.
    #[error("gibbs block '{block}' failed at iteration {iteration}: {message}")]
    Gibbs {
        block: GibbsBlock,
        iteration: usize,
        message: String,
    },

    /// A pipeline stage was asked to read an artifact that an earlier stage
    /// has not written.
    #[error("missing upstream artifact: {0}")]
    MissingArtifact(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    ///
    /// 0 is success, 2 input/validation problems, 3 numerical failures,
    /// 4 missing upstream artifacts.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation(_) | Error::Config(_) | Error::Csv(_) => 2,
            Error::Numerical(_) | Error::Gibbs { .. } => 3,
            Error::MissingArtifact(_) => 4,
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 4,
            Error::Io(_) => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_class() {
        assert_eq!(Error::Validation("x".into()).exit_code(), 2);
        assert_eq!(Error::Parse("x".into()).exit_code(), 2);
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        assert_eq!(Error::Numerical("x".into()).exit_code(), 3);
        assert_eq!(
            Error::Gibbs {
                block: GibbsBlock::States,
                iteration: 3,
                message: "bad".into()
            }
            .exit_code(),
            3
        );
        assert_eq!(Error::MissingArtifact("x".into()).exit_code(), 4);
        let nf = Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, "gone"));
        assert_eq!(nf.exit_code(), 4);
    }

    #[test]
    fn gibbs_error_message_names_block() {
        let e = Error::Gibbs {
            block: GibbsBlock::Volatility,
            iteration: 12,
            message: "cholesky failed".into(),
        };
        let s = e.to_string();
        assert!(s.contains("volatility"), "{s}");
        assert!(s.contains("12"), "{s}");
    }
}
