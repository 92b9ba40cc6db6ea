use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Morozov bracket failure: residual {residual_lo:.3e} at alpha={alpha_lo:.1e} and {residual_hi:.3e} at alpha={alpha_hi:.1e}, target delta={delta:.3e}")]
    Bracket {
        alpha_lo: f64,
        alpha_hi: f64,
        residual_lo: f64,
        residual_hi: f64,
        delta: f64,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
