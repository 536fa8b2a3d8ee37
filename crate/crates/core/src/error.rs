use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown symbol `{0}`")]
    Symbol(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("degenerate matrix: {0}")]
    Degeneracy(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration {
        t: f64,
        reason: String,
        last_state: Vec<num_complex::Complex64>,
    },

    #[error("size error: {0}")]
    Size(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
