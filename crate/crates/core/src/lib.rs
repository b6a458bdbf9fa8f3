//! Hagedorn semiclassical wave packets.
//!
//! The crate is organised bottom-up: [`symplectic`] holds the real symplectic
//! group and the Lubich `(Q, P)` parametrization, [`ladder`] the coefficient
//! algebra of operators linear in position and momentum, [`hermite`] and
//! [`hagedorn`] the two families of wave packets, [`grid`] the numerical
//! realizations of the Heisenberg–Weyl and metaplectic operators, and
//! [`uncertainty`] the minimal-uncertainty rotation. [`verify`] bundles the
//! randomized check suites that the command-line tool exposes.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod exec;
pub mod grid;
pub mod hagedorn;
pub mod hermite;
pub mod ladder;
pub mod linalg;
pub mod random;
pub mod symplectic;
pub mod uncertainty;
pub mod verify;
pub mod cli;

pub use num_complex::Complex64 as C64;

/// Errors shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parametrization error: {0}")]
    Parametrization(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("matrix is not free: |det B| = {0:e}")]
    NotFree(f64),
    #[error("free factorization failed after {0} retries")]
    Factorization(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
