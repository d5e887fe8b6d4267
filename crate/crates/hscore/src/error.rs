//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants are grouped by how a
//! caller should react: malformed or unreadable input, degenerate or
//! numerically invalid data, and invalid parameters. [`Error::category`]
//! exposes that grouping so front ends can map errors to exit codes without
//! matching on every variant.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification of an error, used by callers to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// A parameter value that can never be valid (bad percentile, zero trials).
    Usage,
    /// Unreadable, unparseable, or structurally inconsistent input data.
    Data,
    /// Data that parsed fine but is numerically degenerate or outside the
    /// domain of the requested computation.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    // ---- ingestion and I/O ----
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        /// 1-based line number.
        line: usize,
        message: String,
    },

    #[error("{path}: bad magic {found:?}, expected \"XFT1\"")]
    BadMagic { path: String, found: [u8; 4] },

    #[error("{path}: unsupported dtype code {code} (known: 0=f32 1=f64 2=u8 3=i64)")]
    UnsupportedDtype { path: String, code: u8 },

    #[error("{path}: unsupported tensor rank {rank} (supported: 1..=8)")]
    UnsupportedRank { path: String, rank: u8 },

    #[error("{path}: truncated payload, expected {expected} bytes, found {found}")]
    Truncated {
        path: String,
        expected: usize,
        found: usize,
    },

    #[error("{path}: {extra} trailing bytes after payload")]
    TrailingBytes { path: String, extra: usize },

    // ---- structural validation ----
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("length mismatch in {context}: {left} vs {right}")]
    LengthMismatch {
        context: String,
        left: usize,
        right: usize,
    },

    #[error("bad shape in {context}: {message}")]
    Shape { context: String, message: String },

    #[error("probability table sums to {sum}, expected 1 within {tol}")]
    DistributionSum { sum: f64, tol: f64 },

    #[error("negative probability entry {value} at index {index}")]
    NegativeProbability { value: f64, index: usize },

    #[error(
        "hypothesis {which} outside the local neighborhood: chi-square distance {chi_sq:.6e} exceeds epsilon^2 = {bound:.6e}"
    )]
    Neighborhood { which: usize, chi_sq: f64, bound: f64 },

    // ---- numerical degeneracy ----
    #[error("need at least {required} samples, got {samples}")]
    InsufficientSamples { samples: usize, required: usize },

    #[error("class {class} has no samples")]
    EmptyClass { class: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.3e} below tolerance")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("requested {requested} components but the decomposition has rank {rank}")]
    RankExceeded { requested: usize, rank: usize },

    #[error("iteration did not converge after {iterations} sweeps (last objective {last_objective:.12e})")]
    NonConvergence {
        iterations: usize,
        last_objective: f64,
    },

    #[error("degenerate input: {message}")]
    Degenerate { message: String },

    #[error("palette needs {requested} distinct values, input has {distinct}")]
    PaletteDistinct { distinct: usize, requested: usize },

    // ---- parameters ----
    #[error("invalid parameter: {message}")]
    InvalidParameter { message: String },
}

impl Error {
    /// Which coarse class this error belongs to.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::BadMagic { .. }
            | Error::UnsupportedDtype { .. }
            | Error::UnsupportedRank { .. }
            | Error::Truncated { .. }
            | Error::TrailingBytes { .. }
            | Error::NonFinite { .. }
            | Error::LengthMismatch { .. }
            | Error::Shape { .. }
            | Error::DistributionSum { .. }
            | Error::NegativeProbability { .. }
            | Error::Neighborhood { .. } => ErrorCategory::Data,

            Error::InsufficientSamples { .. }
            | Error::EmptyClass { .. }
            | Error::NotPositiveSemidefinite { .. }
            | Error::RankExceeded { .. }
            | Error::NonConvergence { .. }
            | Error::Degenerate { .. }
            | Error::PaletteDistinct { .. } => ErrorCategory::Numerical,

            Error::InvalidParameter { .. } => ErrorCategory::Usage,
        }
    }
}
