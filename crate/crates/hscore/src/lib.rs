//! Information-theoretic scoring of feature representations.
//!
//! The central quantity is the H-score of a feature matrix against labels:
//! the trace of the inverse feature covariance times the between-class
//! covariance of the class-conditional means. It measures how much of the
//! label structure a linear head can extract from the features, and it is
//! what every higher-level tool here is built from:
//!
//! * [`stats`]: the sample-based H-score and its supporting statistics.
//! * [`spectral`]: exact-distribution analysis of discrete joints, the
//!   divergence transition matrix, optimal features, and the ACE iteration.
//! * [`exponent`]: error exponents of local binary hypothesis testing and a
//!   Monte Carlo harness that validates them.
//! * [`transfer`]: transferability metrics and source-model selection.
//! * [`pixelwise`]: per-pixel H-scores for image-output tasks, with palette
//!   learning and heatmap rendering.
//! * [`curriculum`]: task relatedness, transfer curricula, task clustering,
//!   and rank-agreement measures.
//! * [`io`]: feature and label containers plus the tensor interchange
//!   formats.
//! * [`linalg`]: the shared eigen/SVD routines and regularized inverses.
//!
//! Scores are deterministic functions of their input sets: accumulation
//! follows a canonical sample order, so permuting input rows changes nothing,
//! bit for bit, regardless of thread count.

pub mod curriculum;
pub mod error;
pub mod exponent;
pub mod io;
pub mod linalg;
pub mod pixelwise;
pub mod spectral;
pub mod stats;
pub mod transfer;

pub use error::{Error, ErrorCategory, Result};
pub use io::{FeatureMatrix, LabelVector};
pub use linalg::InverseMode;
pub use stats::{h_score, HScoreReport};
