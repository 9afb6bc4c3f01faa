//! Numerical tolerances shared across the crate.

/// Normalization, unitarity and orthogonality checks.
pub const TOL_NORM: f64 = 1e-10;

/// Algebraic identities evaluated without sampling.
pub const TOL_EXACT: f64 = 1e-12;

/// Branch probabilities below this are treated as zero when sampling.
pub const ZERO_PROBABILITY: f64 = 1e-20;

/// A predicted outcome probability below this rejects the predicting model.
pub const REJECTION_PROBABILITY: f64 = 1e-12;

/// Largest violation score the no-go searches may report.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;
