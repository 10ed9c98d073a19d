//! Numerical tolerances shared across the crate.
//!
//! Values are sized for double-precision dense eigensolvers on operators of
//! dimension at most a few hundred.

/// Default residual / Loewner-gap tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative cutoff below which singular values count as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Orthonormality of stored subspace bases.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Maximum orthonormality defect a loaded basis may have and still be repaired.
pub const REPAIR_TOL: f64 = 1e-6;

/// Symmetry required of inputs to eigen-based routines (relative to the entry scale).
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Eigenvalues above `-NEGATIVE_EIG_TOL` are treated as zero by the square root.
pub const NEGATIVE_EIG_TOL: f64 = 1e-8;

/// Smallest eigenvalue an operator may have and still be inverted.
pub const SINGULAR_EIG_TOL: f64 = 1e-12;

/// Absolute precision of the Douglas majorization constant.
pub const DOUGLAS_PRECISION: f64 = 1e-13;
