//! Numerical thresholds shared across the crate.
//!
//! Algebraic identities (homomorphism, covariance, isometry) are expected to
//! hold to a few hundred ulps; spectral comparisons go through a dense
//! Hermitian eigensolver and get two more orders of slack.

/// Identity and algebraic defects.
pub const ALGEBRAIC: f64 = 1e-11;

/// Relative agreement of spectral quantities (bounds, eigenvalue multisets).
pub const SPECTRAL_REL: f64 = 1e-9;

/// Bracket reconstruction and reproducing-formula residuals.
pub const RECONSTRUCTION: f64 = 1e-10;

/// Relative cut used to classify an eigenvalue as zero.
pub const RANK_REL: f64 = 1e-10;

/// Absolute cut used when the largest eigenvalue is itself below this value.
pub const RANK_ABS: f64 = 1e-14;

/// Relative skew-Hermitian part tolerated before an operator is rejected as
/// not self-adjoint.
pub const SELF_ADJOINT_REL: f64 = 1e-8;

/// Relative commutator defect tolerated when reading coefficients off a matrix.
pub const AFFILIATION_REL: f64 = 1e-9;

/// Unitarity and homomorphism defects tolerated by representation validation.
pub const REPRESENTATION: f64 = 1e-9;

/// Relative residual tolerated by domain and range membership tests.
pub const MEMBERSHIP_REL: f64 = 1e-8;

/// Kernel threshold for a spectrum whose largest magnitude is `scale`.
pub fn rank_cut(scale: f64) -> f64 {
    if scale < RANK_ABS {
        RANK_ABS
    } else {
        RANK_REL * scale
    }
}
