//! Numerical tolerance constants shared by every module.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute symmetry tolerance for covariance matrices.
    pub symmetry: f64,
    /// Slack on the uncertainty relation: `σ + iΩ/2` may dip this far below zero.
    pub uncertainty: f64,
    /// `X Ω Xᵀ = Ω` tolerance for unitary channels.
    pub symplectic: f64,
    /// Smallest admissible eigenvalue of the complete-positivity matrix.
    pub complete_positivity: f64,
    /// Slack on `cov12² ≤ var1·var2`.
    pub cauchy_schwarz: f64,
    /// Allowed deviation of a count distribution's total probability from 1.
    pub normalization: f64,
    /// Hermiticity tolerance for Fock-space density matrices.
    pub fock_hermiticity: f64,
    /// Eigenvalue floor for Fock-space density matrices.
    pub fock_positivity: f64,
    /// Truncation budget: largest admissible population in the outermost photon-number shells.
    pub fock_tail: f64,
    /// Absolute tolerance of the input-squeezing optimizer, in units of the gain.
    pub squeeze: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        symmetry: 1e-12,
        uncertainty: 1e-9,
        symplectic: 1e-10,
        complete_positivity: 1e-9,
        cauchy_schwarz: 1e-9,
        normalization: 1e-10,
        fock_hermiticity: 1e-12,
        fock_positivity: 1e-10,
        fock_tail: 1e-10,
        squeeze: 1e-6,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Floating-point slack for a check on a quantity of magnitude `scale`.
///
/// Eigenvalues of a matrix with entries of size `scale` are only known to about
/// `scale · ε`; strongly amplified states have covariances far above unity.
pub(crate) fn working_precision(tol: f64, scale: f64) -> f64 {
    tol.max(64.0 * f64::EPSILON * scale)
}
