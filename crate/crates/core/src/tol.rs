//! Numerical tolerances shared by the library and its tests.

/// Hermiticity check: max |M[i][j] - conj(M[j][i])|.
pub const HERMITIAN: f64 = 1e-12;

/// Eigen-decomposition reconstruction error, sup norm.
pub const RECONSTRUCTION: f64 = 1e-10;

/// Eigenvector normalisation.
pub const UNIT_NORM: f64 = 1e-12;

/// Jacobi sweeps stop once the off-diagonal Frobenius norm drops below this
/// (relative to the full Frobenius norm).
pub const JACOBI_OFF_DIAGONAL: f64 = 1e-14;

pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Schmidt coefficients sum to one within this.
pub const SCHMIDT_SUM: f64 = 1e-12;

/// A Schmidt coefficient larger than this counts as non-zero.
pub const SCHMIDT_NONZERO: f64 = 1e-12;

/// Positivity of assemblage members.
pub const PSD: f64 = 1e-10;

/// POVM completeness.
pub const POVM_COMPLETENESS: f64 = 1e-10;

/// POVM effect positivity.
pub const POVM_PSD: f64 = 1e-12;

/// Assemblage no-signalling residual.
pub const NO_SIGNALLING: f64 = 1e-10;

/// Below this spacing the equal-spaced sum uses its analytic limit.
pub const SMALL_SPACING: f64 = 1e-8;

/// The projector-sum discriminant may be this negative before rejection.
pub const DISCRIMINANT: f64 = 1e-12;

/// Rank-one check on projector families.
pub const RANK_ONE: f64 = 1e-10;

/// `K_+` may be this negative before the assemblage is rejected.
pub const K_PLUS: f64 = 1e-10;

/// Asymmetry between settings above which a closed-form report is flagged.
pub const SETTING_ASYMMETRY: f64 = 1e-8;

/// Witness normalisation.
pub const WITNESS_NORMALISATION: f64 = 1e-10;

/// Witness strategy sums must have min eigenvalue above `-WITNESS_PSD`.
pub const WITNESS_PSD: f64 = 1e-9;

/// Residual bundle an SDP solution must meet to be reported as optimal.
pub const SDP_RESIDUAL: f64 = 1e-9;

/// SDP value at or above `-LHS_FEASIBILITY` counts as admitting an LHS model.
pub const LHS_FEASIBILITY: f64 = 1e-9;

/// Bisection width for the maximal LHS efficiency.
pub const EFFICIENCY_BISECTION: f64 = 1e-6;

/// Probability tables must be normalised within this.
pub const PROBABILITY_SUM: f64 = 1e-9;

/// MLE stops once the objective improves by less than this.
pub const MLE_IMPROVEMENT: f64 = 1e-12;

pub const MLE_MAX_ITERATIONS: usize = 10_000;

/// Behavior normalisation.
pub const BEHAVIOR_SUM: f64 = 1e-12;

/// Behavior no-signalling residual.
pub const BEHAVIOR_NO_SIGNALLING: f64 = 1e-10;

/// Angle tolerance for the Bell-operator refinement.
pub const BELL_ANGLE: f64 = 1e-6;

/// Eigenvalue tolerance for the Bell-operator refinement; a minimum eigenvalue
/// above `-BELL_EIGENVALUE` counts as no violation.
pub const BELL_EIGENVALUE: f64 = 1e-9;
