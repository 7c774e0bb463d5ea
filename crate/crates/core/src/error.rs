use thiserror::Error;

use crate::lhs::sdp::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M[i][j] - conj(M[j][i])| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("operator is not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("assemblage violates no-signalling: residual {residual:e}")]
    Signalling { residual: f64 },

    #[error("invalid behavior table: {0}")]
    InvalidBehavior(String),

    #[error("projector sum spectrum has negative discriminant {0:e}; projectors are not co-planar")]
    NegativeDiscriminant(f64),

    #[error(
        "SDP solver did not certify a solution ({status:?}): primal infeas {primal_infeasibility:e}, \
         dual infeas {dual_infeasibility:e}, gap {gap:e}"
    )]
    Solver {
        status: SolveStatus,
        primal_infeasibility: f64,
        dual_infeasibility: f64,
        gap: f64,
    },

    #[error("zero denominator in {0}")]
    ZeroDenominator(String),

    #[error("count records do not match: {0}")]
    MetadataMismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }

    /// True for errors caused by caller input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Solver { .. })
    }
}
