//! Local-hidden-state models as semidefinite programs.

pub mod mle;
pub mod programs;
pub mod sdp;

pub use programs::{
    has_lhs_model, lhs_spectral_robustness, max_lhs_efficiency, max_lhs_efficiency_direct, one_click_wnr,
    optimal_wnr, white_noise_robustness, wnr_curve, DeterministicStrategySet, WnrMode, WnrPoint,
};
pub use sdp::{solve_sdp, MatrixExpr, SdpProblem, SdpSolution, SolveStatus};
