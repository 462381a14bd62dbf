//! Continuous-updating GMM for single equations and two-step
//! identification-robust confidence sets.

pub mod chi2mix;
pub mod grid;
pub mod linear_iv;
pub mod moments;
pub mod residual;

pub use chi2mix::{a_of_gamma, chi2_cdf, chi2_quantile, chi2mix_cdf, chi2mix_quantile, gamma_of_a};
pub use grid::{
    distortion_cutoff, grid_estimate, grid_invert, linear_combination_set, sets_at_gamma, Axis,
    DistortionCalibration, GridSpec, GridStats, IcsBranch, SetResult, TwoStepResult,
};
pub use linear_iv::{simulate_linear_iv, LinearIvDesign};
pub use moments::{
    bartlett_weights, cue_estimate, cugmm_objective, hac_covariance, hac_cross, moment_bundle, point_statistics,
    CueEstimate, Equation, MomentBundle, MomentProblem, PointStats, DEFAULT_HAC_LAGS,
};
pub use residual::{residual_is, residual_nkpc, IsResidual, LinearIvResidual, NkpcResidual, Residual};
