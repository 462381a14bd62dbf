//! State-space likelihood, maximum likelihood, score-based robust tests and
//! projection confidence sets.

pub mod estimate;
pub mod filter;
pub mod problem;
pub mod projection;
pub mod score;

pub use estimate::{ml_estimate, MlEstimate};
pub use problem::{LikelihoodForm, LikelihoodProblem, ParamBox};
pub use projection::{group_params, lm_projection_cs, ProjectionSet};
pub use score::{lm_o, score_bundle, LmResult, ScoreBundle};
