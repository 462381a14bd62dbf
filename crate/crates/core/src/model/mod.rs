//! Model parameters, closed-form and QZ solutions, identification analysis.

pub mod full;
pub mod identification;
pub mod params;
pub mod qz;
pub mod re_solver;
pub mod restricted;

pub use full::{solve_full_re, StateSpaceSolution};
pub use identification::{
    identified_quantities, population_autocov, Autocovariances, IdentifiedQuantities, ShockProcesses,
};
pub use params::{derive_reduced, ParamId, ReducedParams, StructuralParams};
pub use re_solver::{solve_linear_re, LinearReSystem, ReSolution};
pub use restricted::{expectation_system, forward_iteration, solve_restricted, SolutionMatrix};
