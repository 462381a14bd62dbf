//! Solution, simulation, likelihood and identification-robust GMM inference
//! for a behavioral New Keynesian model with cognitive discounting.

pub mod data;
pub mod error;
pub mod kv;
pub mod likelihood;
pub mod model;
pub mod numerics;
pub mod robust_gmm;
pub mod simulation;

pub use data::{Period, TimeSeriesPanel};
pub use error::{Error, Result};
pub use model::{ParamId, StructuralParams};
