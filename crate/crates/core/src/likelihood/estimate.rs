use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::likelihood::problem::LikelihoodProblem;
use crate::likelihood::score::score_bundle;
use crate::model::params::{ParamId, StructuralParams};
use crate::numerics::{bfgs_minimize, hessian, BfgsOptions};

/// Maximum-likelihood estimate over the free parameters.
#[derive(Debug, Clone)]
pub struct MlEstimate {
    pub free: Vec<ParamId>,
    pub params: StructuralParams,
    pub estimates: DVector<f64>,
    /// From the inverse of the negative finite-difference Hessian of the log
    /// likelihood in natural units; NaN where that matrix is not positive definite.
    pub sd_hessian: DVector<f64>,
    /// Inverse of the negative Hessian; NaN where it is not positive definite.
    pub covariance: DMatrix<f64>,
    /// From the inverse of `J_T`, the outer product of score increments.
    pub sd_opg: DVector<f64>,
    /// `estimate / sd_hessian`.
    pub t_stats: DVector<f64>,
    pub log_likelihood: f64,
    /// Sup-norm of the gradient in the optimizer's unconstrained coordinates.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub message: String,
}

impl MlEstimate {
    pub fn get(&self, id: ParamId) -> Option<(f64, f64)> {
        let k = self.free.iter().position(|p| *p == id)?;
        Some((self.estimates[k], self.sd_hessian[k]))
    }
}

/// BFGS on the negative log likelihood with each free parameter mapped to its
/// box by a logistic transform. Points where the model cannot be solved or the
/// likelihood is not defined get an infinite penalty.
pub fn ml_estimate(problem: &LikelihoodProblem, start: &StructuralParams, opts: BfgsOptions) -> Result<MlEstimate> {
    let bounds = problem.bounds;
    let free = problem.free.clone();
    let to_values = |u: &DVector<f64>| -> Vec<f64> {
        free.iter().zip(u.iter()).map(|(id, x)| bounds.to_box(*id, *x)).collect()
    };
    let u0 = DVector::from_iterator(free.len(), free.iter().map(|id| bounds.from_box(*id, start.get(*id))));
    let objective = |u: &DVector<f64>| match problem.log_likelihood_at(&to_values(u)) {
        Ok(v) if v.is_finite() => -v,
        _ => f64::INFINITY,
    };
    let run = bfgs_minimize(objective, u0, opts);

    let values = to_values(&run.x);
    let params = problem.params_from(&values);
    let estimates = DVector::from_vec(values.clone());
    let k = free.len();

    let natural = |v: &DVector<f64>| match problem.log_likelihood_at(v.as_slice()) {
        Ok(l) if l.is_finite() => l,
        _ => f64::NAN,
    };
    let h = hessian(&natural, &estimates);
    let neg = -h;
    let covariance = match neg.cholesky() {
        Some(c) => c.inverse(),
        None => DMatrix::from_element(k, k, f64::NAN),
    };
    let sd_hessian = covariance.diagonal().map(f64::sqrt);
    let sd_opg = match score_bundle(problem, &params).ok().and_then(|sb| sb.j_matrix.cholesky()) {
        Some(c) => c.inverse().diagonal().map(f64::sqrt),
        None => DVector::from_element(k, f64::NAN),
    };
    let t_stats = estimates.component_div(&sd_hessian);
    Ok(MlEstimate {
        free,
        params,
        estimates,
        sd_hessian,
        covariance,
        sd_opg,
        t_stats,
        log_likelihood: -run.f,
        gradient_norm: run.grad.amax(),
        iterations: run.iterations,
        evaluations: run.evaluations,
        converged: run.converged,
        message: run.message,
    })
}
