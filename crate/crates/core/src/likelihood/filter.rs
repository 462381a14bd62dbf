//! Per-period Gaussian log densities.
//!
//! Both forms include the constant `-(n/2) log(2 pi)` in every period, so an
//! empty sample has log likelihood zero.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `y_t = H s_t`, `s_{t+1} = F s_t + w_{t+1}`, `w ~ N(0, Q)`, `s_1 ~ N(0, P0)`.
#[derive(Debug, Clone)]
pub struct LinearGaussian {
    pub observation: DMatrix<f64>,
    pub transition: DMatrix<f64>,
    pub state_cov: DMatrix<f64>,
    pub initial_cov: DMatrix<f64>,
}

/// Solves `P = F P F' + Q` through `(I - F kron F) vec P = vec Q`.
pub fn stationary_covariance(f: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    let kron = f.kronecker(f);
    let lhs = DMatrix::<f64>::identity(n * n, n * n) - kron;
    let rhs = DVector::from_column_slice(q.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("state transition has a unit root".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// Prediction-error decomposition; returns one log density per observation.
pub fn kalman_terms(model: &LinearGaussian, ys: &[DVector<f64>]) -> Result<Vec<f64>> {
    let h = &model.observation;
    let f = &model.transition;
    let n_obs = h.nrows();
    let n_state = f.nrows();
    let const_term = -0.5 * n_obs as f64 * (2.0 * PI).ln();
    let mut a = DVector::<f64>::zeros(n_state);
    let mut p = model.initial_cov.clone();
    let ht = h.transpose();
    let mut out = Vec::with_capacity(ys.len());
    for y in ys {
        let v = y - h * &a;
        let ph = &p * &ht;
        let vcov = h * &ph;
        let chol = vcov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("prediction-error covariance".into()))?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let vinv_v = chol.solve(&v);
        out.push(const_term - 0.5 * (log_det + v.dot(&vinv_v)));
        // K = P H' V^-1
        let gain = chol.solve(&ph.transpose()).transpose();
        let a_upd = &a + &gain * &v;
        let p_upd = &p - &gain * ph.transpose();
        a = f * a_upd;
        p = f * p_upd * f.transpose() + &model.state_cov;
        p = (&p + p.transpose()) * 0.5;
    }
    Ok(out)
}

/// Exact log densities of `Y_t = C U_t`, `U_t = Lambda U_{t-1} + e_t`,
/// `e_t ~ N(0, Sigma)`, conditional on `U_0 = 0`:
/// `-(n/2) log 2pi - 1/2 e_t' Sigma^-1 e_t - 1/2 log|Sigma| - log|det C|`.
pub fn square_terms(
    c: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    ys: &[DVector<f64>],
) -> Result<Vec<f64>> {
    let n = c.nrows();
    let lu = c.clone().lu();
    let det_c = lu.determinant();
    if det_c == 0.0 || !det_c.is_finite() {
        return Err(Error::Singular("loading matrix C is singular".into()));
    }
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("shock covariance".into()))?;
    let log_det_sigma = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let const_term = -0.5 * n as f64 * (2.0 * PI).ln() - 0.5 * log_det_sigma - det_c.abs().ln();
    let mut prev = DVector::<f64>::zeros(n);
    let mut out = Vec::with_capacity(ys.len());
    for y in ys {
        let u = lu.solve(y).ok_or_else(|| Error::Singular("loading matrix C".into()))?;
        let e = &u - lambda * &prev;
        out.push(const_term - 0.5 * e.dot(&chol.solve(&e)));
        prev = u;
    }
    Ok(out)
}
