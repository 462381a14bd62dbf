use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::params::{derive_reduced, StructuralParams};

/// A residual `h_t(theta)` evaluated over an aligned sample.
pub trait Residual: Send + Sync + std::fmt::Debug {
    fn param_names(&self) -> Vec<String>;
    fn n_obs(&self) -> usize;
    /// One residual per sample row.
    fn residuals(&self, theta: &[f64]) -> Result<DVector<f64>>;
}

/// `(m_bar, gamma)` placed into the fixed structural parameters.
fn with_point(fixed: &StructuralParams, theta: &[f64]) -> Result<StructuralParams> {
    match theta {
        [m_bar, gamma] => {
            let mut p = *fixed;
            p.m_bar = *m_bar;
            p.gamma = *gamma;
            Ok(p)
        }
        _ => Err(Error::Config(format!("expected (m_bar, gamma), got {} values", theta.len()))),
    }
}

/// `pi_t - beta Mf pi_{t+1} - kappa x_t`.
pub fn residual_nkpc(params: &StructuralParams, pi: f64, pi_lead: f64, x: f64) -> Result<f64> {
    let r = derive_reduced(params)?;
    Ok(pi - r.beta_mf() * pi_lead - r.kappa * x)
}

/// `x_t - M x_{t+1} + sigma (i_t - pi_{t+1} - r_n_t)`, realizations in place of
/// expectations.
pub fn residual_is(params: &StructuralParams, x: f64, x_lead: f64, i: f64, pi_lead: f64, r_n: f64) -> Result<f64> {
    let r = derive_reduced(params)?;
    Ok(x - r.m * x_lead + r.sigma * (i - pi_lead - r_n))
}

/// Phillips-curve residual over `(m_bar, gamma)`; `beta`, `theta`, `phi` fixed.
#[derive(Debug, Clone)]
pub struct NkpcResidual {
    pub fixed: StructuralParams,
    pub pi: Vec<f64>,
    pub pi_lead: Vec<f64>,
    pub x: Vec<f64>,
}

impl Residual for NkpcResidual {
    fn param_names(&self) -> Vec<String> {
        vec!["m_bar".into(), "gamma".into()]
    }

    fn n_obs(&self) -> usize {
        self.pi.len()
    }

    fn residuals(&self, theta: &[f64]) -> Result<DVector<f64>> {
        let r = derive_reduced(&with_point(&self.fixed, theta)?)?;
        let (bmf, kappa) = (r.beta_mf(), r.kappa);
        Ok(DVector::from_iterator(
            self.pi.len(),
            (0..self.pi.len()).map(|t| self.pi[t] - bmf * self.pi_lead[t] - kappa * self.x[t]),
        ))
    }
}

/// IS-curve residual over `(m_bar, gamma)`; `rate_gap` is `i_t - pi_{t+1} - r_n_t`.
#[derive(Debug, Clone)]
pub struct IsResidual {
    pub fixed: StructuralParams,
    pub x: Vec<f64>,
    pub x_lead: Vec<f64>,
    pub rate_gap: Vec<f64>,
}

impl Residual for IsResidual {
    fn param_names(&self) -> Vec<String> {
        vec!["m_bar".into(), "gamma".into()]
    }

    fn n_obs(&self) -> usize {
        self.x.len()
    }

    fn residuals(&self, theta: &[f64]) -> Result<DVector<f64>> {
        let r = derive_reduced(&with_point(&self.fixed, theta)?)?;
        Ok(DVector::from_iterator(
            self.x.len(),
            (0..self.x.len()).map(|t| self.x[t] - r.m * self.x_lead[t] + r.sigma * self.rate_gap[t]),
        ))
    }
}

/// `y - X theta`.
#[derive(Debug, Clone)]
pub struct LinearIvResidual {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
}

impl Residual for LinearIvResidual {
    fn param_names(&self) -> Vec<String> {
        (1..=self.x.ncols()).map(|j| format!("theta{j}")).collect()
    }

    fn n_obs(&self) -> usize {
        self.y.len()
    }

    fn residuals(&self, theta: &[f64]) -> Result<DVector<f64>> {
        if theta.len() != self.x.ncols() {
            return Err(Error::Config(format!("expected {} coefficients", self.x.ncols())));
        }
        Ok(&self.y - &self.x * DVector::from_column_slice(theta))
    }
}
