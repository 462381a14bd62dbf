//! State-space solution of the complete three-equation model.
//!
//! ```text
//! x_t  = M E_t x_{t+1} - sigma (i_t - E_t pi_{t+1}) + eta_d
//! pi_t = beta Mf E_t pi_{t+1} + kappa x_t + eps_s
//! i_t  = rho_i i_{t-1} + (1 - rho_i)(phi_pi pi_t + phi_x x_t) + eta_m
//! ```
//!
//! The state is `s_t = (eta_m, eta_d, eps_s, i_{t-1})`; the cost-push shock is
//! i.i.d. and enters as a zero-persistence state. Observables
//! `y_t = (x_t, pi_t, i_t)` satisfy `y_t = H s_t` and
//! `s_{t+1} = F s_t + R e_{t+1}` with innovations `e = (eps_s, eps_d, eps_m)`.

use nalgebra::{DMatrix, Matrix2};

use crate::error::Result;
use crate::model::params::{derive_reduced, StructuralParams};
use crate::model::re_solver::{solve_linear_re, LinearReSystem, ReSolution};

pub const STATE_ETA_M: usize = 0;
pub const STATE_ETA_D: usize = 1;
pub const STATE_EPS_S: usize = 2;
pub const STATE_I_LAG: usize = 3;
pub const N_STATE: usize = 4;

pub const OBS_X: usize = 0;
pub const OBS_PI: usize = 1;
pub const OBS_I: usize = 2;
pub const N_OBS: usize = 3;

pub const SHOCK_S: usize = 0;
pub const SHOCK_D: usize = 1;
pub const SHOCK_M: usize = 2;
pub const N_SHOCK: usize = 3;

/// Linear Gaussian state-space form of the solved model.
#[derive(Debug, Clone)]
pub struct StateSpaceSolution {
    /// `H`: observables on the state (`3 x 4`).
    pub observation: DMatrix<f64>,
    /// `F`: state transition (`4 x 4`).
    pub transition: DMatrix<f64>,
    /// `R`: state loading of the innovations (`4 x 3`).
    pub shock_loading: DMatrix<f64>,
    /// `diag(rho_m, rho_d)`.
    pub lambda: Matrix2<f64>,
    /// `diag(sigma2_s, sigma2_d, sigma2_m)`.
    pub sigma_mat: DMatrix<f64>,
    pub root_moduli: Vec<f64>,
}

impl StateSpaceSolution {
    /// Loadings of the observables on the current shocks `(eta_m, eta_d, eps_s)`.
    pub fn c_matrix(&self) -> DMatrix<f64> {
        self.observation.columns(0, 3).into_owned()
    }

    /// Covariance of the state innovation, `R Sigma R'`.
    pub fn state_innovation_cov(&self) -> DMatrix<f64> {
        &self.shock_loading * &self.sigma_mat * self.shock_loading.transpose()
    }
}

/// Builds the `A E z' = B z` form with `z = (eta_m, eta_d, eps_s, i_lag, x, pi, i)`.
pub fn full_system(params: &StructuralParams) -> Result<LinearReSystem> {
    let red = derive_reduced(params)?;
    let (x, pi, i) = (4, 5, 6);
    let mut a = DMatrix::<f64>::zeros(7, 7);
    let mut b = DMatrix::<f64>::zeros(7, 7);

    a[(0, STATE_ETA_M)] = 1.0;
    b[(0, STATE_ETA_M)] = params.rho_m;
    a[(1, STATE_ETA_D)] = 1.0;
    b[(1, STATE_ETA_D)] = params.rho_d;
    a[(2, STATE_EPS_S)] = 1.0;
    a[(3, STATE_I_LAG)] = 1.0;
    b[(3, i)] = 1.0;

    // IS: M E x' + sigma E pi' = x + sigma i - eta_d
    a[(4, x)] = red.m;
    a[(4, pi)] = red.sigma;
    b[(4, x)] = 1.0;
    b[(4, i)] = red.sigma;
    b[(4, STATE_ETA_D)] = -1.0;

    // Phillips curve: beta Mf E pi' = pi - kappa x - eps_s
    a[(5, pi)] = red.beta_mf();
    b[(5, pi)] = 1.0;
    b[(5, x)] = -red.kappa;
    b[(5, STATE_EPS_S)] = -1.0;

    // Policy rule (static): 0 = i - rho_i i_lag - (1-rho_i)(phi_pi pi + phi_x x) - eta_m
    let smooth = 1.0 - params.rho_i;
    b[(6, i)] = 1.0;
    b[(6, STATE_I_LAG)] = -params.rho_i;
    b[(6, pi)] = -smooth * params.phi_pi;
    b[(6, x)] = -smooth * params.phi_x;
    b[(6, STATE_ETA_M)] = -1.0;

    Ok(LinearReSystem {
        lead: a,
        current: b,
        n_predetermined: N_STATE,
    })
}

/// Solves the complete model by QZ.
pub fn solve_full_re(params: &StructuralParams) -> Result<StateSpaceSolution> {
    params.validate()?;
    let system = full_system(params)?;
    let ReSolution {
        policy,
        transition,
        root_moduli,
    } = solve_linear_re(&system)?;

    let observation = policy;
    let mut trans = DMatrix::<f64>::zeros(N_STATE, N_STATE);
    trans[(STATE_ETA_M, STATE_ETA_M)] = params.rho_m;
    trans[(STATE_ETA_D, STATE_ETA_D)] = params.rho_d;
    for c in 0..N_STATE {
        trans[(STATE_I_LAG, c)] = observation[(OBS_I, c)];
    }
    debug_assert!((&trans - &transition).norm() < 1e-6 * (1.0 + trans.norm()));

    let mut shock_loading = DMatrix::<f64>::zeros(N_STATE, N_SHOCK);
    shock_loading[(STATE_EPS_S, SHOCK_S)] = 1.0;
    shock_loading[(STATE_ETA_D, SHOCK_D)] = 1.0;
    shock_loading[(STATE_ETA_M, SHOCK_M)] = 1.0;

    Ok(StateSpaceSolution {
        observation,
        transition: trans,
        shock_loading,
        lambda: Matrix2::new(params.rho_m, 0.0, 0.0, params.rho_d),
        sigma_mat: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            params.sigma2_s,
            params.sigma2_d,
            params.sigma2_m,
        ])),
        root_moduli,
    })
}
