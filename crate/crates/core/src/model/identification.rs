//! Second moments of the restricted solution and the quantities they identify.

use crate::error::{domain, Result};
use crate::model::restricted::SolutionMatrix;

/// Default band for flagging `rho_d == rho_m`.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-6;

/// AR(1) laws of the two structural shocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockProcesses {
    pub rho_m: f64,
    pub rho_d: f64,
    pub sigma2_m: f64,
    pub sigma2_d: f64,
}

/// Population second moments at lag `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Autocovariances {
    pub lag: usize,
    pub var_x: f64,
    /// `Cov(x_t, x_{t-k})`.
    pub cov_x_x: f64,
    /// `Cov(x_t, pi_{t-k})`.
    pub cov_x_pi: f64,
}

pub fn population_autocov(
    solution: &SolutionMatrix,
    shocks: &ShockProcesses,
    k: usize,
) -> Result<Autocovariances> {
    for (name, rho) in [("rho_m", shocks.rho_m), ("rho_d", shocks.rho_d)] {
        if rho.abs() >= 1.0 {
            return Err(domain(format!("{name} = {rho} is not stationary")));
        }
    }
    let var_m = shocks.sigma2_m / (1.0 - shocks.rho_m * shocks.rho_m);
    let var_d = shocks.sigma2_d / (1.0 - shocks.rho_d * shocks.rho_d);
    let pm = shocks.rho_m.powi(k as i32);
    let pd = shocks.rho_d.powi(k as i32);
    let SolutionMatrix { a1, a2, b1, b2 } = *solution;
    Ok(Autocovariances {
        lag: k,
        var_x: a1 * a1 * var_m + a2 * a2 * var_d,
        cov_x_x: a1 * a1 * var_m * pm + a2 * a2 * var_d * pd,
        cov_x_pi: a1 * b1 * var_m * pm + a2 * b2 * var_d * pd,
    })
}

/// The reduced-form quantities pinned down by the autocovariance structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifiedQuantities {
    pub rho_m: f64,
    pub rho_d: f64,
    /// `A1^2 sigma2_m`
    pub q1: f64,
    /// `A2^2 sigma2_d`
    pub q2: f64,
    /// `A1^2 sigma2_m kappa / (1 - rho_m beta Mf)`
    pub q3: f64,
    /// `A2^2 sigma2_d kappa / (1 - rho_d beta Mf)`
    pub q4: f64,
    /// Set when `|rho_d - rho_m|` is inside the tolerance band; only
    /// `rho`, the variance of `x` and the ratio `pi/x` are then meaningful.
    pub degenerate_flag: bool,
}

impl IdentifiedQuantities {
    /// The four quantities that survive when the persistences coincide:
    /// common root, `Var(x)(1 - rho^2)`, and `pi_t / x_t`.
    pub fn degenerate_view(&self) -> (f64, f64, f64) {
        let scale = self.q1 + self.q2;
        let ratio = if scale != 0.0 { (self.q3 + self.q4) / scale } else { f64::NAN };
        (0.5 * (self.rho_m + self.rho_d), scale, ratio)
    }
}

pub fn identified_quantities(
    solution: &SolutionMatrix,
    shocks: &ShockProcesses,
    tolerance: f64,
) -> IdentifiedQuantities {
    let SolutionMatrix { a1, a2, b1, b2 } = *solution;
    // b_j = a_j kappa/(1 - rho_j beta Mf), so a_j b_j sigma2_j is the scaled cross term.
    IdentifiedQuantities {
        rho_m: shocks.rho_m,
        rho_d: shocks.rho_d,
        q1: a1 * a1 * shocks.sigma2_m,
        q2: a2 * a2 * shocks.sigma2_d,
        q3: a1 * b1 * shocks.sigma2_m,
        q4: a2 * b2 * shocks.sigma2_d,
        degenerate_flag: (shocks.rho_d - shocks.rho_m).abs() < tolerance,
    }
}
