//! Simulated linear instrumental-variable designs with controllable
//! instrument strength, used to study the robust statistics.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::robust_gmm::moments::MomentProblem;

/// `y = X theta + u`, `X = Z Pi + V`, `Z ~ N(0, I)`, with `corr(u, v_j)` set by
/// `endogeneity`. Column `j` of `Pi` loads `strength` on instruments
/// `j, j + p, j + 2p, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearIvDesign {
    pub n_obs: usize,
    pub n_instruments: usize,
    pub n_params: usize,
    /// True coefficient, repeated across parameters.
    pub theta: f64,
    pub strength: f64,
    pub endogeneity: f64,
}

impl LinearIvDesign {
    /// Concentration of roughly 2000 per regressor.
    pub fn strong() -> Self {
        Self {
            n_obs: 1000,
            n_instruments: 4,
            n_params: 2,
            theta: 1.0,
            strength: 1.0,
            endogeneity: 0.5,
        }
    }

    /// Nearly irrelevant instruments.
    pub fn weak() -> Self {
        Self {
            strength: 0.01,
            endogeneity: 0.8,
            ..Self::strong()
        }
    }

    pub fn truth(&self) -> Vec<f64> {
        vec![self.theta; self.n_params]
    }
}

pub fn simulate_linear_iv<R: Rng>(design: &LinearIvDesign, rng: &mut R) -> MomentProblem {
    let (n, k, p) = (design.n_obs, design.n_instruments, design.n_params);
    let mut draw = || -> f64 { rng.sample(StandardNormal) };
    let z = DMatrix::from_fn(n, k, |_, _| draw());
    let v = DMatrix::from_fn(n, p, |_, _| draw());
    let e = DVector::from_fn(n, |_, _| draw());
    let rho = design.endogeneity;
    let u = DVector::from_fn(n, |t, _| {
        rho * v.row(t).sum() / (p as f64).sqrt() + (1.0 - rho * rho).sqrt() * e[t]
    });
    let pi = DMatrix::from_fn(k, p, |i, j| if i % p == j { design.strength } else { 0.0 });
    let x = &z * pi + v;
    let y = &x * DVector::from_element(p, design.theta) + u;
    MomentProblem::linear_iv(y, x, z).expect("design dimensions are consistent")
}
