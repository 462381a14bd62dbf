//! First-order linear rational-expectations solver.
//!
//! Systems are written as `A E_t z_{t+1} = B z_t` with `z = (k, d)`, where
//! the first `n_k` entries are predetermined (exogenous shocks and lagged
//! endogenous variables) and the rest are jump variables. The solution is
//! `d_t = F k_t`, `E_t k_{t+1} = P k_t`, obtained from the ordered
//! generalized Schur form with stable roots (`|t_ii| < |s_ii|`) first.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::qz::generalized_schur;

/// `A E_t z_{t+1} = B z_t` with `n_predetermined` leading state variables.
#[derive(Debug, Clone)]
pub struct LinearReSystem {
    pub lead: DMatrix<f64>,
    pub current: DMatrix<f64>,
    pub n_predetermined: usize,
}

/// Solved policy and transition matrices.
#[derive(Debug, Clone)]
pub struct ReSolution {
    /// `F`: jump variables on predetermined variables (`n_d x n_k`).
    pub policy: DMatrix<f64>,
    /// `P`: expected law of motion of the predetermined block (`n_k x n_k`).
    pub transition: DMatrix<f64>,
    /// Generalized eigenvalue moduli `|t_ii / s_ii|` (infinite for `s_ii = 0`),
    /// in the ordered Schur basis.
    pub root_moduli: Vec<f64>,
}

/// Roots with modulus at or above this are treated as unstable.
const UNIT_CIRCLE: f64 = 1.0 - 1e-10;

pub fn solve_linear_re(system: &LinearReSystem) -> Result<ReSolution> {
    let n = system.lead.nrows();
    let nk = system.n_predetermined;
    if nk > n {
        return Err(Error::Domain("more predetermined variables than equations".into()));
    }
    let mut schur = generalized_schur(&system.lead, &system.current)?;
    let stable = |s: Complex64, t: Complex64| t.norm() < UNIT_CIRCLE * s.norm();
    let n_stable = schur.reorder(stable);
    if n_stable > nk {
        return Err(Error::Indeterminate {
            stable: n_stable,
            predetermined: nk,
        });
    }
    if n_stable < nk {
        return Err(Error::NoStableSolution {
            stable: n_stable,
            predetermined: nk,
        });
    }
    let root_moduli = schur
        .pairs()
        .iter()
        .map(|(s, t)| if s.norm() == 0.0 { f64::INFINITY } else { t.norm() / s.norm() })
        .collect();

    let z11 = schur.z.view((0, 0), (nk, nk)).into_owned();
    let z21 = schur.z.view((nk, 0), (n - nk, nk)).into_owned();
    let s11 = schur.s.view((0, 0), (nk, nk)).into_owned();
    let t11 = schur.t.view((0, 0), (nk, nk)).into_owned();

    let z11_inv = z11
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("stable block of Schur vectors is not invertible".into()))?;
    let s11_inv = s11
        .try_inverse()
        .ok_or_else(|| Error::Singular("stable block of the lead matrix is singular".into()))?;

    let policy_c = &z21 * &z11_inv;
    let transition_c = &z11 * s11_inv * t11 * &z11_inv;

    let scale = 1.0 + policy_c.norm() + transition_c.norm();
    let imag = policy_c.map(|v| v.im.abs()).max().max(transition_c.map(|v| v.im.abs()).max());
    if imag > 1e-8 * scale {
        return Err(Error::Singular(format!(
            "solution has a non-negligible imaginary part ({imag:e})"
        )));
    }
    Ok(ReSolution {
        policy: policy_c.map(|v| v.re),
        transition: transition_c.map(|v| v.re),
        root_moduli,
    })
}
