//! Closed-form solution of the restricted two-shock system.
//!
//! Under `rho_i = 0`, `phi_x = 0`, `phi_pi = 1/sigma` and no cost-push shock,
//! output and inflation load on the current monetary and demand shocks only:
//!
//! ```text
//! x_t  = a1 eta_m + a2 eta_d
//! pi_t = b1 eta_m + b2 eta_d,   b_j = a_j kappa / (1 - rho_j beta Mf)
//! a1 = -beta Mf sigma / (beta Mf + sigma kappa - rho_m m_bar)
//! a2 =  beta Mf       / (beta Mf + sigma kappa - rho_d m_bar)
//! ```

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::model::params::ReducedParams;
use crate::model::re_solver::LinearReSystem;

/// Loadings of `(x_t, pi_t)` on `(eta_m, eta_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionMatrix {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl SolutionMatrix {
    /// `[a1 a2; b1 b2]`, rows `(x, pi)`, columns `(eta_m, eta_d)`.
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a1, self.a2, self.b1, self.b2)
    }

    pub fn determinant(&self) -> f64 {
        self.a1 * self.b2 - self.a2 * self.b1
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> (f64, f64) {
        // For a 2x2 matrix: s1 s2 = |det|, s1^2 + s2^2 = ||.||_F^2.
        let fro2 = self.a1 * self.a1 + self.a2 * self.a2 + self.b1 * self.b1 + self.b2 * self.b2;
        let det = self.determinant().abs();
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        let s1 = ((fro2 + disc) / 2.0).sqrt();
        let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
        (s1, s2)
    }

    /// Numerical rank with relative tolerance `tol` on the singular values.
    pub fn rank(&self, tol: f64) -> usize {
        let (s1, s2) = self.singular_values();
        if s1 == 0.0 {
            0
        } else if s2 <= tol * s1 {
            1
        } else {
            2
        }
    }
}

/// Evaluates the closed form. Fails when one of the denominators
/// `beta Mf + sigma kappa - rho m_bar` or `1 - rho beta Mf` vanishes.
pub fn solve_restricted(
    reduced: &ReducedParams,
    m_bar: f64,
    rho_m: f64,
    rho_d: f64,
) -> Result<SolutionMatrix> {
    let bmf = reduced.beta_mf();
    let sigma = reduced.sigma;
    let kappa = reduced.kappa;
    let base = bmf + sigma * kappa;

    let denom = |rho: f64, label: &str| -> Result<(f64, f64)> {
        let d = base - rho * m_bar;
        if d.abs() < f64::EPSILON * base.abs().max(1.0) {
            return Err(Error::Singular(format!(
                "beta*Mf + sigma*kappa - {label}*m_bar vanishes ({d:e})"
            )));
        }
        let e = 1.0 - rho * bmf;
        if e.abs() < f64::EPSILON {
            return Err(Error::Singular(format!("1 - {label}*beta*Mf vanishes ({e:e})")));
        }
        Ok((d, e))
    };
    let (dm, em) = denom(rho_m, "rho_m")?;
    let (dd, ed) = denom(rho_d, "rho_d")?;

    let a1 = -bmf * sigma / dm;
    let a2 = bmf / dd;
    Ok(SolutionMatrix {
        a1,
        a2,
        b1: a1 * kappa / em,
        b2: a2 * kappa / ed,
    })
}

/// The two-equation expectation system the closed form solves,
/// `x = (m_bar/B) E x' + c_m eta_m + c_d eta_d` and `pi = beta Mf E pi' + kappa x`
/// with `B = beta Mf + sigma kappa`, in `A E z' = B z` form over
/// `z = (eta_m, eta_d, x, pi)` with two predetermined shocks.
pub fn expectation_system(r: &ReducedParams, m_bar: f64, rho_m: f64, rho_d: f64) -> LinearReSystem {
    let bmf = r.beta_mf();
    let base = bmf + r.sigma * r.kappa;
    let (rr, cm, cd) = (m_bar / base, -bmf * r.sigma / base, bmf / base);
    let lead = DMatrix::from_row_slice(
        4,
        4,
        &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, rr, 0.0, 0.0, 0.0, 0.0, bmf],
    );
    let current = DMatrix::from_row_slice(
        4,
        4,
        &[
            rho_m, 0.0, 0.0, 0.0, //
            0.0, rho_d, 0.0, 0.0, //
            -cm, -cd, 1.0, 0.0, //
            0.0, 0.0, -r.kappa, 1.0,
        ],
    );
    LinearReSystem {
        lead,
        current,
        n_predetermined: 2,
    }
}

/// Loadings of the expectation system by summing its forward solution
/// `x = c sum_j (rho m_bar/B)^j eta`, `pi = kappa x sum_j (rho beta Mf)^j`
/// until the geometric tail bound falls below `tol`.
pub fn forward_iteration(r: &ReducedParams, m_bar: f64, rho_m: f64, rho_d: f64, tol: f64) -> Result<SolutionMatrix> {
    let bmf = r.beta_mf();
    let base = bmf + r.sigma * r.kappa;
    let sum = |ratio: f64| -> Result<f64> {
        if !(ratio.abs() < 1.0) {
            return Err(Error::NoConvergence(format!("forward sum with ratio {ratio} diverges")));
        }
        let (mut total, mut term) = (0.0_f64, 1.0_f64);
        while term.abs() / (1.0 - ratio.abs()) >= tol {
            total += term;
            term *= ratio;
        }
        Ok(total)
    };
    let leg = |rho: f64, load: f64| -> Result<(f64, f64)> {
        let x = load / base * sum(m_bar / base * rho)?;
        Ok((x, r.kappa * x * sum(bmf * rho)?))
    };
    let (a1, b1) = leg(rho_m, -bmf * r.sigma)?;
    let (a2, b2) = leg(rho_d, bmf)?;
    Ok(SolutionMatrix { a1, a2, b1, b2 })
}
