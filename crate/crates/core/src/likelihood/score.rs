use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::likelihood::problem::LikelihoodProblem;
use crate::model::params::StructuralParams;
use crate::numerics::{fd_step, pinv_symmetric};

/// Score increments over the free parameters.
#[derive(Debug, Clone)]
pub struct ScoreBundle {
    /// Row `t` is `s_{T,t}`, the derivative of the period-`t` log density.
    pub increments: DMatrix<f64>,
    /// `S_T`, the column sums of `increments`.
    pub total: DVector<f64>,
    /// `J_T = sum_t s_t s_t'`.
    pub j_matrix: DMatrix<f64>,
}

/// Central differences of the per-period log densities, step
/// `eps^(1/3) max(1, |v|)`; one-sided where a neighbour is inadmissible.
pub fn score_bundle(problem: &LikelihoodProblem, params: &StructuralParams) -> Result<ScoreBundle> {
    let values = problem.free_values(params);
    bundle_from_terms(|v| problem.loglik_terms(&problem.params_from(v)), values.as_slice())
}

/// Score bundle of any per-period log-density function of a parameter vector.
pub fn bundle_from_terms<F>(terms: F, values: &[f64]) -> Result<ScoreBundle>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let k = values.len();
    let mut base: Option<Vec<f64>> = None;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let h = fd_step(values[j]);
        let eval = |delta: f64| {
            let mut v = values.to_vec();
            v[j] += delta;
            terms(&v)
        };
        let (hi, lo, width) = match (eval(h), eval(-h)) {
            (Ok(u), Ok(d)) => (u, d, 2.0 * h),
            (Ok(u), Err(_)) => (u, cached(&mut base, &terms, values)?, h),
            (Err(_), Ok(d)) => (cached(&mut base, &terms, values)?, d, h),
            (Err(e), Err(_)) => return Err(e),
        };
        cols.push(hi.iter().zip(&lo).map(|(a, b)| (a - b) / width).collect());
    }
    let n = cols.first().map_or(0, Vec::len);
    let inc = DMatrix::from_fn(n, k, |t, j| cols[j][t]);
    let total = DVector::from_iterator(k, inc.column_iter().map(|c| c.sum()));
    let j_matrix = inc.transpose() * &inc;
    Ok(ScoreBundle {
        increments: inc,
        total,
        j_matrix,
    })
}

fn cached<F>(slot: &mut Option<Vec<f64>>, terms: &F, values: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if slot.is_none() {
        *slot = Some(terms(values)?);
    }
    Ok(slot.clone().expect("just filled"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmResult {
    pub statistic: f64,
    /// Number of tested (free) parameters.
    pub df: usize,
    pub p_value: f64,
    /// Numerical rank of `J_T`; below `df` means a pseudo-inverse was used.
    pub rank: usize,
}

impl LmResult {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.df
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < 1.0 - level
    }
}

/// `LM_o = S_T' J_T^+ S_T` against `chi2_k` with `k` the number of free parameters.
pub fn lm_o(problem: &LikelihoodProblem, params0: &StructuralParams) -> Result<LmResult> {
    let sb = score_bundle(problem, params0)?;
    lm_from_bundle(&sb)
}

pub fn lm_from_bundle(sb: &ScoreBundle) -> Result<LmResult> {
    let df = sb.total.len();
    if df == 0 {
        return Err(Error::Config("no parameters under test".into()));
    }
    let (jinv, rank) = pinv_symmetric(&sb.j_matrix, 1e-12);
    let statistic = sb.total.dot(&(&jinv * &sb.total)).max(0.0);
    let p_value = ChiSquared::new(df as f64)
        .map(|d| d.sf(statistic))
        .map_err(|e| Error::Domain(e.to_string()))?;
    Ok(LmResult {
        statistic,
        df,
        p_value,
        rank,
    })
}
