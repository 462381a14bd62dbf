use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::likelihood::problem::LikelihoodProblem;
use crate::likelihood::score::lm_o;
use crate::model::params::ParamId;

/// The tested parameter vector of group `id` (1 to 6). Groups 4 to 6 add a
/// shock variance.
pub fn group_params(id: usize) -> Result<Vec<ParamId>> {
    let mut core = vec![ParamId::MBar, ParamId::Gamma, ParamId::PhiPi, ParamId::PhiX, ParamId::RhoI];
    let extra = match id {
        1 => None,
        2 => Some(ParamId::RhoD),
        3 => Some(ParamId::RhoM),
        4 => Some(ParamId::Sigma2D),
        5 => Some(ParamId::Sigma2S),
        6 => Some(ParamId::Sigma2M),
        _ => return Err(Error::Config(format!("parameter group {id} is not in 1..=6"))),
    };
    core.extend(extra);
    Ok(core)
}

#[derive(Debug, Clone)]
pub struct ProjectionSet {
    pub group: usize,
    pub params: Vec<ParamId>,
    pub level: f64,
    pub critical_value: f64,
    pub n_draws: usize,
    /// Draws whose `LM_o` does not exceed the critical value.
    pub retained: Vec<Vec<f64>>,
    /// Draws where the statistic could not be computed (for example an
    /// indeterminate model); these are not retained.
    pub failed: usize,
    /// Coordinate-wise `[min, max]` of the retained draws.
    pub intervals: Vec<Option<(f64, f64)>>,
    pub warning: Option<String>,
}

/// Uniform draws over the box of the group's parameters, the rest held at
/// `problem.base`; retains draws accepted by `LM_o` at `level`.
pub fn lm_projection_cs(
    problem: &LikelihoodProblem,
    group: usize,
    n_draws: usize,
    seed: u64,
    level: f64,
) -> Result<ProjectionSet> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("confidence level {level} outside (0, 1)")));
    }
    let params = group_params(group)?;
    let tested = problem.refree(params.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<f64>> = (0..n_draws)
        .map(|_| {
            params
                .iter()
                .map(|id| {
                    let (lo, hi) = problem.bounds.get(*id);
                    lo + (hi - lo) * rng.random::<f64>()
                })
                .collect()
        })
        .collect();
    let stats: Vec<Option<f64>> = draws
        .par_iter()
        .map(|v| lm_o(&tested, &tested.params_from(v)).ok().map(|r| r.statistic))
        .collect();
    let critical_value = ChiSquared::new(params.len() as f64)
        .map_err(|e| Error::Domain(e.to_string()))?
        .inverse_cdf(level);
    let failed = stats.iter().filter(|s| s.is_none()).count();
    let retained: Vec<Vec<f64>> = draws
        .into_iter()
        .zip(&stats)
        .filter(|(_, s)| s.is_some_and(|s| s <= critical_value))
        .map(|(d, _)| d)
        .collect();
    let intervals = (0..params.len())
        .map(|j| {
            retained.iter().fold(None, |acc: Option<(f64, f64)>, d| {
                Some(acc.map_or((d[j], d[j]), |(lo, hi)| (lo.min(d[j]), hi.max(d[j]))))
            })
        })
        .collect();
    let warning = retained
        .is_empty()
        .then(|| format!("group {group}: no draw accepted out of {n_draws}"));
    Ok(ProjectionSet {
        group,
        params,
        level,
        critical_value,
        n_draws,
        retained,
        failed,
        intervals,
        warning,
    })
}
