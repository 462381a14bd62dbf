use nalgebra::{DMatrix, DVector};

use crate::data::panel::{TimeSeriesPanel, COL_I, COL_PI, COL_X};
use crate::error::{Error, Result};
use crate::kv::{format_f64, KvMap};
use crate::likelihood::filter::{kalman_terms, square_terms, stationary_covariance, LinearGaussian};
use crate::model::full::{solve_full_re, OBS_PI, OBS_X, STATE_ETA_D, STATE_ETA_M};
use crate::model::params::{ParamId, StructuralParams};

/// Open parameter box used for transforms and uniform draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBox {
    lower: [f64; 13],
    upper: [f64; 13],
}

fn index(id: ParamId) -> usize {
    ParamId::ALL.iter().position(|p| *p == id).expect("listed")
}

impl Default for ParamBox {
    fn default() -> Self {
        let mut b = Self {
            lower: [0.0; 13],
            upper: [0.0; 13],
        };
        for id in ParamId::ALL {
            let (lo, hi) = match id {
                ParamId::Beta => (0.9, 0.9999),
                ParamId::Theta | ParamId::MBar | ParamId::RhoI | ParamId::RhoD | ParamId::RhoM => (0.001, 0.999),
                ParamId::Gamma => (0.01, 10.0),
                ParamId::Phi => (0.01, 10.0),
                ParamId::PhiPi | ParamId::PhiX => (0.0, 5.0),
                ParamId::Sigma2S | ParamId::Sigma2D | ParamId::Sigma2M => (0.01, 5.0),
            };
            b.set(id, lo, hi);
        }
        b
    }
}

impl ParamBox {
    pub fn get(&self, id: ParamId) -> (f64, f64) {
        (self.lower[index(id)], self.upper[index(id)])
    }

    pub fn set(&mut self, id: ParamId, lower: f64, upper: f64) {
        self.lower[index(id)] = lower;
        self.upper[index(id)] = upper;
    }

    pub fn contains(&self, id: ParamId, v: f64) -> bool {
        let (lo, hi) = self.get(id);
        v > lo && v < hi
    }

    /// `bounds.<name> = lo, hi` entries.
    pub fn merge_kv(mut self, kv: &KvMap) -> Result<Self> {
        for (key, value) in kv.with_prefix("bounds.") {
            let id: ParamId = key.parse()?;
            let parts: Vec<f64> = value
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("bad bounds for {key}: `{value}`")))?;
            match parts[..] {
                [lo, hi] if lo < hi => self.set(id, lo, hi),
                _ => return Err(Error::Config(format!("bad bounds for {key}: `{value}`"))),
            }
        }
        Ok(self)
    }

    pub fn to_kv(&self, kv: &mut KvMap) {
        for id in ParamId::ALL {
            let (lo, hi) = self.get(id);
            kv.insert(format!("bounds.{id}"), format!("{}, {}", format_f64(lo), format_f64(hi)));
        }
    }

    /// Maps an unconstrained coordinate into `(lo, hi)`.
    pub fn to_box(&self, id: ParamId, u: f64) -> f64 {
        let (lo, hi) = self.get(id);
        lo + (hi - lo) / (1.0 + (-u).exp())
    }

    pub fn from_box(&self, id: ParamId, v: f64) -> f64 {
        let (lo, hi) = self.get(id);
        let z = ((v - lo) / (hi - lo)).clamp(1e-12, 1.0 - 1e-12);
        (z / (1.0 - z)).ln()
    }
}

/// Which likelihood expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodForm {
    /// Kalman filter on `(x, pi, i)`, stationary initial state.
    StateSpace,
    /// Exact form on `(x, pi)` for the square two-shock restricted system,
    /// conditional on zero initial shocks.
    RestrictedSquare,
}

/// A data set plus the split of parameters into fixed and free.
#[derive(Debug, Clone)]
pub struct LikelihoodProblem {
    observations: Vec<DVector<f64>>,
    /// Values of every parameter; free entries are overwritten on evaluation.
    pub base: StructuralParams,
    pub free: Vec<ParamId>,
    pub bounds: ParamBox,
    pub form: LikelihoodForm,
}

/// Parameters held fixed by default.
pub const DEFAULT_FIXED: [ParamId; 3] = [ParamId::Beta, ParamId::Theta, ParamId::Phi];

impl LikelihoodProblem {
    /// State-space problem with `beta`, `theta`, `phi` fixed at their values in `base`.
    pub fn new(panel: &TimeSeriesPanel, base: StructuralParams) -> Result<Self> {
        let free = ParamId::ALL.iter().copied().filter(|p| !DEFAULT_FIXED.contains(p)).collect();
        Self::with_free(panel, base, free, LikelihoodForm::StateSpace)
    }

    pub fn with_free(
        panel: &TimeSeriesPanel,
        base: StructuralParams,
        free: Vec<ParamId>,
        form: LikelihoodForm,
    ) -> Result<Self> {
        let cols: &[&str] = match form {
            LikelihoodForm::StateSpace => &[COL_X, COL_PI, COL_I],
            LikelihoodForm::RestrictedSquare => &[COL_X, COL_PI],
        };
        let observations = panel.rows(cols)?.into_iter().map(DVector::from_vec).collect::<Vec<_>>();
        if observations.len() < 2 {
            return Err(Error::Data("likelihood needs at least two observations".into()));
        }
        if observations.iter().any(|y| y.iter().any(|v| !v.is_finite())) {
            return Err(Error::Data("missing values in likelihood data".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if !free.iter().all(|p| seen.insert(*p)) {
            return Err(Error::Config("duplicate free parameter".into()));
        }
        Ok(Self {
            observations,
            base,
            free,
            bounds: ParamBox::default(),
            form,
        })
    }

    /// Same data, different free set.
    pub fn refree(&self, free: Vec<ParamId>) -> Self {
        Self {
            free,
            ..self.clone()
        }
    }

    pub fn n_obs(&self) -> usize {
        self.observations.len()
    }

    pub fn observations(&self) -> &[DVector<f64>] {
        &self.observations
    }

    pub fn fixed(&self) -> Vec<ParamId> {
        ParamId::ALL.iter().copied().filter(|p| !self.free.contains(p)).collect()
    }

    /// `base` with the free parameters replaced by `values`.
    pub fn params_from(&self, values: &[f64]) -> StructuralParams {
        let mut p = self.base;
        for (id, v) in self.free.iter().zip(values) {
            p.set(*id, *v);
        }
        p
    }

    pub fn free_values(&self, p: &StructuralParams) -> DVector<f64> {
        DVector::from_iterator(self.free.len(), self.free.iter().map(|id| p.get(*id)))
    }

    /// Per-period log densities at `params`.
    pub fn loglik_terms(&self, params: &StructuralParams) -> Result<Vec<f64>> {
        let sol = solve_full_re(params)?;
        match self.form {
            LikelihoodForm::StateSpace => {
                let q = sol.state_innovation_cov();
                let p0 = stationary_covariance(&sol.transition, &q)?;
                let model = LinearGaussian {
                    observation: sol.observation,
                    transition: sol.transition,
                    state_cov: q,
                    initial_cov: p0,
                };
                kalman_terms(&model, &self.observations)
            }
            LikelihoodForm::RestrictedSquare => {
                let h = &sol.observation;
                let c = DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        h[(OBS_X, STATE_ETA_M)],
                        h[(OBS_X, STATE_ETA_D)],
                        h[(OBS_PI, STATE_ETA_M)],
                        h[(OBS_PI, STATE_ETA_D)],
                    ],
                );
                let lambda = DMatrix::from_row_slice(2, 2, &[params.rho_m, 0.0, 0.0, params.rho_d]);
                let sigma = DMatrix::from_row_slice(2, 2, &[params.sigma2_m, 0.0, 0.0, params.sigma2_d]);
                square_terms(&c, &lambda, &sigma, &self.observations)
            }
        }
    }

    pub fn log_likelihood(&self, params: &StructuralParams) -> Result<f64> {
        Ok(self.loglik_terms(params)?.iter().sum())
    }

    /// Log likelihood as a function of the free values.
    pub fn log_likelihood_at(&self, values: &[f64]) -> Result<f64> {
        self.log_likelihood(&self.params_from(values))
    }

    pub fn to_kv(&self, kv: &mut KvMap) {
        let free: Vec<&str> = self.free.iter().map(|p| p.name()).collect();
        kv.insert("likelihood.free", free.join(", "));
        kv.insert(
            "likelihood.form",
            match self.form {
                LikelihoodForm::StateSpace => "state_space",
                LikelihoodForm::RestrictedSquare => "restricted_square",
            },
        );
        self.bounds.to_kv(kv);
    }
}
