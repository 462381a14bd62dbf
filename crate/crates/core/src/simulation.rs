//! Seeded simulation of the shock processes and the model observables.
//!
//! Every replication draws from its own ChaCha8 stream: the generator is
//! seeded with `seed` and positioned on stream `stream`, so replication `r`
//! of a Monte Carlo experiment uses `(seed, r)` and results do not depend on
//! scheduling. Normal deviates come from `rand_distr`'s ziggurat sampler.
//! Each period draws `(eps_s, eps_d, eps_m)` in that order, including
//! components with zero variance, so a path depends on the variances only
//! through scaling.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::panel::{TimeSeriesPanel, COL_I, COL_PI, COL_X};
use crate::error::{Error, Result};
use crate::model::full::{solve_full_re, StateSpaceSolution, N_OBS, N_STATE, STATE_ETA_D, STATE_ETA_M, STATE_EPS_S, STATE_I_LAG};
use crate::model::params::StructuralParams;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub total_length: usize,
    pub burn_in_head: usize,
    pub burn_in_tail: usize,
    pub seed: u64,
    /// RNG stream; use the replication index in Monte Carlo loops.
    pub stream: u64,
    pub params: StructuralParams,
}

impl SimulationPlan {
    /// 400 draws with 100 discarded at each end.
    pub fn monte_carlo(params: StructuralParams, seed: u64, stream: u64) -> Self {
        Self {
            total_length: 400,
            burn_in_head: 100,
            burn_in_tail: 100,
            seed,
            stream,
            params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_length <= self.burn_in_head + self.burn_in_tail {
            return Err(Error::Config(format!(
                "total_length {} must exceed burn-in {} + {}",
                self.total_length, self.burn_in_head, self.burn_in_tail
            )));
        }
        Ok(())
    }

    pub fn kept_length(&self) -> usize {
        self.total_length - self.burn_in_head - self.burn_in_tail
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Shock levels and innovations over the full simulated horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockPath {
    pub eta_m: Vec<f64>,
    pub eta_d: Vec<f64>,
    pub eps_s: Vec<f64>,
    pub eps_d: Vec<f64>,
    pub eps_m: Vec<f64>,
}

impl ShockPath {
    pub fn len(&self) -> usize {
        self.eta_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_m.is_empty()
    }
}

/// `eta_t = rho eta_{t-1} + eps_t` from `eta_0 = 0`.
pub fn simulate_shocks(plan: &SimulationPlan) -> Result<ShockPath> {
    plan.validate()?;
    let p = &plan.params;
    let n = plan.total_length;
    let mut rng = plan.rng();
    let sd = |v: f64| {
        if v < 0.0 {
            Err(Error::Domain(format!("negative shock variance {v}")))
        } else {
            Ok(v.sqrt())
        }
    };
    let (sd_s, sd_d, sd_m) = (sd(p.sigma2_s)?, sd(p.sigma2_d)?, sd(p.sigma2_m)?);
    let mut path = ShockPath {
        eta_m: Vec::with_capacity(n),
        eta_d: Vec::with_capacity(n),
        eps_s: Vec::with_capacity(n),
        eps_d: Vec::with_capacity(n),
        eps_m: Vec::with_capacity(n),
    };
    let (mut eta_m, mut eta_d) = (0.0, 0.0);
    for _ in 0..n {
        let zs: f64 = StandardNormal.sample(&mut rng);
        let zd: f64 = StandardNormal.sample(&mut rng);
        let zm: f64 = StandardNormal.sample(&mut rng);
        let (es, ed, em) = (sd_s * zs, sd_d * zd, sd_m * zm);
        eta_m = p.rho_m * eta_m + em;
        eta_d = p.rho_d * eta_d + ed;
        path.eta_m.push(eta_m);
        path.eta_d.push(eta_d);
        path.eps_s.push(es);
        path.eps_d.push(ed);
        path.eps_m.push(em);
    }
    Ok(path)
}

/// Feeds a shock path through a solved model; returns `(x, pi, i)` over the
/// whole horizon, starting from `i_0 = 0`.
pub fn observables_from_shocks(solution: &StateSpaceSolution, shocks: &ShockPath) -> [Vec<f64>; N_OBS] {
    let n = shocks.len();
    let h = &solution.observation;
    let mut out: [Vec<f64>; N_OBS] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut s = DVector::<f64>::zeros(N_STATE);
    let i_row = crate::model::full::OBS_I;
    for t in 0..n {
        s[STATE_ETA_M] = shocks.eta_m[t];
        s[STATE_ETA_D] = shocks.eta_d[t];
        s[STATE_EPS_S] = shocks.eps_s[t];
        let y = h * &s;
        for (k, col) in out.iter_mut().enumerate() {
            col.push(y[k]);
        }
        s[STATE_I_LAG] = y[i_row];
    }
    out
}

/// Simulates `(x, pi, i)` and drops the burn-in rows. Dates are steps `1..=T`.
pub fn simulate_observables(plan: &SimulationPlan) -> Result<TimeSeriesPanel> {
    plan.validate()?;
    let solution = solve_full_re(&plan.params)?;
    let shocks = simulate_shocks(plan)?;
    let [x, pi, i] = observables_from_shocks(&solution, &shocks);
    let keep = plan.burn_in_head..plan.total_length - plan.burn_in_tail;
    let mut panel = TimeSeriesPanel::with_steps(plan.kept_length());
    panel.push_column(COL_X, x[keep.clone()].to_vec())?;
    panel.push_column(COL_PI, pi[keep.clone()].to_vec())?;
    panel.push_column(COL_I, i[keep].to_vec())?;
    Ok(panel)
}
