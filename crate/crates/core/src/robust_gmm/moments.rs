use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::data::instruments::{add_real_rate, build_instruments, InstrumentSpec, COL_REAL_RATE};
use crate::data::panel::TimeSeriesPanel;
use crate::data::transform::shift;
use crate::error::{Error, Result};
use crate::model::params::StructuralParams;
use crate::numerics::{bfgs_minimize, fd_step, pinv_symmetric, BfgsOptions};
use crate::robust_gmm::residual::{IsResidual, LinearIvResidual, NkpcResidual, Residual};

/// Newey-West lag count used unless overridden.
pub const DEFAULT_HAC_LAGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    Nkpc,
    Is,
    LinearIv,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::Nkpc => "nkpc",
            Equation::Is => "is",
            Equation::LinearIv => "linear_iv",
        })
    }
}

impl FromStr for Equation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nkpc" => Ok(Equation::Nkpc),
            "is" => Ok(Equation::Is),
            "linear_iv" => Ok(Equation::LinearIv),
            other => Err(Error::Config(format!("unknown equation `{other}` (expected is or nkpc)"))),
        }
    }
}

/// Moment conditions `E[Z_t h_t(theta)] = 0` over an aligned sample.
#[derive(Debug, Clone)]
pub struct MomentProblem {
    pub equation: Equation,
    residual: Arc<dyn Residual>,
    /// Row `t` holds the instruments for residual `t`.
    pub z: DMatrix<f64>,
    pub hac_lags: usize,
}

fn finite_rows(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(t) => Err(Error::Data(format!("missing `{name}` value in estimation row {t}"))),
        None => Ok(()),
    }
}

impl MomentProblem {
    pub fn new(equation: Equation, residual: Arc<dyn Residual>, z: DMatrix<f64>) -> Result<Self> {
        let n_params = residual.param_names().len();
        if residual.n_obs() != z.nrows() {
            return Err(Error::Data(format!(
                "{} residual rows but {} instrument rows",
                residual.n_obs(),
                z.nrows()
            )));
        }
        if z.ncols() < n_params {
            return Err(Error::Config(format!(
                "{} instruments for {n_params} parameters",
                z.ncols()
            )));
        }
        if z.nrows() <= z.ncols() {
            return Err(Error::Data(format!("{} rows for {} instruments", z.nrows(), z.ncols())));
        }
        finite_rows("instrument", z.as_slice())?;
        Ok(Self {
            equation,
            residual,
            z,
            hac_lags: DEFAULT_HAC_LAGS,
        })
    }

    /// Phillips curve on columns `pi`, `x` with `(beta, theta, phi)` from `fixed`.
    pub fn nkpc(panel: &TimeSeriesPanel, spec: &InstrumentSpec, fixed: StructuralParams) -> Result<Self> {
        let inst = build_instruments(panel, spec)?;
        let pi = panel.pi()?;
        let lead = shift(pi, -1);
        let x = panel.x()?;
        let rows = inst.rows.clone();
        let residual = NkpcResidual {
            fixed,
            pi: pi[rows.clone()].to_vec(),
            pi_lead: lead[rows.clone()].to_vec(),
            x: x[rows].to_vec(),
        };
        finite_rows("pi", &residual.pi)?;
        finite_rows("pi lead", &residual.pi_lead)?;
        finite_rows("x", &residual.x)?;
        Self::new(Equation::Nkpc, Arc::new(residual), inst.z)
    }

    /// IS curve on columns `x`, `i`, `pi` (and `r_n` when present).
    pub fn is(panel: &TimeSeriesPanel, spec: &InstrumentSpec, fixed: StructuralParams) -> Result<Self> {
        let panel = match panel.column(COL_REAL_RATE) {
            Some(_) => panel.clone(),
            None => add_real_rate(panel)?.0,
        };
        let inst = build_instruments(&panel, spec)?;
        let x = panel.x()?;
        let lead = shift(x, -1);
        let gap = panel.require(COL_REAL_RATE)?;
        let rows = inst.rows.clone();
        let residual = IsResidual {
            fixed,
            x: x[rows.clone()].to_vec(),
            x_lead: lead[rows.clone()].to_vec(),
            rate_gap: gap[rows].to_vec(),
        };
        finite_rows("x", &residual.x)?;
        finite_rows("x lead", &residual.x_lead)?;
        finite_rows("real rate", &residual.rate_gap)?;
        Self::new(Equation::Is, Arc::new(residual), inst.z)
    }

    pub fn linear_iv(y: DVector<f64>, x: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Data("regressor and outcome lengths differ".into()));
        }
        Self::new(Equation::LinearIv, Arc::new(LinearIvResidual { y, x }), z)
    }

    pub fn with_hac_lags(mut self, lags: usize) -> Self {
        self.hac_lags = lags;
        self
    }

    /// Same residual with instruments `Z A`.
    pub fn rotate_instruments(&self, a: &DMatrix<f64>) -> Self {
        Self {
            z: &self.z * a,
            ..self.clone()
        }
    }

    pub fn n_obs(&self) -> usize {
        self.z.nrows()
    }

    pub fn n_moments(&self) -> usize {
        self.z.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.residual.param_names().len()
    }

    pub fn param_names(&self) -> Vec<String> {
        self.residual.param_names()
    }

    pub fn residuals(&self, theta: &[f64]) -> Result<DVector<f64>> {
        let h = self.residual.residuals(theta)?;
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite residual at {theta:?}")));
        }
        Ok(h)
    }

    /// `g_t = Z_t h_t` as rows.
    fn products(&self, h: &DVector<f64>) -> DMatrix<f64> {
        let mut g = self.z.clone();
        for (mut row, ht) in g.row_iter_mut().zip(h.iter()) {
            row *= *ht;
        }
        g
    }
}

/// Bartlett weights `1 - l/(L+1)` for lags `1..=L`.
pub fn bartlett_weights(lags: usize) -> Vec<f64> {
    (1..=lags).map(|l| 1.0 - l as f64 / (lags as f64 + 1.0)).collect()
}

fn centred(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() as f64;
    let mean = m.row_sum() / n;
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        row -= &mean;
    }
    out
}

/// Long-run cross covariance of the rows of `a` and `b` (already centred):
/// `G_0 + sum_l w_l (G_l + G_{-l})` with `G_l = n^-1 sum_t a_t b_{t-l}'`.
pub fn hac_cross(a: &DMatrix<f64>, b: &DMatrix<f64>, lags: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = a.transpose() * b;
    for (l, w) in (1..=lags.min(n.saturating_sub(1))).zip(bartlett_weights(lags)) {
        let m = n - l;
        let fwd = a.rows(l, m).transpose() * b.rows(0, m);
        let back = a.rows(0, m).transpose() * b.rows(l, m);
        out += (fwd + back) * w;
    }
    out / n as f64
}

/// Newey-West estimate of the long-run covariance of the rows of `g`, centred
/// at their sample mean.
pub fn hac_covariance(g: &DMatrix<f64>, lags: usize) -> DMatrix<f64> {
    let c = centred(g);
    let s = hac_cross(&c, &c, lags);
    (&s + s.transpose()) * 0.5
}

/// Sample moments and everything the S, K and Wald statistics need.
#[derive(Debug, Clone)]
pub struct MomentBundle {
    pub n_obs: usize,
    /// `f_T = n^-1 sum_t Z_t h_t`.
    pub f: DVector<f64>,
    /// HAC covariance of the moment increments (ridge included).
    pub sigma: DMatrix<f64>,
    /// `W_T = sigma^-1`.
    pub weight: DMatrix<f64>,
    /// `d f_T / d theta`, one column per parameter.
    pub jacobian: DMatrix<f64>,
    /// Jacobian with each column purged of its covariance with the moments.
    pub jacobian_orth: DMatrix<f64>,
    /// Amount added to the diagonal of `sigma`; zero when none was needed.
    pub ridge: f64,
    pub warning: Option<String>,
}

/// Relative eigenvalue floor below which the HAC matrix is regularised.
pub const RIDGE_FLOOR: f64 = 1e-10;

/// Residual derivatives by central differences, one-sided where a neighbour
/// is inadmissible.
fn residual_derivatives(problem: &MomentProblem, theta: &[f64], h0: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    (0..theta.len())
        .map(|j| {
            let step = fd_step(theta[j]);
            let at = |d: f64| {
                let mut v = theta.to_vec();
                v[j] += d;
                problem.residuals(&v)
            };
            match (at(step), at(-step)) {
                (Ok(u), Ok(d)) => Ok((u - d) / (2.0 * step)),
                (Ok(u), Err(_)) => Ok((u - h0) / step),
                (Err(_), Ok(d)) => Ok((h0 - d) / step),
                (Err(e), Err(_)) => Err(e),
            }
        })
        .collect()
}

pub fn moment_bundle(problem: &MomentProblem, theta: &[f64]) -> Result<MomentBundle> {
    let n = problem.n_obs();
    let h = problem.residuals(theta)?;
    let g = problem.products(&h);
    let f = g.row_sum().transpose() / n as f64;
    let mut sigma = hac_covariance(&g, problem.hac_lags);

    let k = sigma.nrows();
    let trace = sigma.trace();
    let min_eig = sigma.clone().symmetric_eigen().eigenvalues.min();
    let floor = RIDGE_FLOOR * trace;
    let (ridge, warning) = if trace <= 0.0 {
        (1.0, Some("moment covariance is zero; unit ridge added".to_string()))
    } else if min_eig < floor {
        let r = floor - min_eig;
        (r, Some(format!("moment covariance near singular; ridge {r:.3e} added")))
    } else {
        (0.0, None)
    };
    if ridge > 0.0 {
        sigma += DMatrix::identity(k, k) * ridge;
    }
    let weight = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("moment covariance".into()))?
        .inverse();

    let dh = residual_derivatives(problem, theta, &h)?;
    let p = dh.len();
    let gc = centred(&g);
    let wf = &weight * &f;
    let mut jacobian = DMatrix::zeros(k, p);
    let mut jacobian_orth = DMatrix::zeros(k, p);
    for (j, d) in dh.iter().enumerate() {
        let q = problem.products(d);
        let dj = q.row_sum().transpose() / n as f64;
        let v = hac_cross(&centred(&q), &gc, problem.hac_lags);
        jacobian.set_column(j, &dj);
        jacobian_orth.set_column(j, &(&dj - v * &wf));
    }
    Ok(MomentBundle {
        n_obs: n,
        f,
        sigma,
        weight,
        jacobian,
        jacobian_orth,
        ridge,
        warning,
    })
}

impl MomentBundle {
    /// Continuous-updating objective `f_T' W_T f_T`.
    pub fn objective(&self) -> f64 {
        self.f.dot(&(&self.weight * &self.f)).max(0.0)
    }

    /// `S = T f_T' W_T f_T`.
    pub fn s_statistic(&self) -> f64 {
        self.n_obs as f64 * self.objective()
    }

    /// `K` on the orthogonalised Jacobian columns `cols`; returns the
    /// statistic and the numerical rank of the projection.
    pub fn k_statistic_for(&self, cols: &[usize]) -> (f64, usize) {
        let d = self.jacobian_orth.select_columns(cols);
        let wd = &self.weight * &d;
        let a = d.transpose() * &wd;
        let b = wd.transpose() * &self.f;
        let (ainv, rank) = pinv_symmetric(&a, 1e-12);
        ((self.n_obs as f64 * b.dot(&(&ainv * &b))).max(0.0), rank)
    }

    pub fn k_statistic(&self) -> (f64, usize) {
        let all: Vec<usize> = (0..self.jacobian_orth.ncols()).collect();
        self.k_statistic_for(&all)
    }
}

pub fn cugmm_objective(problem: &MomentProblem, theta: &[f64]) -> Result<f64> {
    Ok(moment_bundle(problem, theta)?.objective())
}

/// Robust statistics at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub s: f64,
    /// `K` for the whole parameter vector.
    pub k: f64,
    /// `K` for each parameter on its own.
    pub k_single: Vec<f64>,
    /// Rank of the whole-vector projection; below the parameter count means
    /// the Jacobian is degenerate there.
    pub k_rank: usize,
    pub ridge: f64,
}

pub fn point_statistics(problem: &MomentProblem, theta: &[f64]) -> Result<PointStats> {
    let b = moment_bundle(problem, theta)?;
    let (k, k_rank) = b.k_statistic();
    let k_single = (0..theta.len()).map(|j| b.k_statistic_for(&[j]).0).collect();
    Ok(PointStats {
        s: b.s_statistic(),
        k,
        k_single,
        k_rank,
        ridge: b.ridge,
    })
}

/// Continuous-updating estimate with its usual GMM variance.
#[derive(Debug, Clone)]
pub struct CueEstimate {
    pub theta: DVector<f64>,
    pub objective: f64,
    /// `(D' W D)^-1 / T` at `theta`.
    pub covariance: DMatrix<f64>,
    pub warning: Option<String>,
}

impl CueEstimate {
    pub fn at(problem: &MomentProblem, theta: DVector<f64>) -> Result<Self> {
        let b = moment_bundle(problem, theta.as_slice())?;
        let info = b.jacobian.transpose() * &b.weight * &b.jacobian;
        let (covariance, mut warning) = match info.clone().cholesky() {
            Some(c) => (c.inverse() / b.n_obs as f64, b.warning.clone()),
            None => {
                let (pinv, rank) = pinv_symmetric(&info, 1e-12);
                (
                    pinv / b.n_obs as f64,
                    Some(format!("GMM information matrix has rank {rank}; pseudo-inverse used")),
                )
            }
        };
        if covariance.diagonal().iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            warning = Some("Wald variance is not positive; Wald statistics undefined".into());
        }
        Ok(Self {
            objective: b.objective(),
            theta,
            covariance,
            warning,
        })
    }

    /// `(theta_hat - theta)' V^-1 (theta_hat - theta)`.
    pub fn wald(&self, theta: &[f64]) -> f64 {
        let d = &self.theta - DVector::from_column_slice(theta);
        match self.covariance.clone().cholesky() {
            Some(c) => d.dot(&c.solve(&d)),
            None => f64::NAN,
        }
    }

    /// Wald statistic for parameter `j` alone.
    pub fn wald_single(&self, theta: &[f64], j: usize) -> f64 {
        let v = self.covariance[(j, j)];
        if v > 0.0 {
            (self.theta[j] - theta[j]).powi(2) / v
        } else {
            f64::NAN
        }
    }
}

/// Unconstrained CUE by BFGS from `start`.
pub fn cue_estimate(problem: &MomentProblem, start: &[f64]) -> Result<CueEstimate> {
    let run = bfgs_minimize(
        |v: &DVector<f64>| cugmm_objective(problem, v.as_slice()).unwrap_or(f64::INFINITY),
        DVector::from_column_slice(start),
        BfgsOptions::default(),
    );
    if !run.f.is_finite() {
        return Err(Error::NoConvergence("CUE objective not finite at any visited point".into()));
    }
    CueEstimate::at(problem, run.x)
}
