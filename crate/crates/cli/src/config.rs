//! Run configuration resolved from built-in defaults, an optional key-value
//! file and command-line flags, in that order of precedence.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bnk_core::data::{InstrumentSpec, TransformSpec};
use bnk_core::kv::{format_f64, KvMap};
use bnk_core::likelihood::ParamBox;
use bnk_core::numerics::BfgsOptions;
use bnk_core::robust_gmm::{Equation, GridSpec, DEFAULT_HAC_LAGS};
use bnk_core::simulation::SimulationPlan;
use bnk_core::{ParamId, Period, StructuralParams};

/// Where `lm-cs` takes its sample from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmSource {
    /// One simulated draw at the configured parameters.
    Simulated,
    /// The loaded and transformed panel.
    Data,
}

impl LmSource {
    fn as_str(self) -> &'static str {
        match self {
            LmSource::Simulated => "simulated",
            LmSource::Data => "data",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub alpha: f64,
    pub gamma_min: f64,
    pub grid: GridSpec,
    pub equation: Equation,
    pub data: PathBuf,
    pub out: PathBuf,
    pub sample: (Period, Period),
    pub transforms: TransformSpec,
    pub instruments_is: InstrumentSpec,
    pub instruments_nkpc: InstrumentSpec,
    pub hac_lags: usize,
    pub params: StructuralParams,
    pub bounds: ParamBox,
    /// Parameters held at their configured values by `fit-ml`.
    pub ml_fixed: Vec<ParamId>,
    pub ml_options: BfgsOptions,
    pub lm_draws: usize,
    pub lm_level: f64,
    pub lm_groups: Vec<usize>,
    pub lm_source: LmSource,
    pub sim_length: usize,
    pub sim_burn_in_head: usize,
    pub sim_burn_in_tail: usize,
    pub sim_stream: u64,
    /// Level and grid of the second pair of GMM tables in `replicate`.
    pub appendix_alpha: f64,
    pub appendix_grid: GridSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let options = BfgsOptions::default();
        Self {
            seed: 20190,
            alpha: 0.05,
            gamma_min: 0.05,
            grid: GridSpec::paper(),
            equation: Equation::Is,
            data: PathBuf::from("data/replication_panel.csv"),
            out: PathBuf::from("out"),
            sample: (Period::quarter(1962, 2), Period::quarter(2016, 4)),
            transforms: TransformSpec::defaults(),
            instruments_is: InstrumentSpec::is_default(),
            instruments_nkpc: InstrumentSpec::nkpc_default(),
            hac_lags: DEFAULT_HAC_LAGS,
            params: StructuralParams::table1(),
            bounds: ParamBox::default(),
            ml_fixed: vec![ParamId::Beta, ParamId::Theta, ParamId::Phi, ParamId::Sigma2M],
            ml_options: options,
            lm_draws: 10_000,
            lm_level: 0.95,
            lm_groups: vec![1, 2, 3],
            lm_source: LmSource::Simulated,
            sim_length: 400,
            sim_burn_in_head: 100,
            sim_burn_in_tail: 100,
            sim_stream: 0,
            appendix_alpha: 0.10,
            appendix_grid: GridSpec::appendix_c(),
        }
    }
}

/// Values given on the command line; `None` leaves the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub gamma_min: Option<f64>,
    pub grid: Option<String>,
    pub equation: Option<String>,
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn parse_list<T: std::str::FromStr>(key: &str, text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("`{key}`: {e}")))
        .collect()
}

impl RunConfig {
    /// Every resolved setting as a flat map; this is what the manifest records.
    pub fn to_kv(&self) -> KvMap {
        let mut kv = self.params.to_kv();
        kv.insert("seed", self.seed);
        kv.insert("alpha", format_f64(self.alpha));
        kv.insert("gamma_min", format_f64(self.gamma_min));
        kv.insert("grid", &self.grid);
        kv.insert("equation", self.equation);
        kv.insert("data", self.data.display());
        kv.insert("out", self.out.display());
        kv.insert("sample.first", self.sample.0);
        kv.insert("sample.last", self.sample.1);
        self.transforms.to_kv(&mut kv);
        kv.insert("instruments.is", self.instruments_is.to_text());
        kv.insert("instruments.nkpc", self.instruments_nkpc.to_text());
        kv.insert("hac_lags", self.hac_lags);
        self.bounds.to_kv(&mut kv);
        kv.insert("ml.fixed", join(&self.ml_fixed));
        kv.insert("ml.max_iter", self.ml_options.max_iter);
        kv.insert("ml.grad_tol", format_f64(self.ml_options.grad_tol));
        kv.insert("lm.draws", self.lm_draws);
        kv.insert("lm.level", format_f64(self.lm_level));
        kv.insert("lm.groups", join(&self.lm_groups));
        kv.insert("lm.source", self.lm_source.as_str());
        kv.insert("simulate.length", self.sim_length);
        kv.insert("simulate.burn_in_head", self.sim_burn_in_head);
        kv.insert("simulate.burn_in_tail", self.sim_burn_in_tail);
        kv.insert("simulate.stream", self.sim_stream);
        kv.insert("appendix.alpha", format_f64(self.appendix_alpha));
        kv.insert("appendix.grid", &self.appendix_grid);
        kv
    }

    /// Resolves `kv` on top of the defaults. Unknown keys are an error.
    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let base = Self::default();
        let known = base.to_kv();
        for key in kv.keys() {
            if !known.contains(key) && !key.starts_with("transform.") {
                bail!("unknown config key `{key}`");
            }
        }
        let f64_or = |key: &str, d: f64| -> Result<f64> { Ok(kv.get_f64(key)?.unwrap_or(d)) };
        let usize_or = |key: &str, d: usize| -> Result<usize> {
            Ok(kv.get_u64(key)?.map_or(Ok(d), usize::try_from)?)
        };
        let text = |key: &str| kv.get(key);

        let period = |key: &str, d: Period| -> Result<Period> {
            text(key).map_or(Ok(d), |s| s.parse().with_context(|| format!("`{key}`")))
        };
        let grid = |key: &str, d: &GridSpec| -> Result<GridSpec> {
            text(key).map_or(Ok(d.clone()), |s| GridSpec::parse(s).with_context(|| format!("`{key}`")))
        };
        let instruments = |key: &str, d: &InstrumentSpec| -> Result<InstrumentSpec> {
            text(key).map_or(Ok(d.clone()), |s| {
                InstrumentSpec::parse(s, d.max_lead).with_context(|| format!("`{key}`"))
            })
        };
        let equation = match text("equation") {
            None => base.equation,
            Some(s) => match s.parse::<Equation>()? {
                Equation::LinearIv => bail!("`equation` must be is or nkpc"),
                e => e,
            },
        };
        let lm_source = match text("lm.source") {
            None => base.lm_source,
            Some("simulated") => LmSource::Simulated,
            Some("data") => LmSource::Data,
            Some(other) => bail!("`lm.source`: `{other}` is neither simulated nor data"),
        };

        let cfg = Self {
            seed: kv.get_u64("seed")?.unwrap_or(base.seed),
            alpha: f64_or("alpha", base.alpha)?,
            gamma_min: f64_or("gamma_min", base.gamma_min)?,
            grid: grid("grid", &base.grid)?,
            equation,
            data: text("data").map_or(base.data.clone(), PathBuf::from),
            out: text("out").map_or(base.out.clone(), PathBuf::from),
            sample: (period("sample.first", base.sample.0)?, period("sample.last", base.sample.1)?),
            transforms: base.transforms.clone().merge_kv(kv)?,
            instruments_is: instruments("instruments.is", &base.instruments_is)?,
            instruments_nkpc: instruments("instruments.nkpc", &base.instruments_nkpc)?,
            hac_lags: usize_or("hac_lags", base.hac_lags)?,
            params: StructuralParams::from_kv(kv, base.params)?,
            bounds: base.bounds.merge_kv(kv)?,
            ml_fixed: text("ml.fixed").map_or(Ok(base.ml_fixed.clone()), |s| parse_list("ml.fixed", s))?,
            ml_options: BfgsOptions {
                max_iter: usize_or("ml.max_iter", base.ml_options.max_iter)?,
                grad_tol: f64_or("ml.grad_tol", base.ml_options.grad_tol)?,
            },
            lm_draws: usize_or("lm.draws", base.lm_draws)?,
            lm_level: f64_or("lm.level", base.lm_level)?,
            lm_groups: text("lm.groups").map_or(Ok(base.lm_groups.clone()), |s| parse_list("lm.groups", s))?,
            lm_source,
            sim_length: usize_or("simulate.length", base.sim_length)?,
            sim_burn_in_head: usize_or("simulate.burn_in_head", base.sim_burn_in_head)?,
            sim_burn_in_tail: usize_or("simulate.burn_in_tail", base.sim_burn_in_tail)?,
            sim_stream: kv.get_u64("simulate.stream")?.unwrap_or(base.sim_stream),
            appendix_alpha: f64_or("appendix.alpha", base.appendix_alpha)?,
            appendix_grid: grid("appendix.grid", &base.appendix_grid)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults, then the file at `path` if any, then the flags.
    pub fn resolve(path: Option<&std::path::Path>, flags: &Overrides) -> Result<Self> {
        let mut kv = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
                KvMap::parse(&text).with_context(|| format!("invalid config {}", p.display()))?
            }
            None => KvMap::new(),
        };
        if let Some(v) = &flags.data {
            kv.insert("data", v.display());
        }
        if let Some(v) = &flags.out {
            kv.insert("out", v.display());
        }
        if let Some(v) = flags.seed {
            kv.insert("seed", v);
        }
        if let Some(v) = flags.alpha {
            kv.insert("alpha", format_f64(v));
        }
        if let Some(v) = flags.gamma_min {
            kv.insert("gamma_min", format_f64(v));
        }
        if let Some(v) = &flags.grid {
            kv.insert("grid", v);
        }
        if let Some(v) = &flags.equation {
            kv.insert("equation", v);
        }
        Self::from_kv(&kv).context("invalid configuration")
    }

    pub fn validate(&self) -> Result<()> {
        for (name, alpha) in [("alpha", self.alpha), ("appendix.alpha", self.appendix_alpha)] {
            if !(alpha > 0.0 && alpha < 1.0) {
                bail!("`{name}` = {alpha} must lie in (0, 1)");
            }
            if !(self.gamma_min >= 0.0 && self.gamma_min < 1.0 - alpha) {
                bail!(
                    "`gamma_min` = {} must lie in [0, 1 - {name}) = [0, {})",
                    self.gamma_min,
                    1.0 - alpha
                );
            }
        }
        if !(self.lm_level > 0.0 && self.lm_level < 1.0) {
            bail!("`lm.level` = {} must lie in (0, 1)", self.lm_level);
        }
        if self.sample.0.ordinal() > self.sample.1.ordinal() {
            bail!("`sample.first` {} is after `sample.last` {}", self.sample.0, self.sample.1);
        }
        for g in &self.lm_groups {
            bnk_core::likelihood::group_params(*g)?;
        }
        self.params.validate().context("configured parameters")?;
        self.simulation_plan().validate()?;
        Ok(())
    }

    pub fn simulation_plan(&self) -> SimulationPlan {
        SimulationPlan {
            total_length: self.sim_length,
            burn_in_head: self.sim_burn_in_head,
            burn_in_tail: self.sim_burn_in_tail,
            seed: self.seed,
            stream: self.sim_stream,
            params: self.params,
        }
    }

    pub fn instruments(&self, equation: Equation) -> &InstrumentSpec {
        match equation {
            Equation::Nkpc => &self.instruments_nkpc,
            _ => &self.instruments_is,
        }
    }

    /// Free parameters for maximum likelihood, in canonical order.
    pub fn ml_free(&self) -> Vec<ParamId> {
        ParamId::ALL.iter().copied().filter(|p| !self.ml_fixed.contains(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrips_to_the_same_config() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_kv(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "alpha = 0.1\nseed = 3\n").unwrap();
        let flags = Overrides {
            seed: Some(9),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(Some(&path), &flags).unwrap();
        assert_eq!((cfg.alpha, cfg.seed), (0.1, 9));
    }

    #[test]
    fn rejects_unknown_keys_and_large_gamma_min() {
        let kv = KvMap::parse("alhpa = 0.1").unwrap();
        assert!(RunConfig::from_kv(&kv).is_err());
        let kv = KvMap::parse("alpha = 0.1\ngamma_min = 0.95").unwrap();
        let err = RunConfig::from_kv(&kv).unwrap_err();
        assert!(format!("{err:#}").contains("gamma_min"), "{err:#}");
    }

    #[test]
    fn parameter_keys_use_plain_names() {
        let kv = KvMap::parse("m_bar = 0.5\nml.fixed = beta, theta").unwrap();
        let cfg = RunConfig::from_kv(&kv).unwrap();
        assert_eq!(cfg.params.m_bar, 0.5);
        assert_eq!(cfg.ml_free().len(), 11);
    }
}
