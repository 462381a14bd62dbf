//! Structural and reduced-form parameters.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::kv::{format_f64, KvMap};

/// Identifies one structural parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamId {
    Beta,
    Theta,
    MBar,
    Gamma,
    Phi,
    PhiPi,
    PhiX,
    RhoI,
    RhoD,
    RhoM,
    Sigma2S,
    Sigma2D,
    Sigma2M,
}

impl ParamId {
    pub const ALL: [ParamId; 13] = [
        ParamId::Beta,
        ParamId::Theta,
        ParamId::MBar,
        ParamId::Gamma,
        ParamId::Phi,
        ParamId::PhiPi,
        ParamId::PhiX,
        ParamId::RhoI,
        ParamId::RhoD,
        ParamId::RhoM,
        ParamId::Sigma2S,
        ParamId::Sigma2D,
        ParamId::Sigma2M,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Beta => "beta",
            ParamId::Theta => "theta",
            ParamId::MBar => "m_bar",
            ParamId::Gamma => "gamma",
            ParamId::Phi => "phi",
            ParamId::PhiPi => "phi_pi",
            ParamId::PhiX => "phi_x",
            ParamId::RhoI => "rho_i",
            ParamId::RhoD => "rho_d",
            ParamId::RhoM => "rho_m",
            ParamId::Sigma2S => "sigma2_s",
            ParamId::Sigma2D => "sigma2_d",
            ParamId::Sigma2M => "sigma2_m",
        }
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamId::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown parameter `{s}`")))
    }
}

/// Deep parameters of the three-equation behavioral model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralParams {
    pub beta: f64,
    pub theta: f64,
    pub m_bar: f64,
    pub gamma: f64,
    pub phi: f64,
    pub phi_pi: f64,
    pub phi_x: f64,
    pub rho_i: f64,
    pub rho_d: f64,
    pub rho_m: f64,
    pub sigma2_s: f64,
    pub sigma2_d: f64,
    pub sigma2_m: f64,
}

impl StructuralParams {
    /// Maximum-likelihood point estimates of the complete model on US data,
    /// with beta, theta and phi at their conventional fixed values.
    pub fn table1() -> Self {
        Self {
            beta: 0.99,
            theta: 0.875,
            m_bar: 0.6799,
            gamma: 1.9709,
            phi: 1.0,
            phi_pi: 1.5058,
            phi_x: 1.9672,
            rho_i: 0.4623,
            rho_d: 0.9591,
            rho_m: 0.8843,
            sigma2_s: 0.7443,
            sigma2_d: 0.6536,
            sigma2_m: 1.0,
        }
    }

    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::Beta => self.beta,
            ParamId::Theta => self.theta,
            ParamId::MBar => self.m_bar,
            ParamId::Gamma => self.gamma,
            ParamId::Phi => self.phi,
            ParamId::PhiPi => self.phi_pi,
            ParamId::PhiX => self.phi_x,
            ParamId::RhoI => self.rho_i,
            ParamId::RhoD => self.rho_d,
            ParamId::RhoM => self.rho_m,
            ParamId::Sigma2S => self.sigma2_s,
            ParamId::Sigma2D => self.sigma2_d,
            ParamId::Sigma2M => self.sigma2_m,
        }
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        let slot = match id {
            ParamId::Beta => &mut self.beta,
            ParamId::Theta => &mut self.theta,
            ParamId::MBar => &mut self.m_bar,
            ParamId::Gamma => &mut self.gamma,
            ParamId::Phi => &mut self.phi,
            ParamId::PhiPi => &mut self.phi_pi,
            ParamId::PhiX => &mut self.phi_x,
            ParamId::RhoI => &mut self.rho_i,
            ParamId::RhoD => &mut self.rho_d,
            ParamId::RhoM => &mut self.rho_m,
            ParamId::Sigma2S => &mut self.sigma2_s,
            ParamId::Sigma2D => &mut self.sigma2_d,
            ParamId::Sigma2M => &mut self.sigma2_m,
        };
        *slot = value;
    }

    pub fn with(mut self, id: ParamId, value: f64) -> Self {
        self.set(id, value);
        self
    }

    /// Checks the admissible region: beta, theta in (0,1); m_bar in [0,1]; gamma > 0;
    /// phi >= 0; persistences in [0,1); variances >= 0.
    pub fn validate(&self) -> Result<()> {
        for (id, v) in [(ParamId::Beta, self.beta), (ParamId::Theta, self.theta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(domain(format!("{id} = {v} must lie in (0, 1)")));
            }
        }
        // m_bar = 1 is the rational benchmark, m_bar = 0 full myopia.
        if !(0.0..=1.0).contains(&self.m_bar) {
            return Err(domain(format!("m_bar = {} must lie in [0, 1]", self.m_bar)));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(domain(format!("gamma = {} must be positive", self.gamma)));
        }
        if !(self.phi >= 0.0) || !self.phi.is_finite() {
            return Err(domain(format!("phi = {} must be non-negative", self.phi)));
        }
        for (id, v) in [
            (ParamId::RhoI, self.rho_i),
            (ParamId::RhoD, self.rho_d),
            (ParamId::RhoM, self.rho_m),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(domain(format!("{id} = {v} must lie in [0, 1)")));
            }
        }
        for (id, v) in [
            (ParamId::Sigma2S, self.sigma2_s),
            (ParamId::Sigma2D, self.sigma2_d),
            (ParamId::Sigma2M, self.sigma2_m),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(domain(format!("{id} = {v} must be a non-negative variance")));
            }
        }
        if !self.phi_pi.is_finite() || !self.phi_x.is_finite() {
            return Err(domain("Taylor-rule coefficients must be finite"));
        }
        Ok(())
    }

    /// Imposes the analytically solvable restrictions: no interest-rate
    /// smoothing, no output response, `phi_pi = 1/sigma`, no cost-push shock.
    pub fn restricted(mut self) -> Self {
        self.rho_i = 0.0;
        self.phi_x = 0.0;
        self.phi_pi = self.gamma / self.beta;
        self.sigma2_s = 0.0;
        self
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        for id in ParamId::ALL {
            kv.insert(id.name(), format_f64(self.get(id)));
        }
        kv
    }

    /// Reads parameters from a flat key-value map. Missing keys fall back to
    /// `base`; keys that are not parameter names are ignored.
    pub fn from_kv(kv: &KvMap, base: StructuralParams) -> Result<Self> {
        let mut out = base;
        for id in ParamId::ALL {
            if let Some(v) = kv.get_f64(id.name())? {
                out.set(id, v);
            }
        }
        Ok(out)
    }
}

/// Parameters of the reduced two-equation system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    /// Consumer attention.
    pub m: f64,
    /// Firm attention.
    pub mf: f64,
    /// Effective intertemporal elasticity of substitution.
    pub sigma: f64,
    /// Phillips-curve slope.
    pub kappa: f64,
    /// Gross discount rate, `1/beta`.
    pub r: f64,
    pub beta: f64,
}

impl ReducedParams {
    /// The product `beta * Mf` that multiplies expected inflation.
    pub fn beta_mf(&self) -> f64 {
        self.beta * self.mf
    }
}

/// Firm attention `Mf` as a function of `(beta, theta, m_bar)`.
pub fn firm_attention(beta: f64, theta: f64, m_bar: f64) -> f64 {
    let bt = beta * theta;
    m_bar * (theta + (1.0 - bt) / (1.0 - bt * m_bar) * (1.0 - theta))
}

/// Phillips-curve slope with fully attentive firms.
pub fn phillips_slope(beta: f64, theta: f64, gamma: f64, phi: f64) -> f64 {
    (1.0 / theta - 1.0) * (1.0 - beta * theta) * (gamma + phi)
}

/// Maps deep parameters to `(M, Mf, sigma, kappa, R)`.
pub fn derive_reduced(params: &StructuralParams) -> Result<ReducedParams> {
    let StructuralParams {
        beta,
        theta,
        m_bar,
        gamma,
        phi,
        ..
    } = *params;
    if theta == 0.0 {
        return Err(domain("theta = 0 makes the Phillips-curve slope undefined"));
    }
    if !(gamma > 0.0) {
        return Err(domain(format!("gamma = {gamma} must be positive")));
    }
    if !(beta > 0.0) {
        return Err(domain(format!("beta = {beta} must be positive")));
    }
    if beta * theta * m_bar == 1.0 {
        return Err(domain("beta * theta * m_bar = 1 makes firm attention undefined"));
    }
    let r = 1.0 / beta;
    Ok(ReducedParams {
        m: m_bar,
        mf: firm_attention(beta, theta, m_bar),
        sigma: 1.0 / (gamma * r),
        kappa: phillips_slope(beta, theta, gamma, phi),
        r,
        beta,
    })
}
