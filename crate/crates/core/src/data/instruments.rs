use std::ops::Range;

use nalgebra::DMatrix;

use crate::data::panel::{TimeSeriesPanel, COL_PI, COL_RN, COL_X};
use crate::data::transform::shift;
use crate::error::{Error, Result};

/// Ex-ante real-rate gap `i_t - pi_{t+1} - r_n_t`.
pub const COL_REAL_RATE: &str = "real_rate";
pub const COL_LABOR_SHARE: &str = "labor_share";

/// Instrument list: optional constant, then lags of named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentSpec {
    pub constant: bool,
    /// `(column, lags)`; lag 0 is the contemporaneous value.
    pub terms: Vec<(String, Vec<usize>)>,
    /// Leads the residual needs beyond `t` (drops rows at the end).
    pub max_lead: usize,
}

impl InstrumentSpec {
    /// Constant, three lags of the output gap, three lags of the real-rate gap.
    pub fn is_default() -> Self {
        Self {
            constant: true,
            terms: vec![(COL_X.into(), vec![1, 2, 3]), (COL_REAL_RATE.into(), vec![1, 2, 3])],
            max_lead: 1,
        }
    }

    /// Four lags of inflation and three lags of the labor share.
    pub fn nkpc_default() -> Self {
        Self {
            constant: false,
            terms: vec![(COL_PI.into(), vec![1, 2, 3, 4]), (COL_LABOR_SHARE.into(), vec![1, 2, 3])],
            max_lead: 1,
        }
    }

    pub fn n_z(&self) -> usize {
        usize::from(self.constant) + self.terms.iter().map(|t| t.1.len()).sum::<usize>()
    }

    pub fn max_lag(&self) -> usize {
        self.terms.iter().flat_map(|t| t.1.iter().copied()).max().unwrap_or(0)
    }

    /// Parses `const, x@1..3, real_rate@1..3, pi@2`.
    pub fn parse(text: &str, max_lead: usize) -> Result<Self> {
        let mut spec = Self {
            constant: false,
            terms: Vec::new(),
            max_lead,
        };
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if item == "const" {
                spec.constant = true;
                continue;
            }
            let bad = || Error::Config(format!("bad instrument term `{item}`"));
            let (name, lags) = item.split_once('@').ok_or_else(bad)?;
            let lags: Vec<usize> = match lags.split_once("..") {
                Some((a, b)) => {
                    let (a, b): (usize, usize) =
                        (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                    if a > b {
                        return Err(bad());
                    }
                    (a..=b).collect()
                }
                None => vec![lags.parse().map_err(|_| bad())?],
            };
            spec.terms.push((name.trim().to_string(), lags));
        }
        if spec.n_z() == 0 {
            return Err(Error::Config("empty instrument list".into()));
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut parts = Vec::new();
        if self.constant {
            parts.push("const".to_string());
        }
        for (name, lags) in &self.terms {
            let contiguous = lags.windows(2).all(|w| w[1] == w[0] + 1);
            match (lags.first(), lags.last()) {
                (Some(a), Some(b)) if contiguous && a != b => parts.push(format!("{name}@{a}..{b}")),
                _ => parts.extend(lags.iter().map(|k| format!("{name}@{k}"))),
            }
        }
        parts.join(", ")
    }
}

/// Instrument matrix aligned with residual dates.
#[derive(Debug, Clone, PartialEq)]
pub struct Instruments {
    /// Row `r` holds the instruments for panel row `rows.start + r`.
    pub z: DMatrix<f64>,
    pub rows: Range<usize>,
    pub names: Vec<String>,
}

/// Adds the real-rate gap column. Without an `r_n` column the proxy is the
/// sample mean of `i_t - pi_{t+1}`; the flag reports that fallback.
pub fn add_real_rate(panel: &TimeSeriesPanel) -> Result<(TimeSeriesPanel, bool)> {
    let i = panel.i()?;
    let pi_lead = shift(panel.pi()?, -1);
    let ex_post: Vec<f64> = i.iter().zip(&pi_lead).map(|(a, b)| a - b).collect();
    let (rn, fallback): (Vec<f64>, bool) = match panel.column(COL_RN) {
        Some(r) => (r.to_vec(), false),
        None => {
            let finite: Vec<f64> = ex_post.iter().copied().filter(|v| v.is_finite()).collect();
            let mean = finite.iter().sum::<f64>() / finite.len().max(1) as f64;
            (vec![mean; panel.len()], true)
        }
    };
    let rr = ex_post.iter().zip(&rn).map(|(a, b)| a - b).collect();
    let mut out = panel.clone();
    out.push_column(COL_REAL_RATE, rr)?;
    Ok((out, fallback))
}

pub fn build_instruments(panel: &TimeSeriesPanel, spec: &InstrumentSpec) -> Result<Instruments> {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    if spec.constant {
        cols.push(vec![1.0; panel.len()]);
        names.push("const".to_string());
    }
    for (name, lags) in &spec.terms {
        let v = panel.require(name)?;
        for &k in lags {
            cols.push(shift(v, k as isize));
            names.push(if k == 0 { name.clone() } else { format!("{name}_lag{k}") });
        }
    }
    if cols.is_empty() {
        return Err(Error::Config("empty instrument list".into()));
    }
    let end = panel.len().saturating_sub(spec.max_lead);
    let start = (0..end)
        .find(|&t| cols.iter().all(|c| c[t].is_finite()))
        .ok_or_else(|| Error::Data("no complete instrument rows after lagging".into()))?;
    if let Some(t) = (start..end).find(|&t| cols.iter().any(|c| !c[t].is_finite())) {
        return Err(Error::Data(format!("missing instrument value at {}", panel.dates()[t])));
    }
    let n = end - start;
    if n <= cols.len() {
        return Err(Error::Data(format!(
            "{n} usable rows for {} instruments",
            cols.len()
        )));
    }
    let z = DMatrix::from_fn(n, cols.len(), |r, c| cols[c][start + r]);
    Ok(Instruments {
        z,
        rows: start..end,
        names,
    })
}
