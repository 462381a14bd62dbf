use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::data::panel::{TimeSeriesPanel, COL_I, COL_PI, COL_X};
use crate::error::{Error, Result};
use crate::kv::KvMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    None,
    Demean,
    /// Removes the OLS fit on `(1, t)`.
    LinearDetrend,
    /// `log v_t - log v_{t-1}`.
    LogDiff,
    /// `v_{t-k}`.
    Lag(usize),
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::None => f.write_str("none"),
            Transform::Demean => f.write_str("demean"),
            Transform::LinearDetrend => f.write_str("linear_detrend"),
            Transform::LogDiff => f.write_str("log_diff"),
            Transform::Lag(k) => write!(f, "lag({k})"),
        }
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "none" => Transform::None,
            "demean" => Transform::Demean,
            "linear_detrend" => Transform::LinearDetrend,
            "log_diff" => Transform::LogDiff,
            _ => {
                let k = s
                    .strip_prefix("lag(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|k| k.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("unknown transform `{s}`")))?;
                Transform::Lag(k)
            }
        })
    }
}

/// Per-column transform pipelines, applied left to right.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransformSpec {
    pub pipelines: BTreeMap<String, Vec<Transform>>,
}

impl TransformSpec {
    /// Linear detrend for the output gap, demeaning for inflation and the
    /// policy rate; other columns untouched.
    pub fn defaults() -> Self {
        let mut s = Self::default();
        s.set(COL_X, vec![Transform::LinearDetrend]);
        s.set(COL_PI, vec![Transform::Demean]);
        s.set(COL_I, vec![Transform::Demean]);
        s
    }

    pub fn set(&mut self, column: &str, pipeline: Vec<Transform>) {
        self.pipelines.insert(column.to_string(), pipeline);
    }

    /// Reads `transform.<column> = t1, t2, ...` entries on top of `self`.
    pub fn merge_kv(mut self, kv: &KvMap) -> Result<Self> {
        for (key, value) in kv.with_prefix("transform.") {
            let pipeline = value
                .split(',')
                .map(str::parse)
                .collect::<Result<Vec<Transform>>>()?;
            self.set(key, pipeline);
        }
        Ok(self)
    }

    pub fn to_kv(&self, kv: &mut KvMap) {
        for (col, p) in &self.pipelines {
            let text: Vec<String> = p.iter().map(ToString::to_string).collect();
            kv.insert(format!("transform.{col}"), text.join(", "));
        }
    }
}

/// Applies `spec` column by column. Lags and differences leave leading NaNs;
/// rows that are incomplete at either end are trimmed afterwards.
pub fn apply_transforms(panel: &TimeSeriesPanel, spec: &TransformSpec) -> Result<TimeSeriesPanel> {
    let mut out = TimeSeriesPanel::new(panel.dates().to_vec())?;
    out.inflation_annualized = panel.inflation_annualized;
    for name in panel.column_names() {
        let mut v = panel.require(name)?.to_vec();
        if let Some(pipeline) = spec.pipelines.get(name) {
            for t in pipeline {
                v = apply_one(&v, *t).map_err(|e| Error::Data(format!("column `{name}`: {e}")))?;
            }
        }
        out.push_column(name.clone(), v)?;
    }
    for name in spec.pipelines.keys() {
        if panel.column(name).is_none() {
            return Err(Error::Config(format!("transform for unknown column `{name}`")));
        }
    }
    Ok(trim_incomplete(&out))
}

/// Drops leading and trailing rows that contain a NaN in any column.
pub fn trim_incomplete(panel: &TimeSeriesPanel) -> TimeSeriesPanel {
    let complete = |t: usize| {
        panel
            .column_names()
            .iter()
            .all(|c| panel.column(c).is_some_and(|v| v[t].is_finite()))
    };
    let n = panel.len();
    let start = (0..n).find(|&t| complete(t)).unwrap_or(n);
    let end = (start..n).rev().find(|&t| complete(t)).map_or(start, |t| t + 1);
    panel.slice(start, end)
}

fn finite_mean(v: &[f64]) -> f64 {
    let (s, n) = v
        .iter()
        .filter(|x| x.is_finite())
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

pub fn apply_one(v: &[f64], t: Transform) -> Result<Vec<f64>> {
    Ok(match t {
        Transform::None => v.to_vec(),
        Transform::Demean => {
            let m = finite_mean(v);
            v.iter().map(|x| x - m).collect()
        }
        Transform::LinearDetrend => {
            let pts: Vec<(f64, f64)> = v
                .iter()
                .enumerate()
                .filter(|(_, x)| x.is_finite())
                .map(|(k, x)| (k as f64, *x))
                .collect();
            let n = pts.len() as f64;
            let tbar = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let ybar = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - tbar).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - tbar) * (p.1 - ybar)).sum();
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            v.iter()
                .enumerate()
                .map(|(k, x)| x - ybar - slope * (k as f64 - tbar))
                .collect()
        }
        Transform::LogDiff => {
            if let Some(bad) = v.iter().find(|x| **x <= 0.0) {
                return Err(Error::Domain(format!("log_diff of non-positive value {bad}")));
            }
            let mut out = vec![f64::NAN; v.len()];
            for k in 1..v.len() {
                out[k] = v[k].ln() - v[k - 1].ln();
            }
            out
        }
        Transform::Lag(k) => shift(v, k as isize),
    })
}

/// `out[t] = v[t - k]`; negative `k` is a lead. Out-of-range entries are NaN.
pub fn shift(v: &[f64], k: isize) -> Vec<f64> {
    (0..v.len() as isize)
        .map(|t| {
            let s = t - k;
            if s >= 0 && (s as usize) < v.len() {
                v[s as usize]
            } else {
                f64::NAN
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demean_gives_zero_mean() {
        let v: Vec<f64> = (0..37).map(|k| (k as f64 * 0.7).sin() + 3.0).collect();
        let d = apply_one(&v, Transform::Demean).unwrap();
        assert!(finite_mean(&d).abs() < 1e-12);
    }

    #[test]
    fn detrend_of_a_line_is_zero() {
        let v: Vec<f64> = (0..50).map(|k| 2.5 - 0.3 * k as f64).collect();
        let d = apply_one(&v, Transform::LinearDetrend).unwrap();
        assert!(d.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn log_diff_of_exponential_is_constant() {
        let v: Vec<f64> = (0..40).map(|k| (0.01 * k as f64).exp()).collect();
        let d = apply_one(&v, Transform::LogDiff).unwrap();
        assert!(d[0].is_nan());
        assert!(d[1..].iter().all(|x| (x - 0.01).abs() < 1e-12));
        assert!(apply_one(&[1.0, 0.0], Transform::LogDiff).is_err());
    }

    #[test]
    fn lag_zero_is_identity_and_lag_shortens_sample() {
        let v = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(apply_one(&v, Transform::Lag(0)).unwrap(), v);
        let mut p = TimeSeriesPanel::with_steps(4);
        p.push_column("x", v.clone()).unwrap();
        p.push_column("y", v).unwrap();
        let mut spec = TransformSpec::default();
        spec.set("y", vec![Transform::Lag(2)]);
        let out = apply_transforms(&p, &spec).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.require("y").unwrap(), &[1.0, 2.0]);
        assert_eq!(out.require("x").unwrap(), &[3.0, 4.0]);
    }

    #[test]
    fn pipeline_parsing_round_trips() {
        let kv = KvMap::parse("transform.x = log_diff, demean\ntransform.ls = lag(3)\n").unwrap();
        let spec = TransformSpec::default().merge_kv(&kv).unwrap();
        assert_eq!(spec.pipelines["x"], vec![Transform::LogDiff, Transform::Demean]);
        assert_eq!(spec.pipelines["ls"], vec![Transform::Lag(3)]);
        let mut back = KvMap::default();
        spec.to_kv(&mut back);
        assert_eq!(TransformSpec::default().merge_kv(&back).unwrap(), spec);
        assert!("lag(x)".parse::<Transform>().is_err());
    }
}
