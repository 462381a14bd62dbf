//! CSV tables, text summaries and the run manifest.

use std::path::Path;

use anyhow::{Context, Result};
use bnk_core::kv::format_f64;
use bnk_core::robust_gmm::{SetResult, TwoStepResult};

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Decimals that resolve a grid with spacing `step`, at least two.
pub fn decimals_for(step: f64) -> usize {
    let d = (-step.log10() - 1e-9).ceil();
    if d.is_finite() && d > 2.0 {
        d as usize
    } else {
        2
    }
}

pub fn interval(iv: Option<(f64, f64)>, decimals: usize) -> String {
    match iv {
        Some((lo, hi)) => format!("[{lo:.decimals$}, {hi:.decimals$}]"),
        None => "empty".into(),
    }
}

pub fn percent(x: f64) -> String {
    format!("{:.3}%", 100.0 * x)
}

pub fn fixed(x: f64) -> String {
    format!("{x:.4}")
}

/// Rows `(Parameter, CS_R, CS_N, Gamma_hat)`, one per parameter.
pub fn two_step_table(res: &TwoStepResult) -> Vec<Vec<String>> {
    res.param_names
        .iter()
        .zip(&res.per_param)
        .enumerate()
        .map(|(j, (name, set))| {
            let d = decimals_for(res.grid.axes[j].step);
            vec![
                name.clone(),
                interval(set.robust_intervals[j], d),
                interval(set.nonrobust_intervals[j], d),
                percent(set.gamma_hat),
            ]
        })
        .collect()
}

pub const TWO_STEP_HEADER: [&str; 4] = ["Parameter", "CS_R", "CS_N", "Gamma_hat"];

/// Statistics at every grid point, with the joint set memberships.
pub fn grid_rows(res: &TwoStepResult) -> Vec<Vec<String>> {
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    res.points
        .iter()
        .zip(&res.stats)
        .enumerate()
        .map(|(i, (pt, st))| {
            vec![
                format_f64(pt[0]),
                format_f64(pt[1]),
                format_f64(st.s),
                format_f64(st.k),
                format_f64(st.w),
                flag(res.whole.in_robust[i]),
                flag(res.whole.in_nonrobust[i]),
            ]
        })
        .collect()
}

pub fn grid_header(res: &TwoStepResult) -> Vec<String> {
    let mut h: Vec<String> = res.param_names.clone();
    h.extend(["S", "K", "W", "in_CS_R", "in_CS_N"].map(String::from));
    h
}

fn describe_set(out: &mut String, label: &str, set: &SetResult, decimals: [usize; 2], names: &[String]) {
    let cal = &set.calibration;
    out.push_str(&format!(
        "[{label}]\np = {}\na(Gamma_min) = {}\nrobust critical value = {}\nnon-robust critical value = {}\n",
        cal.p,
        format_f64(cal.a_value),
        format_f64(set.robust_critical),
        format_f64(set.nonrobust_critical)
    ));
    out.push_str(&format!("Gamma_hat = {}\n", percent(set.gamma_hat)));
    out.push_str(&format!("never nests = {}\n", set.never_nests));
    out.push_str(&format!("selected set = {}\n", set.ics));
    for (j, name) in names.iter().enumerate() {
        out.push_str(&format!(
            "{name}: CS_R {} CS_N {}\n",
            interval(set.robust_intervals[j], decimals[j]),
            interval(set.nonrobust_intervals[j], decimals[j])
        ));
    }
    out.push('\n');
}

/// Human-readable account of a grid inversion.
pub fn two_step_details(res: &TwoStepResult, alpha: f64, gamma_min: f64, n_obs: usize, n_moments: usize) -> String {
    let d = [decimals_for(res.grid.axes[0].step), decimals_for(res.grid.axes[1].step)];
    let mut out = format!(
        "alpha = {}\ngamma_min = {}\ngrid = {}\nobservations = {n_obs}\nmoments = {n_moments}\n",
        format_f64(alpha),
        format_f64(gamma_min),
        res.grid
    );
    let sd = res.estimate.covariance.diagonal().map(|v| v.sqrt());
    for (j, name) in res.param_names.iter().enumerate() {
        out.push_str(&format!(
            "estimate {name} = {} (s.d. {})\n",
            format_f64(res.estimate.theta[j]),
            format_f64(sd[j])
        ));
    }
    out.push_str(&format!("CUE objective = {}\n", format_f64(res.estimate.objective)));
    out.push_str(&format!("inadmissible points = {}\n\n", res.inadmissible));
    describe_set(&mut out, "joint", &res.whole, d, &res.param_names);
    for (j, set) in res.per_param.iter().enumerate() {
        describe_set(&mut out, &res.param_names[j], set, d, &res.param_names);
    }
    for w in &res.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_precision_follows_the_grid() {
        assert_eq!(decimals_for(0.01), 2);
        assert_eq!(decimals_for(0.1), 2);
        assert_eq!(decimals_for(0.001), 3);
        assert_eq!(interval(Some((0.8, 1.0)), 2), "[0.80, 1.00]");
        assert_eq!(interval(None, 2), "empty");
        assert_eq!(percent(0.09934), "9.934%");
    }
}
