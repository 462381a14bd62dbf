//! The packaged quarterly panel: a synthetic stand-in for the historical
//! series, simulated from the full model at the reference calibration.

use rand_distr::{Distribution, StandardNormal};

use crate::data::instruments::COL_LABOR_SHARE;
use crate::data::panel::{Period, TimeSeriesPanel, COL_I, COL_PI, COL_X};
use crate::error::Result;
use crate::model::params::StructuralParams;
use crate::simulation::{simulate_observables, SimulationPlan};

pub const PACKAGED_SEED: u64 = 1961;
pub const PACKAGED_FIRST: (i32, u8) = (1961, 1);
pub const PACKAGED_LAST: (i32, u8) = (2017, 4);

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Model observables plus level shifts (inflation 0.9, policy rate 1.2), a
/// linear output trend of 0.004 per quarter, and a labor-share gap following
/// `ls_t = 0.8 ls_{t-1} + 0.5 x_t + 0.3 e_t`. Values are rounded to four
/// decimals.
pub fn packaged_panel(seed: u64) -> Result<TimeSeriesPanel> {
    let first = Period::quarter(PACKAGED_FIRST.0, PACKAGED_FIRST.1);
    let last = Period::quarter(PACKAGED_LAST.0, PACKAGED_LAST.1);
    let n = (last.ordinal() - first.ordinal() + 1) as usize;
    let plan = SimulationPlan {
        total_length: n + 200,
        burn_in_head: 200,
        burn_in_tail: 0,
        seed,
        stream: 0,
        params: StructuralParams::table1(),
    };
    let sim = simulate_observables(&plan)?;
    let (x, pi, i) = (sim.x()?, sim.pi()?, sim.i()?);

    let mut rng = SimulationPlan { stream: 1, ..plan }.rng();
    let mut ls = Vec::with_capacity(n);
    let mut prev = 0.0;
    for xt in x {
        let e: f64 = StandardNormal.sample(&mut rng);
        prev = 0.8 * prev + 0.5 * xt + 0.3 * e;
        ls.push(prev);
    }

    let dates = (0..n as i64).map(|k| first.offset(k)).collect();
    let mut panel = TimeSeriesPanel::new(dates)?;
    panel.push_column(COL_X, x.iter().enumerate().map(|(t, v)| round4(v + 0.004 * t as f64)).collect())?;
    panel.push_column(COL_PI, pi.iter().map(|v| round4(v + 0.9)).collect())?;
    panel.push_column(COL_I, i.iter().map(|v| round4(v + 1.2)).collect())?;
    panel.push_column(COL_LABOR_SHARE, ls.into_iter().map(round4).collect())?;
    Ok(panel)
}
