//! One function per subcommand. Each writes its files under `cfg.out`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bnk_core::data::{apply_transforms, load_panel, PanelSchema};
use bnk_core::kv::format_f64;
use bnk_core::likelihood::{
    group_params, lm_projection_cs, ml_estimate, LikelihoodForm, LikelihoodProblem, MlEstimate, ProjectionSet,
};
use bnk_core::model::{derive_reduced, solve_full_re, solve_restricted};
use bnk_core::robust_gmm::{
    cugmm_objective, grid_estimate, grid_invert, point_statistics, Equation, GridSpec, MomentProblem, TwoStepResult,
};
use bnk_core::simulation::simulate_observables;
use bnk_core::{ParamId, TimeSeriesPanel};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::config::{LmSource, RunConfig};
use crate::report::{self, fixed, write_csv, write_text};
use crate::svg::region_plot;

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

/// The configured panel after windowing and transforms.
pub fn load_data(cfg: &RunConfig) -> Result<(TimeSeriesPanel, usize)> {
    let schema = PanelSchema::with_window(cfg.sample.0, cfg.sample.1);
    let loaded = load_panel(&cfg.data, &schema).with_context(|| format!("loading {}", cfg.data.display()))?;
    let panel = apply_transforms(&loaded.panel, &cfg.transforms).context("applying transforms")?;
    Ok((panel, loaded.dropped_rows))
}

fn matrix_rows(name: &str, m: &DMatrix<f64>, rows: &mut Vec<Vec<String>>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            rows.push(vec![name.into(), i.to_string(), j.to_string(), format_f64(m[(i, j)])]);
        }
    }
}

pub fn solve(cfg: &RunConfig) -> Result<String> {
    let p = &cfg.params;
    let r = derive_reduced(p)?;
    let full = solve_full_re(p).context("solving the full model")?;
    let closed = solve_restricted(&r, p.m_bar, p.rho_m, p.rho_d)?;
    let reduced = [
        ("M", r.m),
        ("Mf", r.mf),
        ("sigma", r.sigma),
        ("kappa", r.kappa),
        ("R", r.r),
        ("beta_Mf", r.beta_mf()),
    ];
    let rows: Vec<Vec<String>> = reduced.iter().map(|(k, v)| vec![k.to_string(), format_f64(*v)]).collect();
    write_csv(&out_path(cfg, "reduced.csv"), &["quantity", "value"], &rows)?;

    let mut rows = Vec::new();
    matrix_rows("H", &full.observation, &mut rows);
    matrix_rows("F", &full.transition, &mut rows);
    matrix_rows("R", &full.shock_loading, &mut rows);
    matrix_rows("Sigma", &full.sigma_mat, &mut rows);
    write_csv(&out_path(cfg, "state_space.csv"), &["matrix", "row", "col", "value"], &rows)?;

    let rows = vec![
        vec!["x".into(), format_f64(closed.a1), format_f64(closed.a2)],
        vec!["pi".into(), format_f64(closed.b1), format_f64(closed.b2)],
    ];
    write_csv(&out_path(cfg, "closed_form.csv"), &["variable", "eta_m", "eta_d"], &rows)?;

    let moduli: Vec<String> = full.root_moduli.iter().map(|m| format!("{m:.6}")).collect();
    Ok(format!(
        "kappa = {:.6}, sigma = {:.6}, Mf = {:.6}\ngeneralized eigenvalue moduli: {}",
        r.kappa,
        r.sigma,
        r.mf,
        moduli.join(", ")
    ))
}

pub fn simulate(cfg: &RunConfig) -> Result<String> {
    let panel = simulate_observables(&cfg.simulation_plan())?;
    let path = out_path(cfg, "simulated.csv");
    panel.save_csv(&path)?;
    Ok(format!("{} periods written to {}", panel.len(), path.display()))
}

/// Row order of the estimates table: the model parameters in the usual
/// order, then anything else that was freed.
const TABLE1_ORDER: [ParamId; 10] = [
    ParamId::MBar,
    ParamId::Gamma,
    ParamId::PhiPi,
    ParamId::PhiX,
    ParamId::RhoI,
    ParamId::RhoD,
    ParamId::RhoM,
    ParamId::Sigma2D,
    ParamId::Sigma2S,
    ParamId::Sigma2M,
];

fn ml_rows(est: &MlEstimate) -> Vec<Vec<String>> {
    let extra = est.free.iter().copied().filter(|p| !TABLE1_ORDER.contains(p));
    TABLE1_ORDER
        .iter()
        .copied()
        .chain(extra)
        .map(|id| match est.free.iter().position(|p| *p == id) {
            Some(k) => vec![
                id.name().into(),
                fixed(est.estimates[k]),
                fixed(est.sd_hessian[k]),
                fixed(est.t_stats[k]),
            ],
            None => vec![id.name().into(), fixed(est.params.get(id)), fixed(0.0), fixed(0.0)],
        })
        .collect()
}

fn run_ml(cfg: &RunConfig, table: &str) -> Result<String> {
    let (panel, dropped) = load_data(cfg)?;
    let mut problem = LikelihoodProblem::with_free(&panel, cfg.params, cfg.ml_free(), LikelihoodForm::StateSpace)?;
    problem.bounds = cfg.bounds;
    let est = ml_estimate(&problem, &cfg.params, cfg.ml_options).context("maximum likelihood")?;
    write_csv(
        &out_path(cfg, table),
        &["Parameter", "Estimate", "s.d.", "t-stat"],
        &ml_rows(&est),
    )?;
    let rows: Vec<Vec<String>> = est
        .free
        .iter()
        .enumerate()
        .map(|(k, id)| {
            vec![
                id.name().into(),
                format_f64(est.estimates[k]),
                format_f64(est.sd_hessian[k]),
                format_f64(est.sd_opg[k]),
                format_f64(est.t_stats[k]),
            ]
        })
        .collect();
    write_csv(
        &out_path(cfg, "ml_details.csv"),
        &["parameter", "estimate", "sd_hessian", "sd_opg", "t_stat"],
        &rows,
    )?;
    let summary = format!(
        "observations = {}\ndropped rows = {dropped}\nlog likelihood = {}\nconverged = {}\niterations = {}\nevaluations = {}\ngradient norm = {}\nmessage = {}\n",
        problem.n_obs(),
        format_f64(est.log_likelihood),
        est.converged,
        est.iterations,
        est.evaluations,
        format_f64(est.gradient_norm),
        est.message
    );
    write_text(&out_path(cfg, "ml_details.txt"), &summary)?;
    Ok(format!(
        "log likelihood {:.4} over {} quarters, converged = {}",
        est.log_likelihood,
        problem.n_obs(),
        est.converged
    ))
}

pub fn fit_ml(cfg: &RunConfig) -> Result<String> {
    run_ml(cfg, "table1.csv")
}

/// Parameters a group's projection reports: group 1 reports all of its
/// parameters, later groups only the one they add.
fn reported(group: usize, params: &[ParamId]) -> Vec<(usize, ParamId)> {
    if group == 1 {
        params.iter().copied().enumerate().collect()
    } else {
        vec![(params.len() - 1, params[params.len() - 1])]
    }
}

fn run_lm(cfg: &RunConfig, table: &str) -> Result<String> {
    let panel = match cfg.lm_source {
        LmSource::Simulated => simulate_observables(&cfg.simulation_plan())?,
        LmSource::Data => load_data(cfg)?.0,
    };
    let mut problem = LikelihoodProblem::with_free(&panel, cfg.params, cfg.ml_free(), LikelihoodForm::StateSpace)?;
    problem.bounds = cfg.bounds;
    let mut header = vec!["Level".to_string()];
    let (mut lower, mut upper) = (vec!["Lower".to_string()], vec!["Upper".to_string()]);
    let mut details = format!(
        "source = {}\nobservations = {}\nlevel = {}\n\n",
        match cfg.lm_source {
            LmSource::Simulated => "simulated",
            LmSource::Data => "data",
        },
        problem.n_obs(),
        format_f64(cfg.lm_level)
    );
    let mut summary = Vec::new();
    for &g in &cfg.lm_groups {
        let set: ProjectionSet = lm_projection_cs(&problem, g, cfg.lm_draws, cfg.seed.wrapping_add(g as u64), cfg.lm_level)
            .with_context(|| format!("LM projection for group {g}"))?;
        let names: Vec<&str> = set.params.iter().map(|p| p.name()).collect();
        let rows: Vec<Vec<String>> = set.retained.iter().map(|d| d.iter().map(|v| format_f64(*v)).collect()).collect();
        write_csv(&out_path(cfg, &format!("lm_group{g}.csv")), &names, &rows)?;
        for (k, id) in reported(g, &group_params(g)?) {
            header.push(id.name().into());
            match set.intervals[k] {
                Some((lo, hi)) => {
                    lower.push(format!("{lo:.3}"));
                    upper.push(format!("{hi:.3}"));
                }
                None => {
                    lower.push("empty".into());
                    upper.push("empty".into());
                }
            }
        }
        details.push_str(&format!(
            "[group {g}]\nparameters = {}\ndraws = {}\nretained = {}\nfailed = {}\ncritical value = {}\n",
            names.join(", "),
            set.n_draws,
            set.retained.len(),
            set.failed,
            format_f64(set.critical_value)
        ));
        if let Some(w) = &set.warning {
            details.push_str(&format!("warning = {w}\n"));
        }
        details.push('\n');
        summary.push(format!("group {g}: {} of {} draws retained", set.retained.len(), set.n_draws));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&out_path(cfg, table), &header, &[lower, upper])?;
    write_text(&out_path(cfg, "lm_details.txt"), &details)?;
    Ok(summary.join("\n"))
}

pub fn lm_cs(cfg: &RunConfig) -> Result<String> {
    run_lm(cfg, "table2.csv")
}

pub fn moment_problem(cfg: &RunConfig, panel: &TimeSeriesPanel, equation: Equation) -> Result<MomentProblem> {
    let spec = cfg.instruments(equation);
    let problem = match equation {
        Equation::Nkpc => MomentProblem::nkpc(panel, spec, cfg.params),
        _ => MomentProblem::is(panel, spec, cfg.params),
    }
    .with_context(|| format!("building {equation} moments"))?;
    Ok(problem.with_hac_lags(cfg.hac_lags))
}

pub fn fit_gmm(cfg: &RunConfig) -> Result<String> {
    let (panel, _) = load_data(cfg)?;
    let problem = moment_problem(cfg, &panel, cfg.equation)?;
    let points = cfg.grid.points();
    let s: Vec<f64> = points
        .par_iter()
        .map(|pt| cugmm_objective(&problem, pt).unwrap_or(f64::NAN))
        .collect();
    let est = grid_estimate(&problem, &cfg.grid, &points, &s)?;
    let stats = point_statistics(&problem, est.theta.as_slice())?;
    let names = problem.param_names();
    let rows: Vec<Vec<String>> = names
        .iter()
        .enumerate()
        .map(|(j, n)| vec![n.clone(), format_f64(est.theta[j]), format_f64(est.covariance[(j, j)].sqrt())])
        .collect();
    let eq = cfg.equation;
    write_csv(&out_path(cfg, &format!("gmm_{eq}.csv")), &["Parameter", "Estimate", "s.d."], &rows)?;
    let mut text = format!(
        "equation = {eq}\nobservations = {}\nmoments = {}\ngrid = {}\nCUE objective = {}\nS at estimate = {}\n",
        problem.n_obs(),
        problem.n_moments(),
        cfg.grid,
        format_f64(est.objective),
        format_f64(stats.s)
    );
    if let Some(w) = &est.warning {
        text.push_str(&format!("warning = {w}\n"));
    }
    write_text(&out_path(cfg, &format!("gmm_{eq}.txt")), &text)?;
    Ok(format!("{eq}: {} = {:.4}, {} = {:.4}", names[0], est.theta[0], names[1], est.theta[1]))
}

/// Inverts the tests on `grid` and writes the grid, summary and details
/// files under `stem`; returns the result for plotting.
fn invert_and_write(
    cfg: &RunConfig,
    panel: &TimeSeriesPanel,
    equation: Equation,
    grid: &GridSpec,
    alpha: f64,
    table: &str,
    stem: &str,
) -> Result<TwoStepResult> {
    let problem = moment_problem(cfg, panel, equation)?;
    let res = grid_invert(&problem, grid, alpha, cfg.gamma_min).with_context(|| format!("{equation} grid inversion"))?;
    let header = report::grid_header(&res);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&out_path(cfg, &format!("grid_{stem}.csv")), &header, &report::grid_rows(&res))?;
    write_csv(&out_path(cfg, table), &report::TWO_STEP_HEADER, &report::two_step_table(&res))?;
    let details = report::two_step_details(&res, alpha, cfg.gamma_min, problem.n_obs(), problem.n_moments());
    write_text(&out_path(cfg, &format!("two_step_{stem}.txt")), &details)?;
    Ok(res)
}

fn one_line(res: &TwoStepResult) -> String {
    report::two_step_table(res)
        .iter()
        .map(|r| format!("{}: CS_R {} CS_N {} Gamma_hat {}", r[0], r[1], r[2], r[3]))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn two_step_cs(cfg: &RunConfig) -> Result<String> {
    let (panel, _) = load_data(cfg)?;
    let eq = cfg.equation;
    let res = invert_and_write(cfg, &panel, eq, &cfg.grid, cfg.alpha, &format!("cs_{eq}.csv"), &eq.to_string())?;
    let title = format!("{eq}: alpha = {}", cfg.alpha);
    write_text(&out_path(cfg, &format!("region_{eq}.svg")), &region_plot(&res, &title))?;
    Ok(one_line(&res))
}

pub fn replicate(cfg: &RunConfig) -> Result<String> {
    let mut lines = Vec::new();
    let step = |name: &str| eprintln!("bnk: {name}");
    step("table 1: maximum likelihood");
    lines.push(format!("table 1: {}", run_ml(cfg, "table1.csv")?));
    step("table 2: LM projection sets");
    lines.push(format!("table 2:\n{}", run_lm(cfg, "table2.csv")?));

    let (panel, _) = load_data(cfg)?;
    let runs = [
        (Equation::Is, &cfg.grid, cfg.alpha, "table3.csv", "is", Some("fig2.svg")),
        (Equation::Nkpc, &cfg.grid, cfg.alpha, "table4.csv", "nkpc", Some("fig3.svg")),
        (Equation::Is, &cfg.appendix_grid, cfg.appendix_alpha, "table5.csv", "is_appendix", None),
        (Equation::Nkpc, &cfg.appendix_grid, cfg.appendix_alpha, "table6.csv", "nkpc_appendix", None),
    ];
    for (eq, grid, alpha, table, stem, figure) in runs {
        step(&format!("{table}: {eq} two-step sets at alpha = {alpha}"));
        let res = invert_and_write(cfg, &panel, eq, grid, alpha, table, stem)?;
        if let Some(fig) = figure {
            let title = format!("{eq}: alpha = {alpha}");
            write_text(&out_path(cfg, fig), &region_plot(&res, &title))?;
        }
        lines.push(format!("{table} ({eq}, alpha = {alpha}):\n{}", one_line(&res)));
    }
    Ok(lines.join("\n"))
}

/// Writes `manifest.txt` with the subcommand and every resolved setting.
pub fn write_manifest(cfg: &RunConfig, command: &str, workers: usize) -> Result<()> {
    let text = format!(
        "# resolved configuration; rerun with --config on this file\n# command: {command}\n# workers: {workers}\n{}",
        cfg.to_kv().to_text()
    );
    write_text(&Path::new(&cfg.out).join("manifest.txt"), &text)
}
