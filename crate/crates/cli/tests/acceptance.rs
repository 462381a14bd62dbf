//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run everything with `cargo test --release --test acceptance`, or a subset
//! by number, e.g. `cargo test --release --test acceptance -- 1 6 8`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use bnk_core::likelihood::{group_params, lm_o, ml_estimate, score_bundle, LikelihoodForm, LikelihoodProblem};
use bnk_core::model::full::{OBS_PI, OBS_X, STATE_ETA_D, STATE_ETA_M};
use bnk_core::model::{
    derive_reduced, expectation_system, forward_iteration, solve_full_re, solve_linear_re, solve_restricted,
};
use bnk_core::numerics::BfgsOptions;
use bnk_core::robust_gmm::{
    a_of_gamma, chi2_quantile, chi2mix_cdf, chi2mix_quantile, gamma_of_a, grid_invert, linear_combination_set,
    point_statistics, simulate_linear_iv, DistortionCalibration, GridSpec, IcsBranch, LinearIvDesign, MomentProblem,
    TwoStepResult,
};
use bnk_core::simulation::{simulate_observables, SimulationPlan};
use bnk_core::{ParamId, StructuralParams};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};

struct Outcome {
    pass: bool,
    detail: String,
    /// Reported but not part of the exit status.
    gated: bool,
}

fn gated(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail, gated: true }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

// 1. Closed form, forward iteration and QZ agree in the restricted regime.
fn solver_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1, 0);
    let (mut accepted, mut tried) = (0, 0);
    let mut worst = [0.0_f64; 3];
    let mut full_gaps = Vec::new();
    while accepted < 100 && tried < 100_000 {
        tried += 1;
        let p = StructuralParams {
            beta: uniform(&mut r, 0.95, 0.999),
            theta: uniform(&mut r, 0.3, 0.95),
            m_bar: uniform(&mut r, 0.01, 0.99),
            gamma: uniform(&mut r, 0.2, 5.0),
            phi: uniform(&mut r, 0.2, 3.0),
            rho_m: uniform(&mut r, 0.0, 0.98),
            rho_d: uniform(&mut r, 0.0, 0.98),
            sigma2_d: uniform(&mut r, 0.1, 2.0),
            sigma2_m: uniform(&mut r, 0.1, 2.0),
            ..StructuralParams::table1()
        }
        .restricted();
        if p.validate().is_err() {
            continue;
        }
        let Ok(red) = derive_reduced(&p) else { continue };
        let Ok(closed) = solve_restricted(&red, p.m_bar, p.rho_m, p.rho_d) else { continue };
        let Ok(fwd) = forward_iteration(&red, p.m_bar, p.rho_m, p.rho_d, 1e-12) else { continue };
        let Ok(qz) = solve_linear_re(&expectation_system(&red, p.m_bar, p.rho_m, p.rho_d)) else { continue };
        let Ok(full) = solve_full_re(&p) else { continue };
        accepted += 1;
        let want = closed.matrix();
        let h = &full.observation;
        let full_m = [
            [h[(OBS_X, STATE_ETA_M)], h[(OBS_X, STATE_ETA_D)]],
            [h[(OBS_PI, STATE_ETA_M)], h[(OBS_PI, STATE_ETA_D)]],
        ];
        let fwd_m = fwd.matrix();
        let mut gap = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                worst[0] = worst[0].max((fwd_m[(i, j)] - want[(i, j)]).abs());
                worst[1] = worst[1].max((qz.policy[(i, j)] - want[(i, j)]).abs());
                gap = gap.max((full_m[i][j] - want[(i, j)]).abs());
            }
        }
        worst[2] = worst[2].max(gap);
        full_gaps.push(gap);
    }
    full_gaps.sort_by(f64::total_cmp);
    let median = full_gaps.get(full_gaps.len() / 2).copied().unwrap_or(f64::NAN);
    let elapsed = start.elapsed();
    let pass = accepted == 100 && worst.iter().all(|w| *w < 1e-8) && elapsed < Duration::from_secs(10);
    gated(
        pass,
        format!(
            "{accepted} draws ({tried} tried); max |closed - forward| {:.1e}, |closed - QZ expectation system| {:.1e}, |closed - QZ full model| {:.1e} (median {:.1e}); {:.1}s",
            worst[0],
            worst[1],
            worst[2],
            median,
            elapsed.as_secs_f64()
        ),
    )
}

// 2. The solution matrix loses rank as the two persistences meet.
fn identification_collapse() -> Outcome {
    let p = StructuralParams::table1();
    let red = derive_reduced(&p).expect("table calibration");
    let sv: Vec<f64> = (0..20)
        .map(|k| {
            let rho_d = p.rho_m + 0.1 * (19 - k) as f64 / 19.0;
            let m = solve_restricted(&red, p.m_bar, p.rho_m, rho_d).expect("closed form").matrix();
            m.singular_values().min()
        })
        .collect();
    let monotone = sv.windows(2).all(|w| w[1] < w[0]);
    let last = sv[19];
    gated(
        monotone && last < 1e-8,
        format!(
            "smallest singular value {:.3e} -> {:.3e}, strictly decreasing = {monotone}",
            sv[0], last
        ),
    )
}

// 3. The score agrees with a Richardson-extrapolated difference of the log likelihood.
fn gradient_fidelity() -> Outcome {
    let truth = StructuralParams::table1();
    let data = simulate_observables(&SimulationPlan::monte_carlo(truth, 3, 0)).expect("simulation");
    let problem = LikelihoodProblem::new(&data, truth).expect("problem");
    let mut r = rng(3, 1);
    let (mut points, mut tried, mut worst) = (0, 0, 0.0_f64);
    while points < 20 && tried < 10_000 {
        tried += 1;
        let values: Vec<f64> = problem
            .free
            .iter()
            .map(|id| {
                let (lo, hi) = problem.bounds.get(*id);
                let pad = 0.1 * (hi - lo);
                uniform(&mut r, lo + pad, hi - pad)
            })
            .collect();
        let ll = |v: &[f64]| problem.log_likelihood_at(v).ok().filter(|l| l.is_finite());
        if ll(&values).is_none() {
            continue;
        }
        let Ok(sb) = score_bundle(&problem, &problem.params_from(&values)) else { continue };
        let mut fd = DVector::zeros(values.len());
        let mut ok = true;
        for j in 0..values.len() {
            let central = |h: f64| -> Option<f64> {
                let mut up = values.clone();
                let mut dn = values.clone();
                up[j] += h;
                dn[j] -= h;
                Some((ll(&up)? - ll(&dn)?) / (2.0 * h))
            };
            let h = 1e-3 * values[j].abs().max(1.0);
            match (central(h), central(h / 2.0)) {
                (Some(d1), Some(d2)) => fd[j] = (4.0 * d2 - d1) / 3.0,
                _ => ok = false,
            }
        }
        if !ok {
            continue;
        }
        points += 1;
        worst = worst.max((&sb.total - &fd).norm() / sb.total.norm());
    }
    gated(
        points == 20 && worst < 1e-5,
        format!("{points} interior points; max relative error {worst:.2e}"),
    )
}

fn group1_indices(free: &[ParamId]) -> Vec<usize> {
    group_params(1)
        .expect("group 1")
        .iter()
        .map(|id| free.iter().position(|f| f == id).expect("group 1 is free"))
        .collect()
}

// 4. Size of the LM test of the group-1 parameters at the reference calibration.
fn lm_size() -> Outcome {
    let start = Instant::now();
    let truth = StructuralParams::table1();
    let group = group_params(1).expect("group 1");
    let (mut rejections, mut failures) = (0, 0);
    let reps = 2000;
    for rep in 0..reps {
        let data = simulate_observables(&SimulationPlan::monte_carlo(truth, 4, rep)).expect("simulation");
        let problem = LikelihoodProblem::new(&data, truth).expect("problem").refree(group.clone());
        match lm_o(&problem, &truth) {
            Ok(lm) => rejections += usize::from(lm.rejects(0.95)),
            Err(_) => failures += 1,
        }
    }
    let rate = rejections as f64 / (reps as f64 - failures as f64);
    gated(
        (0.035..=0.065).contains(&rate) && start.elapsed() < Duration::from_secs(1800),
        format!(
            "rejection {:.2}% over {reps} reps ({failures} failed); {:.0}s",
            100.0 * rate,
            start.elapsed().as_secs_f64()
        ),
    )
}

// 5. The Wald test of the same hypothesis over-rejects when the persistences are close.
fn wald_fragility() -> Outcome {
    let start = Instant::now();
    let truth = StructuralParams {
        rho_d: StructuralParams::table1().rho_m + 0.05,
        ..StructuralParams::table1()
    };
    let free: Vec<ParamId> = ParamId::ALL
        .into_iter()
        .filter(|p| ![ParamId::Beta, ParamId::Theta, ParamId::Phi].contains(p))
        .collect();
    let idx = group1_indices(&free);
    let crit = chi2_quantile(idx.len(), 0.95).expect("quantile");
    let reps = 2000;
    let (mut rejections, mut undefined) = (0, 0);
    for rep in 0..reps {
        let data = simulate_observables(&SimulationPlan::monte_carlo(truth, 5, rep)).expect("simulation");
        let problem = LikelihoodProblem::with_free(&data, truth, free.clone(), LikelihoodForm::StateSpace)
            .expect("problem");
        let Ok(est) = ml_estimate(&problem, &truth, BfgsOptions::default()) else {
            undefined += 1;
            continue;
        };
        let d = DVector::from_iterator(idx.len(), idx.iter().map(|&k| est.estimates[k] - truth.get(free[k])));
        let v = est.covariance.select_rows(&idx).select_columns(&idx);
        match v.cholesky() {
            Some(c) if d.iter().all(|x| x.is_finite()) => {
                rejections += usize::from(d.dot(&c.solve(&d)) > crit);
            }
            _ => undefined += 1,
        }
    }
    let rate = rejections as f64 / (reps - undefined) as f64;
    gated(
        rate > 0.30,
        format!(
            "Wald rejection {:.2}% over {} reps with a defined covariance ({undefined} undefined); {:.0}s",
            100.0 * rate,
            reps - undefined,
            start.elapsed().as_secs_f64()
        ),
    )
}

// 6. Mixture CDF against simulation, and the distortion map round trip.
fn mixture_oracle() -> Outcome {
    let mut r = rng(6, 0);
    let (mut worst_cdf, mut worst_trip) = (0.0_f64, 0.0_f64);
    let draws = 1_000_000;
    for _ in 0..10 {
        let a = uniform(&mut r, 0.05, 5.0);
        let k = r.random_range(2..=8usize);
        let p = r.random_range(1..=2usize.min(k - 1));
        let x = chi2mix_quantile(a, k, p, uniform(&mut r, 0.1, 0.95)).expect("quantile");
        let c1 = ChiSquared::new(p as f64).unwrap();
        let c2 = ChiSquared::new((k - p) as f64).unwrap();
        let hits = (0..draws)
            .filter(|_| (1.0 + a) * c1.sample(&mut r) + a * c2.sample(&mut r) <= x)
            .count();
        let cdf = chi2mix_cdf(a, k, p, x).expect("cdf");
        worst_cdf = worst_cdf.max((cdf - hits as f64 / draws as f64).abs());
        let g = gamma_of_a(a, 0.05, k, p).expect("gamma");
        let back = a_of_gamma(g, 0.05, k, p).expect("a");
        worst_trip = worst_trip.max((back - a).abs());
    }
    gated(
        worst_cdf < 2e-3 && worst_trip < 1e-6,
        format!("max |cdf - simulation| {worst_cdf:.2e}; max round-trip error {worst_trip:.2e}"),
    )
}

/// Ladder of distortions with `(a, preliminary critical, robust critical)` for
/// one `(k, p)`, shared by every grid with that shape.
type Ladder = Vec<(f64, f64, f64)>;

fn ladder(alpha: f64, k: usize, p: usize) -> Ladder {
    let cal = DistortionCalibration::new(alpha, 0.0, k, p).expect("calibration");
    let top = 1.0 - alpha;
    (0..16)
        .map(|i| {
            let gamma = top * (i as f64) / 16.0;
            let a = cal.a_of(gamma).expect("a");
            (a, cal.chi2_critical().unwrap(), chi2mix_quantile(a, k, p, 1.0 - alpha).expect("quantile"))
        })
        .collect()
}

/// Counts violations of nesting and monotonicity over the ladder for `(k, s)`.
fn nesting_violations(k: &[f64], s: &[f64], ladder: &Ladder) -> usize {
    let mut bad = 0;
    let mut previous: Option<Vec<bool>> = None;
    for &(a, c_p, c_r) in ladder {
        let prelim = linear_combination_set(k, s, a, c_p);
        let robust = linear_combination_set(k, s, a, c_r);
        bad += prelim.iter().zip(&robust).filter(|(p, r)| **p && !**r).count();
        if let Some(prev) = &previous {
            bad += prelim.iter().zip(prev).filter(|(now, before)| **now && !**before).count();
        }
        previous = Some(prelim);
    }
    bad
}

fn all_families_violations(res: &TwoStepResult, ladders: &BTreeMap<usize, Ladder>) -> usize {
    let col = |f: &dyn Fn(usize) -> f64| (0..res.stats.len()).map(f).collect::<Vec<f64>>();
    let s = col(&|i| res.stats[i].s);
    nesting_violations(&col(&|i| res.stats[i].k), &s, &ladders[&2])
        + (0..2)
            .map(|j| nesting_violations(&col(&|i| res.stats[i].k_single[j]), &s, &ladders[&1]))
            .sum::<usize>()
}

// 7 and 8. Two-step structure on linear IV designs; nesting on every grid built.
fn two_step_and_nesting() -> (Outcome, Outcome) {
    let start = Instant::now();
    let (alpha, gamma_min) = (0.05, 0.05);
    let strong = LinearIvDesign::strong();
    let weak = LinearIvDesign::weak();
    let k = strong.n_instruments;
    let ladders: BTreeMap<usize, Ladder> = [1, 2].into_iter().map(|p| (p, ladder(alpha, k, p))).collect();
    let mut grids = 0;
    let mut violations = 0;

    let strong_grid = GridSpec::parse("0.76:1.24:0.02, 0.76:1.24:0.02").unwrap();
    let reps = 500;
    let mut nested = 0;
    for rep in 0..reps {
        let problem = simulate_linear_iv(&strong, &mut rng(7, rep));
        let res = grid_invert(&problem, &strong_grid, alpha, gamma_min).expect("inversion");
        if res.whole.ics == IcsBranch::NonRobust && res.whole.two_step() == res.whole.in_nonrobust.as_slice() {
            nested += 1;
        }
        grids += 1;
        violations += all_families_violations(&res, &ladders);
    }

    let cal = DistortionCalibration::new(alpha, gamma_min, k, 2).unwrap();
    let crit = cal.robust_critical().unwrap();
    let weak_reps = 2000;
    let mut covered = 0;
    for rep in 0..weak_reps {
        let problem = simulate_linear_iv(&weak, &mut rng(77, rep));
        let st = point_statistics(&problem, &weak.truth()).expect("statistics");
        covered += usize::from(st.k + cal.a_value * st.s <= crit);
    }
    let weak_grid = GridSpec::parse("-2:4:0.3, -2:4:0.3").unwrap();
    for rep in 0..100 {
        let problem = simulate_linear_iv(&weak, &mut rng(78, rep));
        let res = grid_invert(&problem, &weak_grid, alpha, gamma_min).expect("inversion");
        grids += 1;
        violations += all_families_violations(&res, &ladders);
    }
    let coverage = covered as f64 / weak_reps as f64;
    let share = nested as f64 / reps as f64;
    let seven = gated(
        share >= 0.95 && coverage >= 1.0 - alpha - 0.02,
        format!(
            "strong design: CS_P nests in CS_N in {nested}/{reps} ({:.1}%); weak design: CS_R coverage {:.2}% over {weak_reps}; {:.0}s",
            100.0 * share,
            100.0 * coverage,
            start.elapsed().as_secs_f64()
        ),
    );

    // The empirical panel on the coarse appendix grid, both equations.
    let data = root().join("data/replication_panel.csv");
    let schema = bnk_core::data::PanelSchema::with_window("1962Q2".parse().unwrap(), "2016Q4".parse().unwrap());
    let panel = bnk_core::data::load_panel(&data, &schema).expect("packaged panel").panel;
    let panel = bnk_core::data::apply_transforms(&panel, &bnk_core::data::TransformSpec::defaults()).unwrap();
    let fixed = StructuralParams::table1();
    for problem in [
        MomentProblem::is(&panel, &bnk_core::data::InstrumentSpec::is_default(), fixed).unwrap(),
        MomentProblem::nkpc(&panel, &bnk_core::data::InstrumentSpec::nkpc_default(), fixed).unwrap(),
    ] {
        let res = grid_invert(&problem, &GridSpec::appendix(), alpha, gamma_min).expect("inversion");
        let ladders: BTreeMap<usize, Ladder> =
            [1, 2].into_iter().map(|p| (p, ladder(alpha, problem.n_moments(), p))).collect();
        grids += 1;
        violations += all_families_violations(&res, &ladders);
    }
    let eight = gated(
        violations == 0,
        format!("{grids} grids, 3 set families each, 16 distortion levels: {violations} violations"),
    );
    (seven, eight)
}

fn run_replicate(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_bnk"))
        .current_dir(root())
        .args(["replicate", "--config", "paper.cfg", "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&status.stderr).into_owned())
    }
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).expect("csv");
    rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

fn parse_interval(text: &str) -> Option<(f64, f64)> {
    let inner = text.trim().strip_prefix('[')?.strip_suffix(']')?;
    let (a, b) = inner.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn parse_percent(text: &str) -> f64 {
    text.trim_end_matches('%').parse::<f64>().unwrap_or(f64::NAN) / 100.0
}

fn point_estimates(details: &Path) -> Vec<f64> {
    std::fs::read_to_string(details)
        .unwrap()
        .lines()
        .filter_map(|l| l.strip_prefix("estimate "))
        .filter_map(|l| l.split_once(" = ")?.1.split(' ').next()?.parse().ok())
        .collect()
}

// 9. Comparison with the published tables (reported, not gated).
fn replication(out: &Path) -> Outcome {
    let mut misses = Vec::new();
    let mut checks = 0;
    let mut check = |label: String, got: f64, want: f64, tol: f64| {
        checks += 1;
        if !((got - want).abs() <= tol) {
            misses.push(format!("{label} {got:.3} vs {want}"));
        }
    };
    let table1 = [
        ("m_bar", 0.6799),
        ("gamma", 1.9709),
        ("phi_pi", 1.5058),
        ("phi_x", 1.9672),
        ("rho_i", 0.4623),
        ("rho_d", 0.9591),
        ("rho_m", 0.8843),
        ("sigma2_d", 0.6536),
        ("sigma2_s", 0.7443),
        ("sigma2_m", 1.0),
    ];
    let rows = read_csv(&out.join("table1.csv"));
    for (name, want) in table1 {
        let got = rows.iter().find(|r| r[0] == name).map_or(f64::NAN, |r| r[1].parse().unwrap());
        check(format!("T1 {name}"), got, want, 0.1);
    }
    let mut set_checks = |table: &str, stem: &str, cs_r: Option<(f64, f64)>, cs_n: (f64, f64), gamma_hat: f64, point: [f64; 2]| {
        let rows = read_csv(&out.join(table));
        let m = &rows[0];
        let mut endpoints = |label: &str, text: &str, want: (f64, f64)| {
            let got = parse_interval(text).unwrap_or((f64::NAN, f64::NAN));
            check(format!("{table} m_bar {label} lower"), got.0, want.0, 0.05);
            check(format!("{table} m_bar {label} upper"), got.1, want.1, 0.05);
        };
        if let Some(r) = cs_r {
            endpoints("CS_R", &m[1], r);
        }
        endpoints("CS_N", &m[2], cs_n);
        for row in &rows {
            check(format!("{table} {} Gamma_hat", row[0]), parse_percent(&row[3]), gamma_hat, 0.02);
        }
        let est = point_estimates(&out.join(format!("two_step_{stem}.txt")));
        for (j, name) in ["m_bar", "gamma"].iter().enumerate() {
            check(format!("{table} point {name}"), est.get(j).copied().unwrap_or(f64::NAN), point[j], 0.05);
        }
    };
    set_checks("table3.csv", "is", None, (0.80, 1.00), 0.05, [0.903, 2.281]);
    set_checks("table4.csv", "nkpc", Some((0.07, 0.95)), (0.14, 0.84), 0.09934, [0.393, 7.944]);
    Outcome {
        pass: misses.is_empty(),
        detail: format!(
            "{} of {checks} values within tolerance on the packaged panel; misses: {}",
            checks - misses.len(),
            if misses.is_empty() { "none".into() } else { misses.join("; ") }
        ),
        gated: false,
    }
}

// 10. Two replicate runs with one seed give byte-identical CSV files.
fn determinism(a: &Path, b: &Path) -> Outcome {
    let mut names: Vec<String> = std::fs::read_dir(a)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(a.join(n)).ok() != std::fs::read(b.join(n)).ok())
        .collect();
    gated(
        !names.is_empty() && differing.is_empty(),
        format!("{} CSV files compared, {} differ {:?}", names.len(), differing.len(), differing),
    )
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n: u32| selected.is_empty() || selected.contains(&n);
    let names = [
        "solver equivalence",
        "identification collapse",
        "gradient fidelity",
        "LM_o size",
        "Wald fragility",
        "chi-square mixture oracle",
        "two-step structure",
        "monotone nesting",
        "table replication (reported, not gated)",
        "determinism",
    ];
    let mut results: BTreeMap<u32, Outcome> = BTreeMap::new();
    let mut report = |n: u32, o: Outcome| {
        let tag = match (o.pass, o.gated) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "MISS",
        };
        println!("criterion {n:>2} [{tag}] {}: {}", names[n as usize - 1], o.detail);
        results.insert(n, o);
    };
    let singles: [(u32, fn() -> Outcome); 5] = [
        (1, solver_equivalence),
        (2, identification_collapse),
        (3, gradient_fidelity),
        (4, lm_size),
        (6, mixture_oracle),
    ];
    for (n, f) in singles {
        if want(n) {
            report(n, f());
        }
    }
    if want(7) || want(8) {
        let (seven, eight) = two_step_and_nesting();
        if want(7) {
            report(7, seven);
        }
        if want(8) {
            report(8, eight);
        }
    }
    if want(9) || want(10) {
        let dir = tempfile::tempdir().expect("temp dir");
        let (a, b) = (dir.path().join("first"), dir.path().join("second"));
        match run_replicate(&a) {
            Err(e) => {
                for n in [9, 10] {
                    if want(n) {
                        report(n, gated(false, format!("replicate failed: {e}")));
                    }
                }
            }
            Ok(()) => {
                if want(9) {
                    report(9, replication(&a));
                }
                if want(10) {
                    let o = match run_replicate(&b) {
                        Ok(()) => determinism(&a, &b),
                        Err(e) => gated(false, format!("second replicate failed: {e}")),
                    };
                    report(10, o);
                }
            }
        }
    }
    if want(5) {
        report(5, wald_fragility());
    }
    let failed: Vec<u32> = results.iter().filter(|(_, o)| o.gated && !o.pass).map(|(n, _)| *n).collect();
    println!(
        "acceptance: {} of {} gated criteria passed{}",
        results.values().filter(|o| o.gated && o.pass).count(),
        results.values().filter(|o| o.gated).count(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
