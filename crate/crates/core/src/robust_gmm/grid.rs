use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::compass_search;
use crate::robust_gmm::chi2mix::{a_of_gamma, chi2_quantile, chi2mix_quantile, gamma_of_a};
use crate::robust_gmm::moments::{cugmm_objective, point_statistics, CueEstimate, MomentProblem};

/// Evenly spaced values `start + i step`, `i < count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Axis {
    /// Axis from `lo` to `hi` inclusive.
    pub fn span(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
            return Err(Error::Config(format!("bad grid axis {lo}:{hi}:{step}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Ok(Self { start: lo, step, count })
    }

    /// Values rounded to 12 decimals so `0.01 * 7` prints as `0.07`.
    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }

    pub fn last(&self) -> f64 {
        *self.values().last().expect("count >= 1")
    }
}

/// Rectangular grid over two parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub axes: [Axis; 2],
}

impl GridSpec {
    pub fn new(first: Axis, second: Axis) -> Self {
        Self { axes: [first, second] }
    }

    /// `m_bar` in `0.01..0.99` and `gamma` in `0.01..10`, both by 0.01.
    pub fn paper() -> Self {
        Self::new(
            Axis::span(0.01, 0.99, 0.01).expect("valid"),
            Axis::span(0.01, 10.0, 0.01).expect("valid"),
        )
    }

    /// `m_bar` in `0..1` and `gamma` in `0..10`, both by 0.1.
    pub fn appendix() -> Self {
        Self::new(Axis::span(0.0, 1.0, 0.1).expect("valid"), Axis::span(0.0, 10.0, 0.1).expect("valid"))
    }

    /// `m_bar` in `0.01..0.99` and `gamma` in `0.01..5`, both by 0.01.
    pub fn appendix_c() -> Self {
        Self::new(
            Axis::span(0.01, 0.99, 0.01).expect("valid"),
            Axis::span(0.01, 5.0, 0.01).expect("valid"),
        )
    }

    /// A preset name (`paper`, `appendix`, `appendix_c`) or
    /// `lo:hi:step, lo:hi:step`.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "paper" => return Ok(Self::paper()),
            "appendix" => return Ok(Self::appendix()),
            "appendix_c" => return Ok(Self::appendix_c()),
            _ => {}
        }
        let bad = || Error::Config(format!("bad grid `{text}`: expected a preset or lo:hi:step, lo:hi:step"));
        let axes: Vec<Axis> = text
            .split(',')
            .map(|part| {
                let v: Vec<f64> = part
                    .split(':')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad())?;
                match v[..] {
                    [lo, hi, step] => Axis::span(lo, hi, step),
                    _ => Err(bad()),
                }
            })
            .collect::<Result<_>>()?;
        match <[Axis; 2]>::try_from(axes) {
            Ok(axes) => Ok(Self { axes }),
            Err(_) => Err(bad()),
        }
    }

    pub fn len(&self) -> usize {
        self.axes[0].count * self.axes[1].count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points with the first parameter varying slowest.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let b = self.axes[1].values();
        self.axes[0]
            .values()
            .into_iter()
            .flat_map(|a| b.iter().map(move |v| [a, *v]))
            .collect()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ax = |a: &Axis| format!("{}:{}:{}", a.start, a.last(), a.step);
        write!(f, "{}, {}", ax(&self.axes[0]), ax(&self.axes[1]))
    }
}

/// Nominal level, minimum distortion and the implied weight `a(Gamma_min)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionCalibration {
    pub alpha: f64,
    pub gamma_min: f64,
    pub a_value: f64,
    /// Number of moments.
    pub k: usize,
    /// Dimension of the function of interest.
    pub p: usize,
}

impl DistortionCalibration {
    pub fn new(alpha: f64, gamma_min: f64, k: usize, p: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {alpha} outside (0, 1)")));
        }
        if !(gamma_min >= 0.0 && gamma_min < 1.0 - alpha) {
            return Err(Error::Config(format!(
                "gamma_min = {gamma_min} must lie in [0, 1 - alpha) = [0, {})",
                1.0 - alpha
            )));
        }
        let a_value = a_of_gamma(gamma_min, alpha, k, p)?;
        Ok(Self {
            alpha,
            gamma_min,
            a_value,
            k,
            p,
        })
    }

    /// `chi2_{p,1-alpha}`, the preliminary and non-robust threshold.
    pub fn chi2_critical(&self) -> Result<f64> {
        chi2_quantile(self.p, 1.0 - self.alpha)
    }

    /// `H^{-1}(1-alpha; a, k, p)` at the calibrated weight.
    pub fn robust_critical(&self) -> Result<f64> {
        chi2mix_quantile(self.a_value, self.k, self.p, 1.0 - self.alpha)
    }

    pub fn gamma_of(&self, a: f64) -> Result<f64> {
        gamma_of_a(a, self.alpha, self.k, self.p)
    }

    pub fn a_of(&self, gamma: f64) -> Result<f64> {
        a_of_gamma(gamma, self.alpha, self.k, self.p)
    }
}

/// Which set the two-step rule reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcsBranch {
    NonRobust,
    Robust,
}

impl fmt::Display for IcsBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IcsBranch::NonRobust => "CS_N",
            IcsBranch::Robust => "CS_R",
        })
    }
}

/// `K + a S <= crit` point by point; NaN statistics are never retained.
pub fn linear_combination_set(k: &[f64], s: &[f64], a: f64, crit: f64) -> Vec<bool> {
    k.iter().zip(s).map(|(k, s)| k + a * s <= crit).collect()
}

/// `Gamma_hat` and the never-nests flag.
///
/// `CS_P(Gamma)` excludes a point outside `CS_N` iff `K + a(Gamma) S > c`, so
/// nesting holds iff `a(Gamma)` exceeds `(c - K)/S` at every such point with
/// `K <= c`. The cutoff is `Gamma` of the largest of these ratios, floored at
/// `Gamma_min`. A point with `S = 0` and `K <= c` outside `CS_N` can never be
/// excluded; the cutoff is then capped at `1 - alpha`.
pub fn distortion_cutoff(
    k: &[f64],
    s: &[f64],
    in_nonrobust: &[bool],
    cal: &DistortionCalibration,
) -> Result<(f64, bool)> {
    let c = cal.chi2_critical()?;
    let mut a_star: f64 = 0.0;
    let mut binding = false;
    for ((k, s), inside) in k.iter().zip(s).zip(in_nonrobust) {
        if *inside || !(*k <= c) {
            continue;
        }
        if *s <= 0.0 {
            return Ok((1.0 - cal.alpha, true));
        }
        a_star = a_star.max((c - k) / s);
        binding = true;
    }
    if !binding || a_star < cal.a_value {
        return Ok((cal.gamma_min, false));
    }
    Ok((cal.gamma_of(a_star)?.max(cal.gamma_min), false))
}

/// One confidence-set family (the whole vector or a single parameter).
#[derive(Debug, Clone)]
pub struct SetResult {
    pub calibration: DistortionCalibration,
    pub robust_critical: f64,
    pub nonrobust_critical: f64,
    pub in_robust: Vec<bool>,
    pub in_nonrobust: Vec<bool>,
    /// Preliminary set at `Gamma_min`.
    pub in_preliminary: Vec<bool>,
    pub gamma_hat: f64,
    pub never_nests: bool,
    pub ics: IcsBranch,
    /// Coordinate-wise `[min, max]` of the retained points.
    pub robust_intervals: [Option<(f64, f64)>; 2],
    pub nonrobust_intervals: [Option<(f64, f64)>; 2],
}

fn projections(points: &[[f64; 2]], keep: &[bool]) -> [Option<(f64, f64)>; 2] {
    let mut out = [None, None];
    for (pt, _) in points.iter().zip(keep).filter(|(_, k)| **k) {
        for j in 0..2 {
            let v = pt[j];
            out[j] = Some(out[j].map_or((v, v), |(lo, hi): (f64, f64)| (lo.min(v), hi.max(v))));
        }
    }
    out
}

impl SetResult {
    pub fn build(points: &[[f64; 2]], k: &[f64], s: &[f64], w: &[f64], cal: DistortionCalibration) -> Result<Self> {
        let robust_critical = cal.robust_critical()?;
        let nonrobust_critical = cal.chi2_critical()?;
        let in_robust = linear_combination_set(k, s, cal.a_value, robust_critical);
        let in_preliminary = linear_combination_set(k, s, cal.a_value, nonrobust_critical);
        let in_nonrobust: Vec<bool> = w.iter().map(|w| *w <= nonrobust_critical).collect();
        let (gamma_hat, never_nests) = distortion_cutoff(k, s, &in_nonrobust, &cal)?;
        let nests = in_preliminary.iter().zip(&in_nonrobust).all(|(p, n)| !p || *n);
        let ics = if nests { IcsBranch::NonRobust } else { IcsBranch::Robust };
        Ok(Self {
            calibration: cal,
            robust_critical,
            nonrobust_critical,
            robust_intervals: projections(points, &in_robust),
            nonrobust_intervals: projections(points, &in_nonrobust),
            in_robust,
            in_nonrobust,
            in_preliminary,
            gamma_hat,
            never_nests,
            ics,
        })
    }

    /// Membership of the two-step set.
    pub fn two_step(&self) -> &[bool] {
        match self.ics {
            IcsBranch::NonRobust => &self.in_nonrobust,
            IcsBranch::Robust => &self.in_robust,
        }
    }
}

/// Statistics at one grid point; NaN where the model is not defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStats {
    pub s: f64,
    pub k: f64,
    pub k_single: [f64; 2],
    pub w: f64,
    pub w_single: [f64; 2],
}

impl GridStats {
    const UNDEFINED: Self = Self {
        s: f64::NAN,
        k: f64::NAN,
        k_single: [f64::NAN; 2],
        w: f64::NAN,
        w_single: [f64::NAN; 2],
    };
}

#[derive(Debug, Clone)]
pub struct TwoStepResult {
    pub param_names: Vec<String>,
    pub grid: GridSpec,
    pub points: Vec<[f64; 2]>,
    pub stats: Vec<GridStats>,
    /// Both parameters jointly.
    pub whole: SetResult,
    /// Each parameter on its own.
    pub per_param: [SetResult; 2],
    /// CUE point estimate and its GMM variance.
    pub estimate: CueEstimate,
    /// Grid points where the statistics could not be computed.
    pub inadmissible: usize,
    /// Points where the whole-vector `K` projection lost rank.
    pub rank_deficient: usize,
    pub warnings: Vec<String>,
}

/// Grid argmin of the CUE objective, polished by compass search inside the
/// neighbouring cells.
pub fn grid_estimate(problem: &MomentProblem, grid: &GridSpec, points: &[[f64; 2]], s: &[f64]) -> Result<CueEstimate> {
    let best = s
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Domain("CUE objective undefined on the whole grid".into()))?;
    let x0 = DVector::from_column_slice(&points[best]);
    let lower = DVector::from_fn(2, |j, _| (x0[j] - grid.axes[j].step).max(grid.axes[j].start));
    let upper = DVector::from_fn(2, |j, _| (x0[j] + grid.axes[j].step).min(grid.axes[j].last()));
    let step = grid.axes[0].step.min(grid.axes[1].step) * 0.5;
    let (x, _) = compass_search(
        |v: &DVector<f64>| cugmm_objective(problem, v.as_slice()).unwrap_or(f64::INFINITY),
        x0,
        step,
        step * 1e-4,
        &lower,
        &upper,
    );
    CueEstimate::at(problem, x)
}

/// Evaluates S, K and Wald on every grid point and builds the robust,
/// non-robust and two-step sets for the pair and for each parameter.
pub fn grid_invert(problem: &MomentProblem, grid: &GridSpec, alpha: f64, gamma_min: f64) -> Result<TwoStepResult> {
    if problem.n_params() != 2 {
        return Err(Error::Config(format!(
            "grid inversion needs two parameters, problem has {}",
            problem.n_params()
        )));
    }
    if grid.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    let k = problem.n_moments();
    let whole_cal = DistortionCalibration::new(alpha, gamma_min, k, 2)?;
    let single_cal = DistortionCalibration::new(alpha, gamma_min, k, 1)?;

    let points = grid.points();
    let evaluated: Vec<Option<(GridStats, usize, f64)>> = points
        .par_iter()
        .map(|pt| {
            point_statistics(problem, pt).ok().map(|st| {
                let g = GridStats {
                    s: st.s,
                    k: st.k,
                    k_single: [st.k_single[0], st.k_single[1]],
                    ..GridStats::UNDEFINED
                };
                (g, st.k_rank, st.ridge)
            })
        })
        .collect();
    let inadmissible = evaluated.iter().filter(|e| e.is_none()).count();
    let rank_deficient = evaluated.iter().flatten().filter(|e| e.1 < 2).count();
    let ridged = evaluated.iter().flatten().filter(|e| e.2 > 0.0).count();
    let mut stats: Vec<GridStats> = evaluated.iter().map(|e| e.map_or(GridStats::UNDEFINED, |e| e.0)).collect();

    let s: Vec<f64> = stats.iter().map(|g| g.s).collect();
    let estimate = grid_estimate(problem, grid, &points, &s)?;
    for (g, pt) in stats.iter_mut().zip(&points) {
        if g.s.is_finite() {
            g.w = estimate.wald(pt);
            g.w_single = [estimate.wald_single(pt, 0), estimate.wald_single(pt, 1)];
        }
    }

    let col = |f: &dyn Fn(&GridStats) -> f64| stats.iter().map(f).collect::<Vec<f64>>();
    let whole = SetResult::build(&points, &col(&|g| g.k), &s, &col(&|g| g.w), whole_cal)?;
    let per_param = [
        SetResult::build(&points, &col(&|g| g.k_single[0]), &s, &col(&|g| g.w_single[0]), single_cal)?,
        SetResult::build(&points, &col(&|g| g.k_single[1]), &s, &col(&|g| g.w_single[1]), single_cal)?,
    ];

    let mut warnings = Vec::new();
    if inadmissible > 0 {
        warnings.push(format!("{inadmissible} grid points where the statistics are undefined"));
    }
    if rank_deficient > 0 {
        warnings.push(format!("{rank_deficient} grid points with a rank-deficient K projection"));
    }
    if ridged > 0 {
        warnings.push(format!("{ridged} grid points needed a ridge on the moment covariance"));
    }
    warnings.extend(estimate.warning.clone());
    for (name, set) in std::iter::once(("joint", &whole)).chain(
        problem
            .param_names()
            .iter()
            .map(String::as_str)
            .zip(&per_param)
            .collect::<Vec<_>>(),
    ) {
        if set.never_nests {
            warnings.push(format!("{name}: preliminary set never nests in CS_N"));
        }
    }
    Ok(TwoStepResult {
        param_names: problem.param_names(),
        grid: grid.clone(),
        points,
        stats,
        whole,
        per_param,
        estimate,
        inadmissible,
        rank_deficient,
        warnings,
    })
}

/// Projection of `CS_P(Gamma)` and `CS_R(Gamma)` at any distortion, for
/// checking nesting and monotonicity.
pub fn sets_at_gamma(k: &[f64], s: &[f64], cal: &DistortionCalibration, gamma: f64) -> Result<(Vec<bool>, Vec<bool>)> {
    let a = cal.a_of(gamma)?;
    let prelim = linear_combination_set(k, s, a, cal.chi2_critical()?);
    let robust = linear_combination_set(k, s, a, chi2mix_quantile(a, cal.k, cal.p, 1.0 - cal.alpha)?);
    Ok((prelim, robust))
}

/// Matrix view of one statistic over the grid, first parameter by row.
pub fn as_matrix(grid: &GridSpec, values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(grid.axes[0].count, grid.axes[1].count, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robust_gmm::linear_iv::{simulate_linear_iv, LinearIvDesign};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn presets() {
        let p = GridSpec::paper();
        assert_eq!((p.axes[0].count, p.axes[1].count), (99, 1000));
        assert_eq!(p.axes[1].last(), 10.0);
        let a = GridSpec::appendix();
        assert_eq!((a.axes[0].count, a.axes[1].count), (11, 101));
        assert_eq!(a.axes[0].values()[3], 0.3);
        let c = GridSpec::appendix_c();
        assert_eq!(c.axes[1].last(), 5.0);
        assert_eq!(GridSpec::parse("appendix").unwrap(), a);
        let g = GridSpec::parse("0:1:0.25, 1:2:0.5").unwrap();
        assert_eq!(g.points().len(), 15);
        assert_eq!(GridSpec::parse(&g.to_string()).unwrap(), g);
        assert!(GridSpec::parse("0:1").is_err());
        assert!(GridSpec::parse("0:1:0.1").is_err());
    }

    #[test]
    fn calibration_validation() {
        assert!(DistortionCalibration::new(0.05, 0.96, 7, 1).is_err());
        assert!(DistortionCalibration::new(0.05, 0.95, 7, 1).is_err());
        let c = DistortionCalibration::new(0.05, 0.0, 7, 1).unwrap();
        assert_eq!(c.a_value, 0.0);
        assert!((c.robust_critical().unwrap() - c.chi2_critical().unwrap()).abs() < 1e-8);
    }

    #[test]
    fn cutoff_cases() {
        let cal = DistortionCalibration::new(0.05, 0.05, 4, 1).unwrap();
        let c = cal.chi2_critical().unwrap();
        // Every outside point already has K > c: nests at Gamma_min.
        let (g, never) = distortion_cutoff(&[c + 1.0, 0.5], &[5.0, 1.0], &[false, true], &cal).unwrap();
        assert_eq!((g, never), (0.05, false));
        // Outside point with small S forces a larger a.
        let (g, never) = distortion_cutoff(&[1.0], &[0.1], &[false], &cal).unwrap();
        let a_star = (c - 1.0) / 0.1;
        assert!(!never && (g - cal.gamma_of(a_star).unwrap()).abs() < 1e-12);
        assert!(g > 0.05);
        // At a slightly larger distortion the point is excluded.
        let (prelim, _) = sets_at_gamma(&[1.0], &[0.1], &cal, g + 1e-6).unwrap();
        assert!(!prelim[0]);
        // S = 0 outside CS_N never nests.
        let (g, never) = distortion_cutoff(&[1.0], &[0.0], &[false], &cal).unwrap();
        assert!(never && g == 0.95);
        // NaN statistics are ignored.
        let (g, _) = distortion_cutoff(&[f64::NAN], &[f64::NAN], &[false], &cal).unwrap();
        assert_eq!(g, 0.05);
    }

    fn small_grid() -> GridSpec {
        GridSpec::parse("0:2:0.05, 0:2:0.05").unwrap()
    }

    #[test]
    fn grid_inversion_on_strong_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = simulate_linear_iv(&LinearIvDesign::strong(), &mut rng);
        let r = grid_invert(&p, &small_grid(), 0.05, 0.05).unwrap();
        assert!((r.estimate.theta[0] - 1.0).abs() < 0.2 && (r.estimate.theta[1] - 1.0).abs() < 0.2);
        assert!(r.whole.gamma_hat >= 0.05);
        assert_eq!(r.whole.ics == IcsBranch::NonRobust, r.whole.gamma_hat == 0.05);
        for set in std::iter::once(&r.whole).chain(&r.per_param) {
            // Preliminary inside robust, projections cover retained points.
            assert!(set.in_preliminary.iter().zip(&set.in_robust).all(|(p, r)| !p || *r));
            for (pt, keep) in r.points.iter().zip(&set.in_robust) {
                if *keep {
                    for j in 0..2 {
                        let (lo, hi) = set.robust_intervals[j].unwrap();
                        assert!(pt[j] >= lo && pt[j] <= hi);
                    }
                }
            }
        }
        // Estimate polish stays within one cell of a grid point and improves on it.
        let s_min = r.stats.iter().map(|g| g.s).fold(f64::INFINITY, f64::min);
        assert!(r.estimate.objective * p.n_obs() as f64 <= s_min + 1e-12);
    }

    #[test]
    fn grid_inversion_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = simulate_linear_iv(&LinearIvDesign::weak(), &mut rng);
        let g = GridSpec::parse("-1:3:0.1, -1:3:0.1").unwrap();
        let a = grid_invert(&p, &g, 0.05, 0.05).unwrap();
        let b = grid_invert(&p, &g, 0.05, 0.05).unwrap();
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.whole.in_robust, b.whole.in_robust);
        assert_eq!(a.whole.gamma_hat, b.whole.gamma_hat);
    }

    #[test]
    fn monotone_nesting_on_a_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = simulate_linear_iv(&LinearIvDesign::weak(), &mut rng);
        let r = grid_invert(&p, &small_grid(), 0.1, 0.05).unwrap();
        let k: Vec<f64> = r.stats.iter().map(|g| g.k).collect();
        let s: Vec<f64> = r.stats.iter().map(|g| g.s).collect();
        let cal = r.whole.calibration;
        let mut prev: Option<Vec<bool>> = None;
        for gamma in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let (prelim, robust) = sets_at_gamma(&k, &s, &cal, gamma).unwrap();
            assert!(prelim.iter().zip(&robust).all(|(p, r)| !p || *r));
            if let Some(prev) = prev {
                assert!(prelim.iter().zip(&prev).all(|(now, before)| !now || *before));
            }
            prev = Some(prelim);
        }
    }

    #[test]
    fn needs_two_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let d = LinearIvDesign {
            n_params: 1,
            ..LinearIvDesign::strong()
        };
        let p = simulate_linear_iv(&d, &mut rng);
        assert!(grid_invert(&p, &small_grid(), 0.05, 0.05).is_err());
    }
}
