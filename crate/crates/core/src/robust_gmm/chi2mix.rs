//! Chi-square quantiles, the `(1+a) chi2_p + a chi2_{k-p}` mixture and the
//! distortion calibration `a <-> Gamma`.

use quadrature::double_exponential::integrate;
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};

use crate::error::{domain, Error, Result};
use crate::numerics::brent_root;

fn chi2(df: usize) -> Result<ChiSquared> {
    ChiSquared::new(df as f64).map_err(|e| domain(format!("chi-square with {df} df: {e}")))
}

fn check_prob(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("probability {q} outside (0, 1)")))
    }
}

pub fn chi2_cdf(df: usize, x: f64) -> Result<f64> {
    Ok(if x <= 0.0 { 0.0 } else { chi2(df)?.cdf(x) })
}

/// Quantile of `chi2_df`, polished by Brent's method on the CDF.
pub fn chi2_quantile(df: usize, q: f64) -> Result<f64> {
    check_prob(q)?;
    let d = chi2(df)?;
    let start = d.inverse_cdf(q);
    let (mut lo, mut hi) = (0.5 * start, 2.0 * start + 1.0);
    while d.cdf(lo) > q {
        lo *= 0.5;
    }
    while d.cdf(hi) < q {
        hi *= 2.0;
    }
    brent_root(|x| d.cdf(x) - q, lo, hi, 1e-13)
}

fn check_mix(a: f64, k: usize, p: usize) -> Result<()> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(domain(format!("mixture weight a = {a} must be finite and non-negative")));
    }
    if p == 0 || p > k {
        return Err(domain(format!("need 1 <= p <= k, got p = {p}, k = {k}")));
    }
    Ok(())
}

/// `H(x; a, k, p) = Pr((1+a) chi2_p + a chi2_{k-p} <= x)`.
///
/// Conditions on the second component `B = w^2` and integrates
/// `F_p((x - a w^2) / (1+a)) f_{k-p}(w^2) 2w` over `w` in `[0, sqrt(x/a)]`;
/// the substitution removes the `b^{-1/2}` singularity at one degree of freedom.
pub fn chi2mix_cdf(a: f64, k: usize, p: usize, x: f64) -> Result<f64> {
    check_mix(a, k, p)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let first = chi2(p)?;
    if a == 0.0 {
        return Ok(first.cdf(x));
    }
    if k == p {
        return Ok(first.cdf(x / (1.0 + a)));
    }
    let second = chi2(k - p)?;
    // Beyond this point the second component carries negligible mass.
    let tail = 2.0 * (k - p) as f64 + 90.0;
    let upper = (x / a).min(tail).sqrt();
    let out = integrate(
        |w| {
            let b = w * w;
            let arg = (x - a * b) / (1.0 + a);
            if arg <= 0.0 || b <= 0.0 {
                return 0.0;
            }
            first.cdf(arg) * second.pdf(b) * 2.0 * w
        },
        0.0,
        upper,
        1e-14,
    );
    Ok(out.integral.clamp(0.0, 1.0))
}

/// `H^{-1}(q; a, k, p)`, bracketed between the `chi2_p` and `chi2_k` quantiles
/// scaled by `1 + a`.
pub fn chi2mix_quantile(a: f64, k: usize, p: usize, q: f64) -> Result<f64> {
    check_mix(a, k, p)?;
    check_prob(q)?;
    if a == 0.0 {
        return chi2_quantile(p, q);
    }
    if k == p {
        return Ok((1.0 + a) * chi2_quantile(p, q)?);
    }
    let lo = (1.0 + a) * chi2_quantile(p, q)? * (1.0 - 1e-12);
    let hi = (1.0 + a) * chi2_quantile(k, q)? * (1.0 + 1e-12);
    let mut err = None;
    let root = brent_root(
        |x| match chi2mix_cdf(a, k, p, x) {
            Ok(v) => v - q,
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        lo,
        hi,
        1e-12,
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

/// `Gamma(a) = 1 - alpha - H(chi2_{p,1-alpha}; a, k, p)`: the coverage lost by
/// the preliminary set `K + a S <= chi2_{p,1-alpha}`.
pub fn gamma_of_a(a: f64, alpha: f64, k: usize, p: usize) -> Result<f64> {
    check_prob(alpha)?;
    let c = chi2_quantile(p, 1.0 - alpha)?;
    Ok((1.0 - alpha - chi2mix_cdf(a, k, p, c)?).max(0.0))
}

/// Inverse of [`gamma_of_a`]; `gamma` must lie in `[0, 1 - alpha)`.
pub fn a_of_gamma(gamma: f64, alpha: f64, k: usize, p: usize) -> Result<f64> {
    check_prob(alpha)?;
    check_mix(0.0, k, p)?;
    if !(gamma >= 0.0 && gamma < 1.0 - alpha) {
        return Err(Error::NoRoot(format!(
            "distortion {gamma} outside the achievable range [0, {})",
            1.0 - alpha
        )));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while gamma_of_a(hi, alpha, k, p)? < gamma {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::NoRoot(format!("distortion {gamma} not reached for a <= 1e15")));
        }
    }
    brent_root(|a| gamma_of_a(a, alpha, k, p).unwrap_or(f64::NAN) - gamma, 0.0, hi, 1e-13)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{ChiSquared as ChiDraw, Distribution};

    #[test]
    fn chi2_quantile_known_value() {
        assert!((chi2_quantile(1, 0.95).unwrap() - 3.841_458_820_694_124).abs() < 1e-10);
        assert!((chi2_quantile(2, 0.95).unwrap() - 5.991_464_547_107_979).abs() < 1e-10);
        assert!(chi2_quantile(1, 1.0).is_err());
    }

    #[test]
    fn zero_weight_is_chi2_p() {
        assert!((chi2mix_quantile(0.0, 7, 1, 0.95).unwrap() - 3.841_458_820_694_124).abs() < 1e-8);
        let x = 2.7;
        assert_eq!(chi2mix_cdf(0.0, 7, 2, x).unwrap(), chi2_cdf(2, x).unwrap());
    }

    #[test]
    fn exactly_identified_is_scaled_chi2() {
        let a = 0.4;
        for x in [0.5, 3.0, 9.0] {
            let want = chi2_cdf(2, x / 1.4).unwrap();
            assert!((chi2mix_cdf(a, 2, 2, x).unwrap() - want).abs() < 1e-14);
        }
        let q = chi2mix_quantile(a, 2, 2, 0.9).unwrap();
        assert!((q - 1.4 * chi2_quantile(2, 0.9).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn integral_matches_closed_form_at_small_weight() {
        // k - p = 2: B is exponential with mean 2, so
        // H = int_0^{x/a} F_1((x - a b)/(1+a)) e^{-b/2}/2 db; check against a
        // fine trapezoid rule.
        let (a, x) = (0.3, 4.0);
        let n = 200_000;
        let top = x / a;
        let h = top / n as f64;
        let f1 = chi2(1).unwrap();
        let g = |b: f64| f1.cdf(((x - a * b) / (1.0 + a)).max(0.0)) * (-b / 2.0).exp() / 2.0;
        let trap = h * ((1..n).map(|i| g(i as f64 * h)).sum::<f64>() + 0.5 * (g(0.0) + g(top)));
        assert!((chi2mix_cdf(a, 3, 1, x).unwrap() - trap).abs() < 1e-8);
    }

    #[test]
    fn cdf_agrees_with_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (a, k, p, x) in [(0.2, 7, 1, 4.0), (1.5, 4, 2, 12.0)] {
            let d1 = ChiDraw::new(p as f64).unwrap();
            let d2 = ChiDraw::new((k - p) as f64).unwrap();
            let n = 200_000;
            let hits = (0..n)
                .filter(|_| (1.0 + a) * d1.sample(&mut rng) + a * d2.sample(&mut rng) <= x)
                .count();
            let mc = hits as f64 / n as f64;
            assert!((chi2mix_cdf(a, k, p, x).unwrap() - mc).abs() < 5e-3, "a={a} k={k}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for (a, k, p) in [(0.05, 7, 1), (0.7, 7, 2), (3.0, 4, 1)] {
            let q = chi2mix_quantile(a, k, p, 0.95).unwrap();
            assert!((chi2mix_cdf(a, k, p, q).unwrap() - 0.95).abs() < 1e-8);
        }
    }

    #[test]
    fn calibration_limits_and_round_trip() {
        assert_eq!(gamma_of_a(0.0, 0.05, 7, 1).unwrap(), 0.0);
        assert!(gamma_of_a(1e6, 0.05, 7, 1).unwrap() > 0.95 - 1e-6);
        for k in [4, 7] {
            for g in [0.01, 0.05, 0.10] {
                let a = a_of_gamma(g, 0.05, k, 1).unwrap();
                assert!((gamma_of_a(a, 0.05, k, 1).unwrap() - g).abs() < 1e-6);
            }
        }
        assert!(a_of_gamma(0.95, 0.05, 7, 1).is_err());
        assert!(a_of_gamma(-0.1, 0.05, 7, 1).is_err());
    }

    #[test]
    fn invalid_mixture_arguments() {
        assert!(chi2mix_cdf(-1.0, 7, 1, 1.0).is_err());
        assert!(chi2mix_cdf(1.0, 2, 3, 1.0).is_err());
        assert!(chi2mix_cdf(1.0, 2, 0, 1.0).is_err());
        assert!(chi2mix_quantile(1.0, 7, 1, 0.0).is_err());
    }
}
