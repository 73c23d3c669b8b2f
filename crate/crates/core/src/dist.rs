//! Tail probabilities of the reference distributions used by the tests.

use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, FisherSnedecor, Gamma, Normal};

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).map(|n| n.cdf(x)).unwrap_or(f64::NAN)
}

/// Upper tail of a chi-square with `df` degrees of freedom.
pub fn chi2_sf(stat: f64, df: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df)
        .map(|d| d.sf(stat).clamp(0.0, 1.0))
        .unwrap_or(f64::NAN)
}

pub fn f_sf(stat: f64, df1: f64, df2: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    FisherSnedecor::new(df1, df2)
        .map(|d| d.sf(stat).clamp(0.0, 1.0))
        .unwrap_or(f64::NAN)
}

/// Upper tail of the gamma distribution matched to the given mean and variance.
pub fn gamma_sf_moments(stat: f64, mean: f64, var: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    let shape = mean * mean / var;
    let rate = mean / var;
    Gamma::new(shape, rate)
        .map(|d| d.sf(stat).clamp(0.0, 1.0))
        .unwrap_or(f64::NAN)
}

/// Upper quantile of a chi-square distribution.
pub fn chi2_critical(level: f64, df: f64) -> f64 {
    ChiSquared::new(df)
        .map(|d| polish_quantile(&d, 1.0 - level))
        .unwrap_or(f64::NAN)
}

/// Quantile of a continuous distribution on the positive half-line. The
/// statrs search stops at about 1e-4; a few Newton steps on the CDF bring
/// it to machine precision.
pub fn polish_quantile<D>(dist: &D, p: f64) -> f64
where
    D: ContinuousCDF<f64, f64> + Continuous<f64, f64>,
{
    let mut x = dist.inverse_cdf(p);
    for _ in 0..20 {
        let density = dist.pdf(x);
        if density.is_nan() || density <= 0.0 {
            break;
        }
        let step = (dist.cdf(x) - p) / density;
        let next = (x - step).max(x / 2.0);
        if (next - x).abs() <= 1e-14 * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    x
}
