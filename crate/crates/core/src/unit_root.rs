//! Augmented Dickey–Fuller and Phillips–Perron unit-root tests.
//!
//! Both tests regress `Δy_t` on `y_{t-1}` plus deterministic terms (and, for
//! ADF, lagged differences) and report the t-ratio of the `y_{t-1}`
//! coefficient. Phillips–Perron corrects that t-ratio with a Bartlett-kernel
//! long-run variance of the residuals instead of adding lags. P-values come
//! from MacKinnon's asymptotic response surfaces; critical values use his
//! finite-sample surfaces.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{difference_series, PricePanel};
use crate::dist::normal_cdf;
use crate::error::{Error, Result};
use crate::linalg::LeastSquares;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Deterministic {
    None,
    Constant,
    ConstantTrend,
}

impl Deterministic {
    pub fn n_terms(self) -> usize {
        match self {
            Deterministic::None => 0,
            Deterministic::Constant => 1,
            Deterministic::ConstantTrend => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Adf,
    Pp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LagCriterion {
    Aic,
    Sc,
    /// Use exactly `max_lag` lagged differences.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bandwidth {
    /// `floor(4 (T/100)^{2/9})`.
    NeweyWest,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub method: Method,
    pub spec: Deterministic,
    /// t-ratio (ADF) or corrected t-ratio (PP) for the lagged level.
    pub statistic: f64,
    pub p_value: f64,
    /// Lag count for ADF, kernel bandwidth for PP.
    pub lags_or_bandwidth: usize,
    pub n_effective: usize,
    /// Estimated coefficient on the lagged level.
    pub coefficient: f64,
    /// Finite-sample critical values at 1%, 5% and 10%.
    pub critical_values: [f64; 3],
}

impl UnitRootResult {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

fn validate(y: &[f64]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("series contains non-finite values".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len().max(1) as f64;
    if y.iter().all(|&v| v == mean) {
        return Err(Error::Degenerate("series is constant".into()));
    }
    Ok(())
}

/// Regressors for `Δy_t`, t in `start..n`, with `lags` lagged differences.
/// Column 0 is `y_{t-1}`.
fn dickey_fuller_design(
    y: &[f64],
    lags: usize,
    start: usize,
    spec: Deterministic,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = y.len();
    let rows = n - start;
    let cols = 1 + lags + spec.n_terms();
    let mut x = DMatrix::zeros(rows, cols);
    let mut dep = DMatrix::zeros(rows, 1);
    for (r, t) in (start..n).enumerate() {
        dep[(r, 0)] = y[t] - y[t - 1];
        x[(r, 0)] = y[t - 1];
        for j in 1..=lags {
            x[(r, j)] = y[t - j] - y[t - j - 1];
        }
        let mut c = 1 + lags;
        if spec != Deterministic::None {
            x[(r, c)] = 1.0;
            c += 1;
        }
        if spec == Deterministic::ConstantTrend {
            x[(r, c)] = t as f64;
        }
    }
    (dep, x)
}

struct DfFit {
    coef: f64,
    se: f64,
    ssr: f64,
    nobs: usize,
    n_regressors: usize,
    resid: DVector<f64>,
}

fn fit_df(y: &[f64], lags: usize, start: usize, spec: Deterministic) -> Result<DfFit> {
    let (dep, x) = dickey_fuller_design(y, lags, start, spec);
    let (nobs, m) = x.shape();
    if nobs <= m {
        return Err(Error::InsufficientData {
            needed: m,
            available: nobs,
        });
    }
    let ls = LeastSquares::fit(&dep, &x)?;
    let resid = ls.resid.column(0).into_owned();
    let ssr = resid.norm_squared();
    let scale = dep.column(0).norm_squared().max(1.0);
    if ssr <= 1e-26 * scale {
        return Err(Error::Degenerate("regression fits exactly; residual variance is zero".into()));
    }
    let s2 = ssr / (nobs - m) as f64;
    Ok(DfFit {
        coef: ls.coef[(0, 0)],
        se: (s2 * ls.xtx_inv[(0, 0)]).sqrt(),
        ssr,
        nobs,
        n_regressors: m,
        resid,
    })
}

/// Augmented Dickey–Fuller test.
///
/// Lag selection compares every `k` in `0..=max_lag` on the common sample
/// that drops the first `max_lag + 1` observations; ties go to the smaller
/// `k`. The reported statistic is then re-estimated on the longest sample
/// available for the chosen `k`.
pub fn adf_test(
    y: &[f64],
    spec: Deterministic,
    max_lag: usize,
    criterion: LagCriterion,
) -> Result<UnitRootResult> {
    let n = y.len();
    let needed = max_lag + 2 + spec.n_terms();
    if n <= needed + 1 {
        return Err(Error::InsufficientData {
            needed: needed + 1,
            available: n,
        });
    }
    validate(y)?;
    let lags = match criterion {
        LagCriterion::Fixed => max_lag,
        LagCriterion::Aic | LagCriterion::Sc => {
            let start = max_lag + 1;
            let mut best = (f64::INFINITY, 0);
            for k in 0..=max_lag {
                let fit = fit_df(y, k, start, spec)?;
                let nobs = fit.nobs as f64;
                let penalty = match criterion {
                    LagCriterion::Aic => 2.0,
                    _ => nobs.ln(),
                };
                let ic = nobs * (fit.ssr / nobs).ln() + penalty * fit.n_regressors as f64;
                if ic < best.0 {
                    best = (ic, k);
                }
            }
            best.1
        }
    };
    let fit = fit_df(y, lags, lags + 1, spec)?;
    let statistic = fit.coef / fit.se;
    Ok(UnitRootResult {
        method: Method::Adf,
        spec,
        statistic,
        p_value: mackinnon_pvalue(statistic, spec),
        lags_or_bandwidth: lags,
        n_effective: fit.nobs,
        coefficient: fit.coef,
        critical_values: critical_values(spec, fit.nobs),
    })
}

/// Newey–West automatic bandwidth `floor(4 (T/100)^{2/9})`.
pub fn newey_west_bandwidth(nobs: usize) -> usize {
    (4.0 * (nobs as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Bartlett-kernel long-run variance
/// `γ_0 + 2 Σ_{j=1..L} (1 - j/(L+1)) γ_j` with `γ_j = Σ u_t u_{t-j} / n`.
pub fn bartlett_long_run_variance(u: &[f64], bandwidth: usize) -> f64 {
    let n = u.len();
    let gamma = |j: usize| -> f64 {
        u[j..].iter().zip(&u[..n - j]).map(|(a, b)| a * b).sum::<f64>() / n as f64
    };
    let mut lrv = gamma(0);
    for j in 1..=bandwidth.min(n.saturating_sub(1)) {
        let w = 1.0 - j as f64 / (bandwidth as f64 + 1.0);
        lrv += 2.0 * w * gamma(j);
    }
    lrv
}

/// Phillips–Perron Z-tau test.
pub fn pp_test(y: &[f64], spec: Deterministic, bandwidth: Bandwidth) -> Result<UnitRootResult> {
    if y.len() < 10 {
        return Err(Error::InsufficientData {
            needed: 9,
            available: y.len(),
        });
    }
    validate(y)?;
    let fit = fit_df(y, 0, 1, spec)?;
    let nobs = fit.nobs as f64;
    let bw = match bandwidth {
        Bandwidth::NeweyWest => newey_west_bandwidth(fit.nobs),
        Bandwidth::Fixed(l) => l,
    };
    let u: Vec<f64> = fit.resid.iter().copied().collect();
    let gamma0 = fit.ssr / nobs;
    let lrv = bartlett_long_run_variance(&u, bw);
    if lrv <= 0.0 {
        return Err(Error::Degenerate("non-positive long-run variance".into()));
    }
    let s = (fit.ssr / (fit.nobs - fit.n_regressors) as f64).sqrt();
    let t = fit.coef / fit.se;
    let statistic =
        t * (gamma0 / lrv).sqrt() - (lrv - gamma0) * nobs * fit.se / (2.0 * lrv.sqrt() * s);
    Ok(UnitRootResult {
        method: Method::Pp,
        spec,
        statistic,
        p_value: mackinnon_pvalue(statistic, spec),
        lags_or_bandwidth: bw,
        n_effective: fit.nobs,
        coefficient: fit.coef,
        critical_values: critical_values(spec, fit.nobs),
    })
}

// MacKinnon (1994) single-series response-surface coefficients. Below
// `TAU_STAR` the small-p polynomial applies, above it the large-p one.
// Coefficients are already rescaled.
struct PSurface {
    tau_star: f64,
    tau_min: f64,
    tau_max: f64,
    small: [f64; 3],
    large: [f64; 4],
}

const P_NONE: PSurface = PSurface {
    tau_star: -1.04,
    tau_min: -19.04,
    tau_max: f64::INFINITY,
    small: [0.6344, 1.2378, 3.2496e-2],
    large: [0.4797, 9.3557e-1, -0.6999e-1, 3.3066e-2],
};

const P_CONST: PSurface = PSurface {
    tau_star: -1.61,
    tau_min: -18.83,
    tau_max: 2.74,
    small: [2.1659, 1.4412, 3.8269e-2],
    large: [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2],
};

const P_TREND: PSurface = PSurface {
    tau_star: -2.89,
    tau_min: -16.18,
    tau_max: 0.7,
    small: [3.2512, 1.6047, 4.9588e-2],
    large: [2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2],
};

fn surface(spec: Deterministic) -> &'static PSurface {
    match spec {
        Deterministic::None => &P_NONE,
        Deterministic::Constant => &P_CONST,
        Deterministic::ConstantTrend => &P_TREND,
    }
}

fn poly(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Asymptotic Dickey–Fuller p-value for the given deterministic case.
///
/// The sample size does not enter: the response surfaces are the asymptotic
/// ones. Saturates at 0 and 1 outside the fitted range.
pub fn mackinnon_pvalue(statistic: f64, spec: Deterministic) -> f64 {
    let s = surface(spec);
    if statistic.is_nan() {
        return f64::NAN;
    }
    if statistic >= s.tau_max {
        return 1.0;
    }
    if statistic <= s.tau_min {
        return 0.0;
    }
    let z = if statistic <= s.tau_star {
        poly(&s.small, statistic)
    } else {
        poly(&s.large, statistic)
    };
    normal_cdf(z)
}

// MacKinnon (2010) finite-sample critical values at 1%, 5%, 10%:
// c0 + c1/T + c2/T^2 + c3/T^3.
const CRIT_NONE: [[f64; 4]; 3] = [
    [-2.56574, -2.2358, -3.627, 0.0],
    [-1.941, -0.2686, -3.365, 31.223],
    [-1.61682, 0.2656, -2.714, 25.364],
];
const CRIT_CONST: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.04],
    [-2.56677, -1.5384, -2.809, 0.0],
];
const CRIT_TREND: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.38],
];

/// Critical values at 1%, 5% and 10% for a regression with `nobs`
/// observations.
pub fn critical_values(spec: Deterministic, nobs: usize) -> [f64; 3] {
    let table = match spec {
        Deterministic::None => &CRIT_NONE,
        Deterministic::Constant => &CRIT_CONST,
        Deterministic::ConstantTrend => &CRIT_TREND,
    };
    let inv = 1.0 / nobs as f64;
    [poly(&table[0], inv), poly(&table[1], inv), poly(&table[2], inv)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegrationOrder {
    I0,
    I1,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationReport {
    pub name: String,
    pub adf_level: UnitRootResult,
    pub pp_level: UnitRootResult,
    pub adf_diff: UnitRootResult,
    pub pp_diff: UnitRootResult,
    pub order: IntegrationOrder,
}

/// Classifies one series from its level and first-difference tests at 5%.
pub fn classify(
    adf_level: &UnitRootResult,
    pp_level: &UnitRootResult,
    adf_diff: &UnitRootResult,
    pp_diff: &UnitRootResult,
) -> IntegrationOrder {
    const LEVEL: f64 = 0.05;
    let level_rejects = [adf_level, pp_level].map(|r| r.rejects(LEVEL));
    let diff_rejects = [adf_diff, pp_diff].map(|r| r.rejects(LEVEL));
    if level_rejects.iter().all(|&r| r) {
        IntegrationOrder::I0
    } else if level_rejects.iter().all(|&r| !r) && diff_rejects.iter().all(|&r| r) {
        IntegrationOrder::I1
    } else {
        IntegrationOrder::Inconclusive
    }
}

/// ADF (AIC lags) and PP (automatic bandwidth) with an intercept on levels
/// and first differences of every series.
pub fn integration_order(panel: &PricePanel, max_lag: usize) -> Result<Vec<IntegrationReport>> {
    let spec = Deterministic::Constant;
    (0..panel.n_series())
        .map(|k| {
            let y = panel.series(k);
            let dy = difference_series(&y);
            let adf_level = adf_test(&y, spec, max_lag, LagCriterion::Aic)?;
            let pp_level = pp_test(&y, spec, Bandwidth::NeweyWest)?;
            let adf_diff = adf_test(&dy, spec, max_lag, LagCriterion::Aic)?;
            let pp_diff = pp_test(&dy, spec, Bandwidth::NeweyWest)?;
            let order = classify(&adf_level, &pp_level, &adf_diff, &pp_diff);
            Ok(IntegrationReport {
                name: panel.names()[k].clone(),
                adf_level,
                pp_level,
                adf_diff,
                pp_diff,
                order,
            })
        })
        .collect()
}
