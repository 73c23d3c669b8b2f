//! Vector error-correction models at a given cointegration rank.
//!
//! β comes from the leading eigenvectors of the Johansen problem and is
//! normalised on pivot variables (`c'β = I`). Given β, the adjustment
//! coefficients α, the short-run matrices Γ_i, unrestricted deterministics
//! and dummy coefficients are the least-squares fit of Δy_t on the
//! error-correction term and the short-run regressors, which is also their
//! maximum-likelihood estimate.
//!
//! Standard errors of the free entries ψ of the normalised β use the
//! likelihood-based asymptotic covariance
//! `Var(vec ψ) = (α' Ω^{-1} α)^{-1} ⊗ (c⊥' Σ_t R1_t R1_t' c⊥)^{-1}`,
//! where `R1` are the concentrated lagged levels and Ω the ML residual
//! covariance.

mod granger;
mod restrict;

use nalgebra::DMatrix;

use crate::data::{DummyMatrix, PricePanel, YearMonth};
use crate::error::{Error, Result};
use crate::johansen::{johansen_from_data, EcmData, JohansenCase, JohansenResult};
use crate::linalg::{hstack, inverse_spd, log_det_spd, partial_out, LeastSquares};
use crate::var::{EquationStats, SystemStats};

pub use granger::{granger_wald, GrangerResult, GrangerRow};
pub use restrict::{
    joint_lop_test, pairwise_lop, restriction_lr_from_moments, restriction_lr_test,
    weak_exogeneity_from_moments, weak_exogeneity_test, Entry, LopPair, PairwiseLop,
    RestrictionResult, RestrictionSpec, SwitchingOptions,
};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Data and deterministic specification shared by the VECM estimators and
/// tests.
#[derive(Debug, Clone, Copy)]
pub struct VecmSetup<'a> {
    pub panel: &'a PricePanel,
    /// Number of lagged differences (VAR order minus one).
    pub lags: usize,
    pub case: JohansenCase,
    pub dummies: &'a DummyMatrix,
}

impl<'a> VecmSetup<'a> {
    pub fn new(
        panel: &'a PricePanel,
        lags: usize,
        case: JohansenCase,
        dummies: &'a DummyMatrix,
    ) -> Self {
        Self {
            panel,
            lags,
            case,
            dummies,
        }
    }

    pub fn ecm_data(&self) -> Result<EcmData> {
        EcmData::build(self.panel, self.lags + 1, self.case, self.dummies)
    }

    pub fn johansen(&self) -> Result<JohansenResult> {
        johansen_from_data(&self.ecm_data()?, self.panel.names().to_vec())
    }

    pub fn n_series(&self) -> usize {
        self.panel.n_series()
    }

    pub(crate) fn check_rank(&self, r: usize) -> Result<()> {
        let k = self.n_series();
        if r == 0 || r >= k {
            return Err(Error::InvalidArgument(format!(
                "cointegration rank must be in 1..={}, got {r}",
                k.saturating_sub(1)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VecmModel {
    pub rank: usize,
    pub lags: usize,
    pub case: JohansenCase,
    pub names: Vec<String>,
    /// Row labels of β: series names then restricted deterministic terms.
    pub level_names: Vec<String>,
    /// Pivot row of each cointegration vector.
    pub pivots: Vec<usize>,
    /// K1×r, pivot entries equal to 1.
    pub beta: DMatrix<f64>,
    /// Standard errors of β (zero on the normalised entries).
    pub beta_se: DMatrix<f64>,
    pub beta_t: DMatrix<f64>,
    /// K×r adjustment coefficients.
    pub alpha: DMatrix<f64>,
    pub alpha_se: DMatrix<f64>,
    pub alpha_t: DMatrix<f64>,
    /// Γ_1..Γ_{k-1}; row = equation, column = lagged differenced variable.
    pub gamma: Vec<DMatrix<f64>>,
    /// Regressor labels of the equation tables: `ECT1..`, lagged
    /// differences, unrestricted deterministics, dummies.
    pub regressor_names: Vec<String>,
    /// m×K coefficient table (one column per equation).
    pub coef: DMatrix<f64>,
    pub std_errors: DMatrix<f64>,
    pub t_stats: DMatrix<f64>,
    /// Implied intercept of the relations when the constant is
    /// unrestricted: the least-squares projection `(α'α)^{-1} α' μ` of the
    /// equation constants on α.
    pub ce_constant: Option<Vec<f64>>,
    pub resid: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub sigma_ml: DMatrix<f64>,
    pub equations: Vec<EquationStats>,
    pub system: SystemStats,
    /// Error-correction terms β' ȳ_{t-1}, T_eff×r.
    pub ect: DMatrix<f64>,
    /// Month of each row of `ect`, `resid`.
    pub dates: Vec<YearMonth>,
    pub n_eff: usize,
    pub johansen: JohansenResult,
    pub(crate) xtx_inv: DMatrix<f64>,
    pub(crate) levels: DMatrix<f64>,
}

impl VecmModel {
    pub fn n_series(&self) -> usize {
        self.names.len()
    }

    /// Π = αβ' restricted to the level columns (K×K).
    pub fn pi(&self) -> DMatrix<f64> {
        let k = self.n_series();
        &self.alpha * self.beta.rows(0, k).transpose()
    }

    /// Levels VAR(k) coefficient matrices implied by the fitted model.
    pub fn to_levels_var(&self) -> Vec<DMatrix<f64>> {
        vecm_to_var(&self.pi(), &self.gamma)
    }

    /// Row index in [`VecmModel::coef`] of the lag-`l` difference of
    /// variable `v` (l in 1..=lags).
    pub fn short_run_row(&self, v: usize, l: usize) -> usize {
        self.rank + v * self.lags + (l - 1)
    }

    /// Recomputes β' ȳ_{t-1} from the stored β and lagged levels.
    pub fn recompute_ect(&self) -> DMatrix<f64> {
        &self.levels * &self.beta
    }
}

/// Levels VAR matrices from (Π, Γ_1..Γ_{k-1}):
/// `π_1 = I + Π + Γ_1`, `π_i = Γ_i - Γ_{i-1}`, `π_k = -Γ_{k-1}`.
pub fn vecm_to_var(pi: &DMatrix<f64>, gamma: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let k = pi.nrows();
    let p = gamma.len() + 1;
    let eye = DMatrix::<f64>::identity(k, k);
    (1..=p)
        .map(|i| {
            let cur = if i <= gamma.len() {
                gamma[i - 1].clone()
            } else {
                DMatrix::zeros(k, k)
            };
            if i == 1 {
                &eye + pi + cur
            } else {
                cur - &gamma[i - 2]
            }
        })
        .collect()
}

/// Error-correction form of a levels VAR: `Π = -(I - Σ π_i)`,
/// `Γ_i = -Σ_{j>i} π_j`.
pub fn var_to_vecm(pis: &[DMatrix<f64>]) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    let k = pis.first().map_or(0, |a| a.nrows());
    let mut pi = -DMatrix::<f64>::identity(k, k);
    for a in pis {
        pi += a;
    }
    let gamma = (1..pis.len())
        .map(|i| {
            let mut g = DMatrix::zeros(k, k);
            for a in &pis[i..] {
                g -= a;
            }
            g
        })
        .collect();
    (pi, gamma)
}

/// Scales raw cointegration vectors so that the rows `pivots` form the
/// identity (`β (c'β)^{-1}`); for a single vector this divides by the pivot
/// coefficient.
pub fn normalize_beta(beta: &DMatrix<f64>, pivots: &[usize]) -> Result<DMatrix<f64>> {
    let r = beta.ncols();
    if pivots.len() != r {
        return Err(Error::InvalidArgument(format!(
            "{} pivots for {r} cointegration vectors",
            pivots.len()
        )));
    }
    if let Some(&p) = pivots.iter().find(|&&p| p >= beta.nrows()) {
        return Err(Error::InvalidArgument(format!("pivot {p} out of range")));
    }
    let block = DMatrix::from_fn(r, r, |i, j| beta[(pivots[i], j)]);
    let scale = beta.amax();
    let det = block.determinant();
    if scale == 0.0 || det.abs() <= 1e-12 * scale.powi(r as i32) {
        return Err(Error::InvalidArgument(
            "pivot coefficient is zero; choose another variable".into(),
        ));
    }
    let inv = block
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("pivot coefficient is zero; choose another variable".into()))?;
    let mut out = beta * inv;
    for (j, &p) in pivots.iter().enumerate() {
        for i in 0..r {
            out[(p, i)] = if i == j { 1.0 } else { 0.0 };
        }
    }
    Ok(out)
}

/// Renders the long-run relation of vector `j` solved for its pivot, e.g.
/// `MW = -1.9085*NE + 1.1484*SO + 1.7319*WE + 0.0477`.
pub fn long_run_equation(
    beta: &DMatrix<f64>,
    level_names: &[String],
    vector: usize,
    pivot: usize,
    constant: Option<f64>,
) -> String {
    let p = beta[(pivot, vector)];
    let mut out = format!("{} =", level_names[pivot]);
    let mut first = true;
    let mut term = |coef: f64, name: Option<&str>, out: &mut String| {
        let sign = if coef < 0.0 { '-' } else { '+' };
        let body = match name {
            Some(n) => format!("{:.4}*{}", coef.abs(), n),
            None => format!("{:.4}", coef.abs()),
        };
        if first {
            if coef < 0.0 {
                out.push_str(&format!(" -{body}"));
            } else {
                out.push_str(&format!(" {body}"));
            }
            first = false;
        } else {
            out.push_str(&format!(" {sign} {body}"));
        }
    };
    for (i, name) in level_names.iter().enumerate() {
        if i == pivot {
            continue;
        }
        let c = -beta[(i, vector)] / p;
        if name == "C" {
            term(c, None, &mut out);
        } else {
            term(c, Some(name), &mut out);
        }
    }
    if let Some(c) = constant {
        term(-c / p, None, &mut out);
    }
    out
}

/// Fits a VECM with the default pivots (the first r series).
pub fn fit_vecm(
    panel: &PricePanel,
    lags: usize,
    r: usize,
    case: JohansenCase,
    dummies: &DummyMatrix,
) -> Result<VecmModel> {
    let setup = VecmSetup::new(panel, lags, case, dummies);
    setup.check_rank(r)?;
    let pivots: Vec<usize> = (0..r).collect();
    fit_vecm_with_pivots(&setup, r, &pivots)
}

/// As [`fit_vecm`] with explicit pivots. Rank K is accepted here and gives
/// the unrestricted VAR in error-correction form.
pub fn fit_vecm_with_pivots(setup: &VecmSetup, r: usize, pivots: &[usize]) -> Result<VecmModel> {
    if r == 0 || r > setup.n_series() {
        return Err(Error::InvalidArgument(format!(
            "cointegration rank must be in 1..={}, got {r}",
            setup.n_series()
        )));
    }
    if setup.lags == 0 {
        return Err(Error::InvalidArgument(
            "a VECM needs at least one lagged difference (VAR order ≥ 2)".into(),
        ));
    }
    if pivots.iter().any(|&p| p >= setup.n_series()) {
        return Err(Error::InvalidArgument("pivot must index a series".into()));
    }
    let data = setup.ecm_data()?;
    let johansen = johansen_from_data(&data, setup.panel.names().to_vec())?;
    let beta = normalize_beta(&johansen.beta(r), pivots)?;
    fit_given_beta(setup, data, johansen, beta, pivots.to_vec())
}

fn fit_given_beta(
    setup: &VecmSetup,
    data: EcmData,
    johansen: JohansenResult,
    beta: DMatrix<f64>,
    pivots: Vec<usize>,
) -> Result<VecmModel> {
    let r = beta.ncols();
    let k = data.n_series();
    let lags = setup.lags;
    let ect = &data.levels * &beta;
    let x = hstack(&[&ect, &data.short_run]);
    let (n, m) = x.shape();
    if n <= m {
        return Err(Error::InsufficientData {
            needed: m,
            available: n,
        });
    }
    let ls = LeastSquares::fit(&data.dy, &x)?;
    let nf = n as f64;
    let df = (n - m) as f64;
    let resid = ls.resid;
    let sigma_ml = resid.transpose() * &resid / nf;
    let sigma = &sigma_ml * (nf / df);

    let mut std_errors = DMatrix::zeros(m, k);
    let mut equations = Vec::with_capacity(k);
    for e in 0..k {
        let ssr = resid.column(e).norm_squared();
        let s2 = ssr / df;
        for i in 0..m {
            std_errors[(i, e)] = (s2 * ls.xtx_inv[(i, i)]).sqrt();
        }
        let yc = data.dy.column(e);
        let mean = yc.mean();
        let sst: f64 = yc.iter().map(|v| (v - mean).powi(2)).sum();
        let log_lik = -0.5 * nf * (1.0 + LN_2PI + (ssr / nf).ln());
        equations.push(EquationStats {
            ssr,
            r2: 1.0 - ssr / sst,
            adj_r2: 1.0 - (ssr / df) / (sst / (nf - 1.0)),
            log_lik,
            aic: -2.0 * log_lik / nf + 2.0 * m as f64 / nf,
            sc: -2.0 * log_lik / nf + m as f64 * nf.ln() / nf,
        });
    }
    let t_stats = ls.coef.component_div(&std_errors);
    let alpha = ls.coef.rows(0, r).transpose();
    let alpha_se = std_errors.rows(0, r).transpose();
    let alpha_t = t_stats.rows(0, r).transpose();
    let gamma = (1..=lags)
        .map(|l| DMatrix::from_fn(k, k, |eq, v| ls.coef[(r + v * lags + (l - 1), eq)]))
        .collect();

    // β standard errors.
    let k1 = beta.nrows();
    let free_rows: Vec<usize> = (0..k1).filter(|i| !pivots.contains(i)).collect();
    let r1 = partial_out(&data.levels, &data.short_run)?;
    let mut beta_se = DMatrix::zeros(k1, r);
    if !free_rows.is_empty() {
        let r1c = r1.select_columns(&free_rows);
        let b_inv = inverse_spd(&(r1c.transpose() * &r1c), "concentrated level moments")?;
        let omega_inv = inverse_spd(&sigma_ml, "residual covariance")?;
        let a_inv = inverse_spd(&(alpha.transpose() * omega_inv * &alpha), "α'Ω⁻¹α")?;
        for (fi, &row) in free_rows.iter().enumerate() {
            for j in 0..r {
                beta_se[(row, j)] = (a_inv[(j, j)] * b_inv[(fi, fi)]).sqrt();
            }
        }
    }
    let beta_t = DMatrix::from_fn(k1, r, |i, j| {
        if beta_se[(i, j)] > 0.0 {
            beta[(i, j)] / beta_se[(i, j)]
        } else {
            f64::NAN
        }
    });

    let ce_constant = match data.short_run_names.iter().position(|n| n == "C") {
        Some(c_row) => {
            let mu = ls.coef.row(r + c_row).transpose();
            let ata = alpha.transpose() * &alpha;
            ata.try_inverse()
                .map(|inv| (inv * alpha.transpose() * mu).iter().copied().collect())
        }
        _ => None,
    };

    let mut regressor_names: Vec<String> = (1..=r).map(|j| format!("ECT{j}")).collect();
    regressor_names.extend(data.short_run_names.iter().cloned());
    let log_det = log_det_spd(&sigma_ml, "residual covariance")?;
    let mut system = SystemStats::from_log_det(log_det, n, k, m);
    // Criteria also charge for the free entries of β.
    let extra = (r * (k1 - r)) as f64;
    system.aic += 2.0 * extra / nf;
    system.sc += extra * nf.ln() / nf;
    system.hq += 2.0 * extra * nf.ln().ln() / nf;
    let dates = setup.panel.dates()[data.first_row..].to_vec();

    Ok(VecmModel {
        rank: r,
        lags,
        case: data.case,
        names: setup.panel.names().to_vec(),
        level_names: data.level_names.clone(),
        pivots,
        beta,
        beta_se,
        beta_t,
        alpha,
        alpha_se,
        alpha_t,
        gamma,
        regressor_names,
        coef: ls.coef,
        std_errors,
        t_stats,
        ce_constant,
        resid,
        sigma,
        sigma_ml,
        equations,
        system,
        ect,
        dates,
        n_eff: n,
        johansen,
        xtx_inv: ls.xtx_inv,
        levels: data.levels,
    })
}

/// Error-correction terms of a fitted model, one column per relation, with
/// their dates.
pub fn ect_series(model: &VecmModel) -> (Vec<YearMonth>, DMatrix<f64>) {
    (model.dates.clone(), model.ect.clone())
}
