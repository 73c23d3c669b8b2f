//! Levels VAR(p) with deterministic terms and impulse dummies: estimation,
//! lag-order selection, residual diagnostics and companion-matrix stability.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{DummyMatrix, PricePanel};
use crate::dist::{chi2_sf, f_sf};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, hstack, log_det_spd, LeastSquares};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Deterministic regressors of a levels VAR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDeterministic {
    pub constant: bool,
    pub trend: bool,
}

impl VarDeterministic {
    pub const CONSTANT_TREND: Self = Self {
        constant: true,
        trend: true,
    };
    pub const CONSTANT: Self = Self {
        constant: true,
        trend: false,
    };
    pub const NONE: Self = Self {
        constant: false,
        trend: false,
    };

    pub fn n_terms(self) -> usize {
        self.constant as usize + self.trend as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationStats {
    pub ssr: f64,
    pub r2: f64,
    pub adj_r2: f64,
    pub log_lik: f64,
    pub aic: f64,
    pub sc: f64,
}

/// System fit statistics from the Gaussian likelihood with the ML residual
/// covariance (divisor T_eff). Information criteria are per observation:
/// `AIC = -2 logL / T + 2 n / T` with `n` the total coefficient count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemStats {
    pub log_lik: f64,
    pub aic: f64,
    pub sc: f64,
    pub hq: f64,
    pub fpe: f64,
    pub log_det_sigma_ml: f64,
}

impl SystemStats {
    pub fn from_log_det(log_det: f64, n_eff: usize, n_series: usize, per_eq: usize) -> Self {
        let t = n_eff as f64;
        let k = n_series as f64;
        let m = per_eq as f64;
        let log_lik = -0.5 * t * k * (1.0 + LN_2PI) - 0.5 * t * log_det;
        let n_params = k * m;
        let base = -2.0 * log_lik / t;
        Self {
            log_lik,
            aic: base + 2.0 * n_params / t,
            sc: base + n_params * t.ln() / t,
            hq: base + 2.0 * n_params * t.ln().ln() / t,
            fpe: log_det.exp() * ((t + m) / (t - m)).powf(k),
            log_det_sigma_ml: log_det,
        }
    }
}

/// Estimated VAR(p). Coefficient tables are m×K: one column per equation,
/// rows ordered as lags of each variable (variable-major), then constant,
/// trend and dummies.
#[derive(Debug, Clone)]
pub struct VarModel {
    pub order: usize,
    pub names: Vec<String>,
    pub regressor_names: Vec<String>,
    pub deterministic: VarDeterministic,
    pub coef: DMatrix<f64>,
    pub std_errors: DMatrix<f64>,
    pub t_stats: DMatrix<f64>,
    /// π_1..π_p, K×K each; row = equation, column = lagged variable.
    pub lag_matrices: Vec<DMatrix<f64>>,
    /// K×(deterministic + dummies) coefficients in regressor order.
    pub exogenous: DMatrix<f64>,
    pub resid: DMatrix<f64>,
    /// Residual covariance with divisor T_eff minus regressors per equation.
    pub sigma: DMatrix<f64>,
    pub sigma_ml: DMatrix<f64>,
    pub equations: Vec<EquationStats>,
    pub system: SystemStats,
    pub n_eff: usize,
    /// First panel row used as a left-hand-side observation.
    pub first_row: usize,
    pub(crate) design: DMatrix<f64>,
}

impl VarModel {
    pub fn n_series(&self) -> usize {
        self.names.len()
    }

    pub fn n_regressors(&self) -> usize {
        self.regressor_names.len()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }
}

fn var_design(
    panel: &PricePanel,
    p: usize,
    det: VarDeterministic,
    dummies: &DummyMatrix,
    first_row: usize,
) -> (DMatrix<f64>, DMatrix<f64>, Vec<String>) {
    let y = panel.values();
    let (t_all, k) = y.shape();
    let n = t_all - first_row;
    let d = dummies.n_dummies();
    let m = k * p + det.n_terms() + d;
    let mut x = DMatrix::zeros(n, m);
    let mut names = Vec::with_capacity(m);
    for v in 0..k {
        for l in 1..=p {
            names.push(format!("{}(-{l})", panel.names()[v]));
        }
    }
    if det.constant {
        names.push("C".into());
    }
    if det.trend {
        names.push("t".into());
    }
    names.extend(dummies.names.iter().cloned());
    for (r, t) in (first_row..t_all).enumerate() {
        let mut c = 0;
        for v in 0..k {
            for l in 1..=p {
                x[(r, c)] = y[(t - l, v)];
                c += 1;
            }
        }
        if det.constant {
            x[(r, c)] = 1.0;
            c += 1;
        }
        if det.trend {
            x[(r, c)] = (t + 1) as f64;
            c += 1;
        }
        for j in 0..d {
            x[(r, c + j)] = dummies.values[(t, j)];
        }
    }
    let lhs = y.rows(first_row, n).into_owned();
    (lhs, x, names)
}

fn check_dummies(panel: &PricePanel, dummies: &DummyMatrix) -> Result<()> {
    if dummies.values.nrows() != panel.n_obs() {
        return Err(Error::InvalidArgument(format!(
            "dummy matrix has {} rows, panel {}",
            dummies.values.nrows(),
            panel.n_obs()
        )));
    }
    Ok(())
}

/// Equation-by-equation least squares of a VAR(p) on the full available
/// sample (rows p+1..T).
pub fn fit_var(
    panel: &PricePanel,
    p: usize,
    det: VarDeterministic,
    dummies: &DummyMatrix,
) -> Result<VarModel> {
    fit_var_from(panel, p, det, dummies, p)
}

/// As [`fit_var`] but with the estimation sample starting at `first_row`
/// (≥ p), so models of different order can share a sample.
pub fn fit_var_from(
    panel: &PricePanel,
    p: usize,
    det: VarDeterministic,
    dummies: &DummyMatrix,
    first_row: usize,
) -> Result<VarModel> {
    check_dummies(panel, dummies)?;
    if first_row < p {
        return Err(Error::InvalidArgument("sample starts before the first usable row".into()));
    }
    let k = panel.n_series();
    let m = k * p + det.n_terms() + dummies.n_dummies();
    let n = panel.n_obs().saturating_sub(first_row);
    if n <= m {
        return Err(Error::InsufficientData {
            needed: m,
            available: n,
        });
    }
    let (lhs, x, regressor_names) = var_design(panel, p, det, dummies, first_row);
    let ls = LeastSquares::fit(&lhs, &x)?;
    let nf = n as f64;
    let df = (n - m) as f64;
    let resid = ls.resid;
    let sigma_ml = resid.transpose() * &resid / nf;
    let sigma = &sigma_ml * (nf / df);

    let mut std_errors = DMatrix::zeros(m, k);
    let mut equations = Vec::with_capacity(k);
    for e in 0..k {
        let u = resid.column(e);
        let ssr = u.norm_squared();
        let s2 = ssr / df;
        for i in 0..m {
            std_errors[(i, e)] = (s2 * ls.xtx_inv[(i, i)]).sqrt();
        }
        let yc = lhs.column(e);
        let mean = yc.mean();
        let sst: f64 = yc.iter().map(|v| (v - mean).powi(2)).sum();
        let r2 = 1.0 - ssr / sst;
        let adj_r2 = 1.0 - (ssr / df) / (sst / (nf - 1.0));
        let log_lik = -0.5 * nf * (1.0 + LN_2PI + (ssr / nf).ln());
        equations.push(EquationStats {
            ssr,
            r2,
            adj_r2,
            log_lik,
            aic: -2.0 * log_lik / nf + 2.0 * m as f64 / nf,
            sc: -2.0 * log_lik / nf + m as f64 * nf.ln() / nf,
        });
    }
    let t_stats = ls.coef.component_div(&std_errors);
    let lag_matrices = (0..p)
        .map(|l| DMatrix::from_fn(k, k, |eq, v| ls.coef[(v * p + l, eq)]))
        .collect();
    let n_exo = m - k * p;
    let exogenous = DMatrix::from_fn(k, n_exo, |eq, j| ls.coef[(k * p + j, eq)]);
    let log_det = log_det_spd(&sigma_ml, "residual covariance")?;
    Ok(VarModel {
        order: p,
        names: panel.names().to_vec(),
        regressor_names,
        deterministic: det,
        coef: ls.coef,
        std_errors,
        t_stats,
        lag_matrices,
        exogenous,
        resid,
        sigma,
        sigma_ml,
        equations,
        system: SystemStats::from_log_det(log_det, n, k, m),
        n_eff: n,
        first_row,
        design: x,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagRow {
    pub lag: usize,
    pub log_lik: f64,
    /// Sequential modified LR against lag - 1; absent for lag 0.
    pub lr: Option<f64>,
    pub lr_p: Option<f64>,
    pub fpe: f64,
    pub aic: f64,
    pub sc: f64,
    pub hq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedLags {
    pub lr: usize,
    pub fpe: usize,
    pub aic: usize,
    pub sc: usize,
    pub hq: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelectionTable {
    pub rows: Vec<LagRow>,
    pub selected: SelectedLags,
    pub n_eff: usize,
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, v) in values.enumerate() {
        if v < best.0 {
            best = (v, i);
        }
    }
    best.1
}

/// Fits lags 0..=max_lag on the common sample (rows max_lag+1..T).
///
/// The LR column is the sequential modified statistic
/// `(T - m) (ln|Σ_{ℓ-1}| - ln|Σ_ℓ|)`, m being the per-equation parameter
/// count at lag ℓ, compared against χ²(K²). The LR choice is the largest lag
/// whose test rejects at 5%, scanning down from `max_lag`.
pub fn lag_order_selection(
    panel: &PricePanel,
    max_lag: usize,
    det: VarDeterministic,
    dummies: &DummyMatrix,
) -> Result<LagSelectionTable> {
    let k = panel.n_series();
    let models = (0..=max_lag)
        .map(|p| fit_var_from(panel, p, det, dummies, max_lag))
        .collect::<Result<Vec<_>>>()?;
    let n_eff = models[0].n_eff;
    let t = n_eff as f64;
    let mut rows = Vec::with_capacity(models.len());
    for (p, model) in models.iter().enumerate() {
        let (lr, lr_p) = if p == 0 {
            (None, None)
        } else {
            let prev = &models[p - 1].system;
            let m = model.n_regressors() as f64;
            let stat = (t - m) * (prev.log_det_sigma_ml - model.system.log_det_sigma_ml);
            (Some(stat), Some(chi2_sf(stat, (k * k) as f64)))
        };
        rows.push(LagRow {
            lag: p,
            log_lik: model.system.log_lik,
            lr,
            lr_p,
            fpe: model.system.fpe,
            aic: model.system.aic,
            sc: model.system.sc,
            hq: model.system.hq,
        });
    }
    let lr_choice = rows
        .iter()
        .rev()
        .find(|r| r.lr_p.is_some_and(|p| p < 0.05))
        .map_or(0, |r| r.lag);
    let selected = SelectedLags {
        lr: lr_choice,
        fpe: argmin(rows.iter().map(|r| r.fpe)),
        aic: argmin(rows.iter().map(|r| r.aic)),
        sc: argmin(rows.iter().map(|r| r.sc)),
        hq: argmin(rows.iter().map(|r| r.hq)),
    };
    Ok(LagSelectionTable {
        rows,
        selected,
        n_eff,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialRow {
    pub lag: usize,
    pub lre: f64,
    pub df: usize,
    pub lre_p: f64,
    pub rao_f: f64,
    pub f_df: (f64, f64),
    pub rao_p: f64,
}

/// LM tests for residual autocorrelation at each single lag h = 1..=h_max.
///
/// For lag h the residuals are regressed on the original regressors and
/// their own h-th lag (pre-sample values set to zero). With Wilks'
/// Λ = |Σ_aux| / |Σ_resid| the Edgerton–Shukur LR statistic is
/// `-N ln Λ`, N = T - m - K - 1/2, and Rao's F uses the usual
/// `s = sqrt((K^2 q^2 - 4)/(K^2 + q^2 - 5))` correction with q = K.
pub fn lm_serial_test(model: &VarModel, h_max: usize) -> Result<Vec<SerialRow>> {
    if h_max == 0 {
        return Err(Error::InvalidArgument("h_max must be at least 1".into()));
    }
    let u = &model.resid;
    let (n, k) = u.shape();
    let m = model.n_regressors();
    let q = k;
    if n <= m + q + 1 {
        return Err(Error::InsufficientData {
            needed: m + q + 1,
            available: n,
        });
    }
    let nf = n as f64;
    let log_det_r = log_det_spd(&(u.transpose() * u / nf), "residual covariance")?;
    let kf = k as f64;
    let qf = q as f64;
    let s = {
        let den = kf * kf + qf * qf - 5.0;
        if den > 0.0 {
            ((kf * kf * qf * qf - 4.0) / den).sqrt()
        } else {
            1.0
        }
    };
    let big_n = nf - m as f64 - qf - (kf - qf + 1.0) / 2.0;
    let df1 = kf * qf;
    let df2 = big_n * s - kf * qf / 2.0 + 1.0;
    (1..=h_max)
        .map(|h| {
            let lagged = DMatrix::from_fn(n, k, |t, j| if t >= h { u[(t - h, j)] } else { 0.0 });
            let aux = hstack(&[&model.design, &lagged]);
            let fit = LeastSquares::fit(u, &aux)?;
            let e = &fit.resid;
            let log_det_u = log_det_spd(&(e.transpose() * e / nf), "auxiliary covariance")?;
            let ln_lambda = log_det_u - log_det_r;
            let lre = -big_n * ln_lambda;
            let rao_f = ((-ln_lambda / s).exp() - 1.0) * df2 / df1;
            Ok(SerialRow {
                lag: h,
                lre,
                df: k * q,
                lre_p: chi2_sf(lre, df1),
                rao_f,
                f_df: (df1, df2),
                rao_p: f_sf(rao_f, df1, df2),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityComponent {
    pub skewness: f64,
    pub kurtosis: f64,
    pub jb: f64,
    pub df: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub components: Vec<NormalityComponent>,
    pub joint: f64,
    pub joint_df: usize,
    pub joint_p: f64,
}

/// Multivariate Jarque–Bera test on residuals orthogonalised with the
/// Cholesky factor of their (centred, ML) covariance, in column order.
pub fn jarque_bera_test(model: &VarModel) -> Result<NormalityReport> {
    jarque_bera_residuals(&model.resid)
}

pub fn jarque_bera_residuals(resid: &DMatrix<f64>) -> Result<NormalityReport> {
    let (n, k) = resid.shape();
    if n < 3 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: n,
        });
    }
    let nf = n as f64;
    let means = resid.row_mean();
    let centred = DMatrix::from_fn(n, k, |i, j| resid[(i, j)] - means[j]);
    let cov = centred.transpose() * &centred / nf;
    let l = cholesky_lower(&cov, "residual covariance")?;
    // w_t = L^{-1} u_t for every row at once: solve L W' = U'.
    let w = l
        .solve_lower_triangular(&centred.transpose())
        .ok_or_else(|| Error::Singular("residual covariance".into()))?
        .transpose();
    let mut components = Vec::with_capacity(k);
    for j in 0..k {
        let col = w.column(j);
        let m3 = col.iter().map(|v| v.powi(3)).sum::<f64>() / nf;
        let m4 = col.iter().map(|v| v.powi(4)).sum::<f64>() / nf;
        let jb = nf * m3 * m3 / 6.0 + nf * (m4 - 3.0).powi(2) / 24.0;
        components.push(NormalityComponent {
            skewness: m3,
            kurtosis: m4,
            jb,
            df: 2,
            p: chi2_sf(jb, 2.0),
        });
    }
    let joint: f64 = components.iter().map(|c| c.jb).sum();
    Ok(NormalityReport {
        components,
        joint,
        joint_df: 2 * k,
        joint_p: chi2_sf(joint, (2 * k) as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub roots: Vec<Root>,
    pub stable: bool,
}

/// (Kp)×(Kp) companion matrix of the lag polynomial.
pub fn companion_matrix(lag_matrices: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = lag_matrices.len();
    let k = lag_matrices.first().map_or(0, |a| a.nrows());
    let mut c = DMatrix::zeros(k * p, k * p);
    for (l, a) in lag_matrices.iter().enumerate() {
        c.view_mut((0, l * k), (k, k)).copy_from(a);
    }
    for i in k..k * p {
        c[(i, i - k)] = 1.0;
    }
    c
}

/// Eigenvalues of the companion matrix sorted by descending modulus; within
/// equal moduli the root with positive imaginary part comes first.
pub fn stability_roots(model: &VarModel) -> StabilityReport {
    companion_roots(&model.lag_matrices)
}

pub fn companion_roots(lag_matrices: &[DMatrix<f64>]) -> StabilityReport {
    let c = companion_matrix(lag_matrices);
    if c.nrows() == 0 {
        return StabilityReport {
            roots: Vec::new(),
            stable: true,
        };
    }
    let eig: DVector<Complex<f64>> = c.complex_eigenvalues();
    let mut roots: Vec<Root> = eig
        .iter()
        .map(|z| Root {
            re: z.re,
            im: z.im,
            modulus: z.norm(),
        })
        .collect();
    roots.sort_by(|a, b| {
        b.modulus
            .total_cmp(&a.modulus)
            .then(b.im.total_cmp(&a.im))
    });
    let stable = roots.iter().all(|r| r.modulus < 1.0);
    StabilityReport { roots, stable }
}
