//! Johansen reduced-rank regression and cointegration rank tests.
//!
//! The VAR in first differences
//! `Δy_t = Π ȳ_{t-1} + Σ Γ_i Δy_{t-i} + unrestricted deterministics + Φ D_t + ε_t`
//! is concentrated by regressing `Δy_t` and the (possibly
//! deterministic-augmented) lagged level `ȳ_{t-1}` on the short-run
//! regressors. The residual product moments `S_00, S_01, S_11` define the
//! generalised eigenproblem `|λ S_11 - S_10 S_00^{-1} S_01| = 0`, solved by
//! reducing `S_11 = L L'` to a symmetric standard problem.

mod tables;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{DummyMatrix, PricePanel};
use crate::dist::gamma_sf_moments;
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_lower, inverse_spd, log_det_spd, moment, partial_out, sym_eigen_desc,
};

pub use tables::{asymptotic_quantiles, simulate_asymptotic, AsymptoticMoments, MAX_DIMENSION};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Deterministic specification of the cointegrated VAR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JohansenCase {
    /// 1: no deterministic terms.
    None,
    /// 2: constant restricted to the cointegration relations.
    RestrictedConstant,
    /// 3: unrestricted constant.
    UnrestrictedConstant,
    /// 4: trend restricted to the cointegration relations, unrestricted
    /// constant.
    RestrictedTrend,
    /// 5: unrestricted constant and trend.
    UnrestrictedTrend,
}

impl JohansenCase {
    pub const ALL: [JohansenCase; 5] = [
        JohansenCase::None,
        JohansenCase::RestrictedConstant,
        JohansenCase::UnrestrictedConstant,
        JohansenCase::RestrictedTrend,
        JohansenCase::UnrestrictedTrend,
    ];

    pub fn number(self) -> u8 {
        match self {
            JohansenCase::None => 1,
            JohansenCase::RestrictedConstant => 2,
            JohansenCase::UnrestrictedConstant => 3,
            JohansenCase::RestrictedTrend => 4,
            JohansenCase::UnrestrictedTrend => 5,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.number() == n)
            .ok_or_else(|| Error::InvalidArgument(format!("Johansen case must be 1..=5, got {n}")))
    }

    /// Names of the deterministic rows appended to the lagged levels.
    pub fn restricted_rows(self) -> &'static [&'static str] {
        match self {
            JohansenCase::RestrictedConstant => &["C"],
            JohansenCase::RestrictedTrend => &["t"],
            _ => &[],
        }
    }

    /// Names of the deterministic regressors left outside the relations.
    pub fn unrestricted_terms(self) -> &'static [&'static str] {
        match self {
            JohansenCase::None | JohansenCase::RestrictedConstant => &[],
            JohansenCase::UnrestrictedConstant | JohansenCase::RestrictedTrend => &["C"],
            JohansenCase::UnrestrictedTrend => &["C", "t"],
        }
    }
}

/// Regression blocks of the error-correction form on rows k..T of a panel.
#[derive(Debug, Clone)]
pub struct EcmData {
    /// Δy_t, T_eff×K.
    pub dy: DMatrix<f64>,
    /// ȳ_{t-1}: lagged levels plus restricted deterministic rows, T_eff×K1.
    pub levels: DMatrix<f64>,
    /// Lagged differences (variable-major), unrestricted deterministics and
    /// dummies.
    pub short_run: DMatrix<f64>,
    pub short_run_names: Vec<String>,
    pub level_names: Vec<String>,
    pub k: usize,
    pub case: JohansenCase,
    pub first_row: usize,
}

impl EcmData {
    /// `k` is the order of the levels VAR; k-1 lagged differences enter.
    pub fn build(
        panel: &PricePanel,
        k: usize,
        case: JohansenCase,
        dummies: &DummyMatrix,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("VAR order k must be at least 1".into()));
        }
        let y = panel.values();
        let (t_all, n_var) = y.shape();
        if k >= t_all {
            return Err(Error::InsufficientData {
                needed: k,
                available: t_all,
            });
        }
        if dummies.values.nrows() != t_all {
            return Err(Error::InvalidArgument("dummy rows do not match panel".into()));
        }
        let n = t_all - k;
        let restricted = case.restricted_rows();
        let unrestricted = case.unrestricted_terms();
        let d = dummies.n_dummies();
        let dy = DMatrix::from_fn(n, n_var, |r, j| y[(r + k, j)] - y[(r + k - 1, j)]);
        let k1 = n_var + restricted.len();
        let levels = DMatrix::from_fn(n, k1, |r, j| {
            let t = r + k;
            if j < n_var {
                y[(t - 1, j)]
            } else if case == JohansenCase::RestrictedConstant {
                1.0
            } else {
                t as f64
            }
        });
        let n_sr = n_var * (k - 1) + unrestricted.len() + d;
        let mut short_run = DMatrix::zeros(n, n_sr);
        let mut short_run_names = Vec::with_capacity(n_sr);
        for v in 0..n_var {
            for l in 1..k {
                short_run_names.push(format!("D({})(-{l})", panel.names()[v]));
            }
        }
        short_run_names.extend(unrestricted.iter().map(|s| s.to_string()));
        short_run_names.extend(dummies.names.iter().cloned());
        for r in 0..n {
            let t = r + k;
            let mut c = 0;
            for v in 0..n_var {
                for l in 1..k {
                    short_run[(r, c)] = y[(t - l, v)] - y[(t - l - 1, v)];
                    c += 1;
                }
            }
            for term in unrestricted {
                short_run[(r, c)] = if *term == "C" { 1.0 } else { (t + 1) as f64 };
                c += 1;
            }
            for j in 0..d {
                short_run[(r, c)] = dummies.values[(t, j)];
                c += 1;
            }
        }
        let mut level_names: Vec<String> = panel.names().to_vec();
        level_names.extend(restricted.iter().map(|s| s.to_string()));
        Ok(Self {
            dy,
            levels,
            short_run,
            short_run_names,
            level_names,
            k,
            case,
            first_row: k,
        })
    }

    pub fn n_eff(&self) -> usize {
        self.dy.nrows()
    }

    pub fn n_series(&self) -> usize {
        self.dy.ncols()
    }

    /// Concentrates out the short-run block.
    pub fn moments(&self) -> Result<MomentMatrices> {
        let needed = self.short_run.ncols() + self.levels.ncols();
        if self.n_eff() <= needed {
            return Err(Error::InsufficientData {
                needed,
                available: self.n_eff(),
            });
        }
        let r0 = partial_out(&self.dy, &self.short_run)?;
        let r1 = partial_out(&self.levels, &self.short_run)?;
        Ok(MomentMatrices::from_residuals(&r0, &r1))
    }
}

/// Residual product moments of the concentrated likelihood.
#[derive(Debug, Clone)]
pub struct MomentMatrices {
    pub s00: DMatrix<f64>,
    pub s01: DMatrix<f64>,
    pub s11: DMatrix<f64>,
    pub n_eff: usize,
}

impl MomentMatrices {
    pub fn from_residuals(r0: &DMatrix<f64>, r1: &DMatrix<f64>) -> Self {
        Self {
            s00: moment(r0, r0),
            s01: moment(r0, r1),
            s11: moment(r1, r1),
            n_eff: r0.nrows(),
        }
    }

    pub fn n_series(&self) -> usize {
        self.s00.nrows()
    }

    /// Eigenvalues (descending) and S11-orthonormal eigenvectors of
    /// `|λ S11 - S10 S00^{-1} S01| = 0`.
    pub fn eigen(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        generalized_eigen(&self.s00, &self.s01, &self.s11)
    }

    /// `ln |S00 - S01 β (β' S11 β)^{-1} β' S10|`.
    pub fn log_det_omega(&self, beta: &DMatrix<f64>) -> Result<f64> {
        if beta.ncols() == 0 {
            return log_det_spd(&self.s00, "S00");
        }
        let bsb = beta.transpose() * &self.s11 * beta;
        let inv = inverse_spd(&bsb, "β'S11β")?;
        let s01b = &self.s01 * beta;
        let omega = &self.s00 - &s01b * inv * s01b.transpose();
        log_det_spd(&omega, "residual covariance")
    }

    /// Concentrated Gaussian log-likelihood at a given β.
    pub fn log_lik_at(&self, beta: &DMatrix<f64>) -> Result<f64> {
        let t = self.n_eff as f64;
        let k = self.n_series() as f64;
        Ok(-0.5 * t * (k * (1.0 + LN_2PI) + self.log_det_omega(beta)?))
    }
}

pub(crate) fn generalized_eigen(
    s00: &DMatrix<f64>,
    s01: &DMatrix<f64>,
    s11: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let s00_inv = inverse_spd(s00, "S00")?;
    let l = cholesky_lower(s11, "S11")?;
    let n = s11.nrows();
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Singular("S11".into()))?;
    let s10 = s01.transpose();
    let c = &l_inv * &s10 * &s00_inv * s01 * l_inv.transpose();
    let (values, u) = sym_eigen_desc(&c);
    let vectors = l_inv.transpose() * u;
    Ok((values, vectors))
}

#[derive(Debug, Clone)]
pub struct JohansenResult {
    pub case: JohansenCase,
    pub k: usize,
    pub names: Vec<String>,
    /// Names of the rows of the eigenvectors (series, then restricted terms).
    pub level_names: Vec<String>,
    /// λ_1 ≥ … ≥ λ_K.
    pub eigenvalues: Vec<f64>,
    /// K1×K1, columns normalised so that V' S11 V = I.
    pub eigenvectors: DMatrix<f64>,
    /// trace(r) for r = 0..K-1.
    pub trace: Vec<f64>,
    /// maxeig(r) for r = 0..K-1.
    pub max_eigen: Vec<f64>,
    pub moments: MomentMatrices,
    pub n_eff: usize,
}

impl JohansenResult {
    pub fn n_series(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Maximised log-likelihood under rank r (0..=K).
    pub fn log_lik(&self, r: usize) -> Result<f64> {
        let t = self.n_eff as f64;
        let k = self.n_series() as f64;
        let log_det = log_det_spd(&self.moments.s00, "S00")?;
        let sum: f64 = self.eigenvalues[..r].iter().map(|l| (1.0 - l).ln()).sum();
        Ok(-0.5 * t * (k * (1.0 + LN_2PI) + log_det + sum))
    }

    /// Leading r eigenvectors.
    pub fn beta(&self, r: usize) -> DMatrix<f64> {
        self.eigenvectors.columns(0, r).into_owned()
    }
}

/// Trace statistics `Σ_{i>r} -T ln(1-λ_i)` and max-eigen statistics
/// `-T ln(1-λ_{r+1})` for r = 0..K-1.
pub fn rank_statistics(eigenvalues: &[f64], n_eff: usize) -> (Vec<f64>, Vec<f64>) {
    let t = n_eff as f64;
    let max_eigen: Vec<f64> = eigenvalues.iter().map(|l| -t * (1.0 - l).ln()).collect();
    let mut trace = vec![0.0; eigenvalues.len()];
    let mut acc = 0.0;
    for r in (0..eigenvalues.len()).rev() {
        acc += max_eigen[r];
        trace[r] = acc;
    }
    (trace, max_eigen)
}

pub fn reduced_rank_regression(
    panel: &PricePanel,
    k: usize,
    case: JohansenCase,
    dummies: &DummyMatrix,
) -> Result<JohansenResult> {
    let data = EcmData::build(panel, k, case, dummies)?;
    johansen_from_data(&data, panel.names().to_vec())
}

pub fn johansen_from_data(data: &EcmData, names: Vec<String>) -> Result<JohansenResult> {
    let moments = data.moments()?;
    let (values, vectors) = moments.eigen()?;
    let n_var = data.n_series();
    let eigenvalues: Vec<f64> = values.iter().take(n_var).map(|l| l.clamp(0.0, 1.0 - 1e-15)).collect();
    let (trace, max_eigen) = rank_statistics(&eigenvalues, moments.n_eff);
    Ok(JohansenResult {
        case: data.case,
        k: data.k,
        names,
        level_names: data.level_names.clone(),
        eigenvalues,
        eigenvectors: vectors,
        trace,
        max_eigen,
        n_eff: moments.n_eff,
        moments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankStatistic {
    Trace,
    MaxEigen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTestRow {
    /// Hypothesis: rank ≤ r.
    pub r: usize,
    pub eigenvalue: f64,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTestTable {
    pub statistic: RankStatistic,
    pub case: JohansenCase,
    pub level: f64,
    pub rows: Vec<RankTestRow>,
}

fn rank_test(result: &JohansenResult, level: f64, which: RankStatistic) -> Result<RankTestTable> {
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level {level} outside (0, 1)")));
    }
    let k = result.n_series();
    let stats = match which {
        RankStatistic::Trace => &result.trace,
        RankStatistic::MaxEigen => &result.max_eigen,
    };
    let rows = (0..k)
        .map(|r| {
            let m = k - r;
            let dist = asymptotic_quantiles(result.case, m, which)?;
            let cv = dist.critical_value(level);
            let stat = stats[r];
            Ok(RankTestRow {
                r,
                eigenvalue: result.eigenvalues[r],
                statistic: stat,
                critical_value: cv,
                p_value: dist.p_value(stat),
                reject: stat > cv,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankTestTable {
        statistic: which,
        case: result.case,
        level,
        rows,
    })
}

pub fn trace_test(result: &JohansenResult, level: f64) -> Result<RankTestTable> {
    rank_test(result, level, RankStatistic::Trace)
}

pub fn max_eigen_test(result: &JohansenResult, level: f64) -> Result<RankTestTable> {
    rank_test(result, level, RankStatistic::MaxEigen)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankPolicy {
    Trace,
    MaxEigen,
    Agree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankChoice {
    pub rank: usize,
    pub warning: Option<String>,
}

fn first_accepted(table: &RankTestTable) -> (usize, bool) {
    match table.rows.iter().find(|row| !row.reject) {
        Some(row) => (row.r, false),
        None => (table.rows.len().saturating_sub(1), true),
    }
}

/// First non-rejected hypothesis under the chosen policy.
pub fn select_rank(
    trace: &RankTestTable,
    max_eigen: &RankTestTable,
    policy: RankPolicy,
) -> Result<RankChoice> {
    if trace.rows.len() != max_eigen.rows.len() {
        return Err(Error::RankSelection("tables come from different systems".into()));
    }
    let (t_rank, t_full) = first_accepted(trace);
    let (m_rank, m_full) = first_accepted(max_eigen);
    let (rank, full) = match policy {
        RankPolicy::Trace => (t_rank, t_full),
        RankPolicy::MaxEigen => (m_rank, m_full),
        RankPolicy::Agree => {
            if t_rank != m_rank || t_full != m_full {
                return Err(Error::RankSelection(format!(
                    "trace selects rank {t_rank}, max-eigenvalue selects {m_rank}"
                )));
            }
            (t_rank, t_full)
        }
    };
    let warning = full.then(|| {
        "every rank hypothesis rejected; full rank suggests stationary levels".to_string()
    });
    Ok(RankChoice { rank, warning })
}

/// p-value of a rank statistic from the gamma approximation to its
/// asymptotic distribution, clamped to [0.0001, 0.9999].
pub(crate) fn clamped_gamma_p(stat: f64, mean: f64, var: f64) -> f64 {
    gamma_sf_moments(stat, mean, var).clamp(1e-4, 0.9999)
}
