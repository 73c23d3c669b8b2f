//! Seeded data-generating processes for Monte Carlo work and demo data.
//!
//! Replication `i` of a seed draws from ChaCha8 stream `i`, so any single
//! replication can be regenerated without running the ones before it and the
//! output does not depend on the platform.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{PricePanel, Scale, YearMonth};
use crate::error::{Error, Result};
use crate::var::companion_roots;
use crate::vecm::vecm_to_var;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dgp {
    WhiteNoise,
    RandomWalk,
    /// `y_t = c + Σ A_i y_{t-i} + ε_t`.
    Var {
        intercept: Vec<f64>,
        /// Row-major K×K matrices.
        lags: Vec<Vec<f64>>,
    },
    /// `Δy_t = μ + α β' y_{t-1} + Σ Γ_i Δy_{t-i} + ε_t`.
    Vecm {
        intercept: Vec<f64>,
        /// Row-major K×r.
        alpha: Vec<f64>,
        /// Row-major K×r.
        beta: Vec<f64>,
        /// Row-major K×K matrices.
        gamma: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub dgp: Dgp,
    pub names: Vec<String>,
    pub n_obs: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Row-major innovation covariance; identity when absent.
    #[serde(default)]
    pub covariance: Option<Vec<f64>>,
    /// Added to every generated value (e.g. a log-price level).
    #[serde(default)]
    pub offset: Vec<f64>,
    /// Return `exp` of the simulated series, i.e. prices from log prices.
    #[serde(default)]
    pub exponentiate: bool,
    /// Pre-sample levels; zero when absent.
    #[serde(default)]
    pub initial: Vec<f64>,
    /// Refuse VAR specifications whose companion roots reach the unit circle.
    #[serde(default)]
    pub require_stable: bool,
    pub start: YearMonth,
}

fn default_burn_in() -> usize {
    200
}

impl SimulationSpec {
    pub fn new(dgp: Dgp, names: Vec<String>, n_obs: usize, start: YearMonth) -> Self {
        Self {
            dgp,
            names,
            n_obs,
            burn_in: default_burn_in(),
            covariance: None,
            offset: Vec::new(),
            exponentiate: false,
            initial: Vec::new(),
            require_stable: false,
            start,
        }
    }

    pub fn n_series(&self) -> usize {
        self.names.len()
    }

    /// Levels VAR form `(c, [A_1..A_p])` of the process.
    fn levels_form(&self) -> Result<(DVector<f64>, Vec<DMatrix<f64>>)> {
        let k = self.n_series();
        let square = |v: &[f64], what: &str| -> Result<DMatrix<f64>> {
            if v.len() != k * k {
                return Err(Error::InvalidArgument(format!(
                    "{what} needs {} entries, got {}",
                    k * k,
                    v.len()
                )));
            }
            Ok(DMatrix::from_row_slice(k, k, v))
        };
        let vector = |v: &[f64], what: &str| -> Result<DVector<f64>> {
            if v.len() != k {
                return Err(Error::InvalidArgument(format!("{what} needs {k} entries")));
            }
            Ok(DVector::from_column_slice(v))
        };
        match &self.dgp {
            Dgp::WhiteNoise => Ok((DVector::zeros(k), Vec::new())),
            Dgp::RandomWalk => Ok((DVector::zeros(k), vec![DMatrix::identity(k, k)])),
            Dgp::Var { intercept, lags } => Ok((
                vector(intercept, "intercept")?,
                lags.iter().map(|a| square(a, "VAR matrix")).collect::<Result<_>>()?,
            )),
            Dgp::Vecm {
                intercept,
                alpha,
                beta,
                gamma,
            } => {
                if alpha.len() % k != 0 || alpha.is_empty() || alpha.len() != beta.len() {
                    return Err(Error::InvalidArgument(
                        "alpha and beta must both be K×r".into(),
                    ));
                }
                let r = alpha.len() / k;
                let a = DMatrix::from_row_slice(k, r, alpha);
                let b = DMatrix::from_row_slice(k, r, beta);
                let pi = &a * b.transpose();
                // α = 0 is allowed: no error correction at all.
                let no_correction = a.iter().all(|v| *v == 0.0);
                if !no_correction && pi.rank(1e-10 * pi.amax().max(1e-300)) != r {
                    return Err(Error::InvalidArgument(format!(
                        "alpha beta' must have rank {r}"
                    )));
                }
                let gammas = gamma
                    .iter()
                    .map(|g| square(g, "Γ matrix"))
                    .collect::<Result<Vec<_>>>()?;
                Ok((vector(intercept, "intercept")?, vecm_to_var(&(a * b.transpose()), &gammas)))
            }
        }
    }
}

/// Lower-triangular factor of a covariance matrix; positive semidefinite
/// matrices with zero rows (degenerate innovations) are accepted.
fn covariance_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = cov.nrows();
    if (cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
        return Err(Error::InvalidArgument("covariance must be symmetric".into()));
    }
    let mut l = DMatrix::zeros(k, k);
    for j in 0..k {
        let d = cov[(j, j)] - (0..j).map(|m| l[(j, m)] * l[(j, m)]).sum::<f64>();
        if d < -1e-12 * cov.amax() {
            return Err(Error::InvalidArgument("covariance must be positive semidefinite".into()));
        }
        let d = d.max(0.0).sqrt();
        l[(j, j)] = d;
        for i in j + 1..k {
            let v = cov[(i, j)] - (0..j).map(|m| l[(i, m)] * l[(j, m)]).sum::<f64>();
            l[(i, j)] = if d > 0.0 { v / d } else { 0.0 };
        }
    }
    Ok(l)
}

/// Draws replication `replication` of the process.
pub fn generate(spec: &SimulationSpec, seed: u64, replication: u64) -> Result<PricePanel> {
    let k = spec.n_series();
    if k == 0 || spec.n_obs == 0 {
        return Err(Error::InvalidArgument("need at least one series and one observation".into()));
    }
    let chol = match &spec.covariance {
        Some(c) if c.len() == k * k => covariance_factor(&DMatrix::from_row_slice(k, k, c))?,
        Some(_) => return Err(Error::InvalidArgument(format!("covariance needs {} entries", k * k))),
        None => DMatrix::identity(k, k),
    };
    if !spec.offset.is_empty() && spec.offset.len() != k {
        return Err(Error::InvalidArgument(format!("offset needs {k} entries")));
    }
    if !spec.initial.is_empty() && spec.initial.len() != k {
        return Err(Error::InvalidArgument(format!("initial needs {k} entries")));
    }
    let (intercept, lags) = spec.levels_form()?;
    if spec.require_stable && !lags.is_empty() && !companion_roots(&lags).stable {
        return Err(Error::InvalidArgument("VAR specification is not stable".into()));
    }
    let p = lags.len();
    let init = if spec.initial.is_empty() {
        DVector::zeros(k)
    } else {
        DVector::from_column_slice(&spec.initial)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    let total = spec.burn_in + spec.n_obs;
    let mut path: Vec<DVector<f64>> = Vec::with_capacity(total + p);
    path.extend((0..p).map(|_| init.clone()));
    for _ in 0..total {
        let z = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let mut y = &intercept + &chol * z;
        let t = path.len();
        for (i, a) in lags.iter().enumerate() {
            y += a * &path[t - 1 - i];
        }
        path.push(y);
    }
    let kept = &path[p + spec.burn_in..];
    let values = DMatrix::from_fn(spec.n_obs, k, |t, j| {
        let v = kept[t][j] + spec.offset.get(j).copied().unwrap_or(0.0);
        if spec.exponentiate {
            v.exp()
        } else {
            v
        }
    });
    PricePanel::from_start(spec.start, spec.names.clone(), values, Scale::Level)
}

/// Hit count of a Monte Carlo experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub hits: usize,
    pub reps: usize,
}

impl Tally {
    pub fn rate(&self) -> f64 {
        self.hits as f64 / self.reps as f64
    }
}

fn pair_names() -> Vec<String> {
    vec!["y1".into(), "y2".into()]
}

fn origin() -> YearMonth {
    YearMonth::new(1990, 1).expect("valid month")
}

/// Bivariate error-correction system with relation `y1 - y2`, adjustment
/// (-0.5, 0.2)' and optional short-run matrix (row-major).
pub fn rank_one_pair_spec(n_obs: usize, gamma: Option<[f64; 4]>) -> SimulationSpec {
    SimulationSpec::new(
        Dgp::Vecm {
            intercept: vec![0.0, 0.0],
            alpha: vec![-0.5, 0.2],
            beta: vec![1.0, -1.0],
            gamma: gamma.map(|g| vec![g.to_vec()]).unwrap_or_default(),
        },
        pair_names(),
        n_obs,
        origin(),
    )
}

/// Share of driftless random walks on which the constant-only ADF test
/// (AIC lag choice up to `12 (n/100)^{1/4}`) rejects at `level`.
pub fn adf_size(n_obs: usize, reps: usize, seed: u64, level: f64) -> Result<Tally> {
    use crate::unit_root::{adf_test, Deterministic, LagCriterion};
    let spec = SimulationSpec::new(Dgp::RandomWalk, vec!["y".into()], n_obs, origin());
    let max_lag = (12.0 * (n_obs as f64 / 100.0).powf(0.25)).floor() as usize;
    let mut hits = 0;
    for rep in 0..reps {
        let y = generate(&spec, seed, rep as u64)?.series(0);
        if adf_test(&y, Deterministic::Constant, max_lag, LagCriterion::Aic)?.rejects(level) {
            hits += 1;
        }
    }
    Ok(Tally { hits, reps })
}

/// Share of replications of the rank-one pair where the trace test at
/// `level` selects rank 1 (restricted constant, one lagged difference).
pub fn rank_recovery(n_obs: usize, reps: usize, seed: u64, level: f64) -> Result<Tally> {
    use crate::johansen::{max_eigen_test, reduced_rank_regression, select_rank, trace_test, JohansenCase, RankPolicy};
    let spec = rank_one_pair_spec(n_obs, None);
    let mut hits = 0;
    for rep in 0..reps {
        let panel = generate(&spec, seed, rep as u64)?;
        let dummies = crate::data::DummyMatrix::empty(panel.dates());
        let result = reduced_rank_regression(&panel, 2, JohansenCase::RestrictedConstant, &dummies)?;
        let trace = trace_test(&result, level)?;
        let maxeig = max_eigen_test(&result, level)?;
        if select_rank(&trace, &maxeig, RankPolicy::Trace)?.rank == 1 {
            hits += 1;
        }
    }
    Ok(Tally { hits, reps })
}

/// Share of replications of the rank-one pair in which the unit-slope
/// restriction is not rejected at `level`.
pub fn lop_non_rejection(n_obs: usize, reps: usize, seed: u64, level: f64) -> Result<Tally> {
    use crate::johansen::JohansenCase;
    use crate::vecm::{pairwise_lop, VecmSetup};
    let spec = rank_one_pair_spec(n_obs, None);
    let mut hits = 0;
    for rep in 0..reps {
        let panel = generate(&spec, seed, rep as u64)?;
        let dummies = crate::data::DummyMatrix::empty(panel.dates());
        let setup = VecmSetup::new(&panel, 1, JohansenCase::RestrictedConstant, &dummies);
        let lop = pairwise_lop(&setup, 1, level)?;
        if lop.rejects(0, 1) == Some(false) {
            hits += 1;
        }
    }
    Ok(Tally { hits, reps })
}

/// Rejection share of the Wald test that y2 does not enter the y1
/// equation, in a system where its short-run coefficient is zero.
pub fn granger_size(n_obs: usize, reps: usize, seed: u64, level: f64) -> Result<Tally> {
    use crate::johansen::JohansenCase;
    use crate::vecm::{fit_vecm, granger_wald};
    let spec = rank_one_pair_spec(n_obs, Some([0.3, 0.0, 0.2, 0.2]));
    let mut hits = 0;
    for rep in 0..reps {
        let panel = generate(&spec, seed, rep as u64)?;
        let dummies = crate::data::DummyMatrix::empty(panel.dates());
        let model = fit_vecm(&panel, 1, 1, JohansenCase::RestrictedConstant, &dummies)?;
        let tests = granger_wald(&model)?;
        if tests[0].rows[0].p_value < level {
            hits += 1;
        }
    }
    Ok(Tally { hits, reps })
}
