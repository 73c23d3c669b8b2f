//! Stage functions and the end-to-end pipeline.
//!
//! Every stage returns tables in memory; files are written only after the
//! whole run has succeeded, so a failing run leaves no partial output.

use std::collections::BTreeSet;
use std::path::Path;

use lopcoint::data::{build_dummies, log_transform, DummyMatrix, DummySpec, PricePanel, YearMonth};
use lopcoint::johansen::{
    max_eigen_test, select_rank, trace_test, JohansenCase, JohansenResult, RankChoice, RankPolicy,
    RankTestTable,
};
use lopcoint::unit_root::{adf_test, classify, pp_test, Bandwidth, Deterministic, IntegrationOrder};
use lopcoint::var::{
    fit_var, jarque_bera_test, lag_order_selection, lm_serial_test, stability_roots,
    LagSelectionTable, SelectedLags, VarModel,
};
use lopcoint::vecm::{
    ect_series, fit_vecm_with_pivots, granger_wald, joint_lop_test, long_run_equation,
    pairwise_lop, weak_exogeneity_test, GrangerResult, RestrictionResult, VecmModel, VecmSetup,
};
use lopcoint::Error;
use serde::{Deserialize, Serialize};

use crate::config::{Format, PipelineConfig};
use crate::error::{CliError, StageExt};
use crate::report::{emit_table, write_file, Cell, Table};

fn percent(level: f64) -> String {
    format!("{}", (level * 1e8).round() / 1e6)
}

fn policy_label(p: RankPolicy) -> &'static str {
    match p {
        RankPolicy::Trace => "trace",
        RankPolicy::MaxEigen => "max-eigen",
        RankPolicy::Agree => "agreement",
    }
}

/// Loaded data on the analysis scale with its dummies.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: PipelineConfig,
    pub panel: PricePanel,
    pub dummy_spec: DummySpec,
    pub dummies: DummyMatrix,
}

impl Context {
    pub fn no_dummies(&self) -> DummyMatrix {
        DummyMatrix::empty(self.panel.dates())
    }

    pub fn case(&self) -> Result<JohansenCase, CliError> {
        self.config.case()
    }

    pub fn vecm_lags(&self) -> usize {
        self.config.var_order() - 1
    }

    pub fn setup(&self) -> Result<VecmSetup<'_>, CliError> {
        Ok(VecmSetup::new(&self.panel, self.vecm_lags(), self.case()?, &self.dummies))
    }

    fn set_dummies(&mut self, spec: DummySpec) -> Result<(), CliError> {
        self.dummies = build_dummies(&spec, self.panel.dates()).stage("dummies")?;
        self.dummy_spec = spec;
        Ok(())
    }
}

pub fn ingest(config: &PipelineConfig) -> Result<Context, CliError> {
    let data = config.data_config().stage("ingest")?;
    let raw = data.load().stage("ingest")?;
    let panel = if config.data.log {
        log_transform(&raw).stage("ingest")?
    } else {
        raw
    };
    let dates = panel.dates();
    if let (Some(&first), Some(&last)) = (dates.first(), dates.last()) {
        config.check_dummy_range(first, last).stage("ingest")?;
    }
    let dummies = build_dummies(&data.dummies, dates).stage("ingest")?;
    Ok(Context {
        config: config.clone(),
        panel,
        dummy_spec: data.dummies,
        dummies,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesOrder {
    pub series: String,
    pub order: String,
    pub adf_level: f64,
    pub adf_level_p: f64,
    pub pp_level: f64,
    pub pp_level_p: f64,
    pub adf_diff_p: f64,
    pub pp_diff_p: f64,
}

fn order_label(o: IntegrationOrder) -> &'static str {
    match o {
        IntegrationOrder::I0 => "I(0)",
        IntegrationOrder::I1 => "I(1)",
        IntegrationOrder::Inconclusive => "inconclusive",
    }
}

/// ADF and PP with an intercept on levels and first differences.
pub fn unit_roots(ctx: &Context) -> Result<(Table, Vec<SeriesOrder>), CliError> {
    let ur = &ctx.config.unit_root;
    let mut table = Table::new(
        "unit_root",
        format!(
            "Unit-root tests with intercept (ADF lags by {:?}, max {}; PP Bartlett kernel)",
            ur.criterion, ur.max_lag
        ),
        &[
            "series", "adf_level", "adf_level_p", "adf_lags", "pp_level", "pp_level_p",
            "pp_bandwidth", "adf_diff", "adf_diff_p", "pp_diff", "pp_diff_p", "order",
        ],
    );
    let mut orders = Vec::new();
    let spec = Deterministic::Constant;
    for (k, name) in ctx.panel.names().iter().enumerate() {
        let y = ctx.panel.series(k);
        let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
        let adf_level = adf_test(&y, spec, ur.max_lag, ur.criterion.into()).stage("unit-root")?;
        let pp_level = pp_test(&y, spec, Bandwidth::NeweyWest).stage("unit-root")?;
        let adf_diff = adf_test(&dy, spec, ur.max_lag, ur.criterion.into()).stage("unit-root")?;
        let pp_diff = pp_test(&dy, spec, Bandwidth::NeweyWest).stage("unit-root")?;
        let order = classify(&adf_level, &pp_level, &adf_diff, &pp_diff);
        table.push(vec![
            Cell::text(name),
            Cell::Stat(adf_level.statistic),
            Cell::P(adf_level.p_value),
            Cell::int(adf_level.lags_or_bandwidth),
            Cell::Stat(pp_level.statistic),
            Cell::P(pp_level.p_value),
            Cell::int(pp_level.lags_or_bandwidth),
            Cell::Stat(adf_diff.statistic),
            Cell::P(adf_diff.p_value),
            Cell::Stat(pp_diff.statistic),
            Cell::P(pp_diff.p_value),
            Cell::text(order_label(order)),
        ]);
        orders.push(SeriesOrder {
            series: name.clone(),
            order: order_label(order).into(),
            adf_level: adf_level.statistic,
            adf_level_p: adf_level.p_value,
            pp_level: pp_level.statistic,
            pp_level_p: pp_level.p_value,
            adf_diff_p: adf_diff.p_value,
            pp_diff_p: pp_diff.p_value,
        });
    }
    table.note("decisions at 5%: I(1) when both level tests fail to reject and both difference tests reject");
    Ok((table, orders))
}

pub fn lag_selection(ctx: &Context) -> Result<(Table, LagSelectionTable), CliError> {
    let var = &ctx.config.var;
    let empty = ctx.no_dummies();
    let dummies = if var.select_with_dummies { &ctx.dummies } else { &empty };
    let sel = lag_order_selection(&ctx.panel, var.max_lag, var.deterministic(), dummies)
        .stage("lag-selection")?;
    let mut table = Table::new(
        "lag_selection",
        format!("VAR lag order selection ({} observations)", sel.n_eff),
        &["lag", "logl", "lr", "lr_p", "fpe", "aic", "sc", "hq", "selected_by"],
    );
    let s = sel.selected;
    for row in &sel.rows {
        let by: Vec<&str> = [("LR", s.lr), ("FPE", s.fpe), ("AIC", s.aic), ("SC", s.sc), ("HQ", s.hq)]
            .into_iter()
            .filter(|(_, lag)| *lag == row.lag)
            .map(|(c, _)| c)
            .collect();
        table.push(vec![
            Cell::int(row.lag),
            Cell::Stat(row.log_lik),
            Cell::opt_stat(row.lr),
            Cell::opt_p(row.lr_p),
            Cell::Stat(row.fpe),
            Cell::Stat(row.aic),
            Cell::Stat(row.sc),
            Cell::Stat(row.hq),
            Cell::text(by.join(" ")),
        ]);
    }
    Ok((table, sel))
}

pub fn var_model(ctx: &Context, order: usize, with_dummies: bool) -> Result<VarModel, CliError> {
    let empty = ctx.no_dummies();
    let dummies = if with_dummies { &ctx.dummies } else { &empty };
    fit_var(&ctx.panel, order, ctx.config.var.deterministic(), dummies).stage("var")
}

fn coefficient_rows(
    table: &mut Table,
    equations: &[String],
    regressors: &[String],
    coef: &nalgebra::DMatrix<f64>,
    se: &nalgebra::DMatrix<f64>,
    t: &nalgebra::DMatrix<f64>,
) {
    for (eq, eq_name) in equations.iter().enumerate() {
        for (i, reg) in regressors.iter().enumerate() {
            table.push(vec![
                Cell::text(eq_name),
                Cell::text(reg),
                Cell::Stat(coef[(i, eq)]),
                Cell::Stat(se[(i, eq)]),
                Cell::Stat(t[(i, eq)]),
            ]);
        }
    }
}

pub fn var_tables(model: &VarModel, suffix: &str) -> Table {
    let mut table = Table::new(
        &format!("var{suffix}_coefficients"),
        format!("VAR({}) estimates", model.order),
        &["equation", "regressor", "coefficient", "std_error", "t"],
    );
    coefficient_rows(
        &mut table,
        &model.names,
        &model.regressor_names,
        &model.coef,
        &model.std_errors,
        &model.t_stats,
    );
    let s = &model.system;
    table.note(format!(
        "observations {}, log likelihood {}, AIC {}, SC {}, HQ {}",
        model.n_eff,
        crate::report::format_stat(s.log_lik),
        crate::report::format_stat(s.aic),
        crate::report::format_stat(s.sc),
        crate::report::format_stat(s.hq)
    ));
    table
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Smallest Rao F p-value over lags 1..=4.
    pub serial_min_p_short: f64,
    pub normality_p: f64,
    pub stable: bool,
    pub max_root_modulus: f64,
}

pub fn diagnostics(model: &VarModel, lm_lags: usize, suffix: &str) -> Result<(Vec<Table>, Diagnostics), CliError> {
    let serial = lm_serial_test(model, lm_lags).stage("diagnostics")?;
    let mut lm = Table::new(
        &format!("var{suffix}_serial_lm"),
        format!("VAR({}) residual autocorrelation LM tests", model.order),
        &["lag", "lre", "df", "lre_p", "rao_f", "rao_df1", "rao_df2", "rao_p"],
    );
    for row in &serial {
        lm.push(vec![
            Cell::int(row.lag),
            Cell::Stat(row.lre),
            Cell::int(row.df),
            Cell::P(row.lre_p),
            Cell::Stat(row.rao_f),
            Cell::Stat(row.f_df.0),
            Cell::Stat(row.f_df.1),
            Cell::P(row.rao_p),
        ]);
    }
    let jb = jarque_bera_test(model).stage("diagnostics")?;
    let mut normal = Table::new(
        &format!("var{suffix}_normality"),
        format!("VAR({}) residual normality (Cholesky orthogonalised)", model.order),
        &["component", "skewness", "kurtosis", "jarque_bera", "df", "p"],
    );
    for (i, c) in jb.components.iter().enumerate() {
        normal.push(vec![
            Cell::int(i + 1),
            Cell::Stat(c.skewness),
            Cell::Stat(c.kurtosis),
            Cell::Stat(c.jb),
            Cell::int(c.df),
            Cell::P(c.p),
        ]);
    }
    normal.push(vec![
        Cell::text("joint"),
        Cell::Empty,
        Cell::Empty,
        Cell::Stat(jb.joint),
        Cell::int(jb.joint_df),
        Cell::P(jb.joint_p),
    ]);
    let roots = stability_roots(model);
    let mut rt = Table::new(
        &format!("var{suffix}_roots"),
        format!("VAR({}) companion roots", model.order),
        &["re", "im", "modulus"],
    );
    for r in &roots.roots {
        rt.push(vec![Cell::Stat(r.re), Cell::Stat(r.im), Cell::Stat(r.modulus)]);
    }
    rt.note(if roots.stable {
        "all roots inside the unit circle"
    } else {
        "at least one root on or outside the unit circle"
    });
    let diag = Diagnostics {
        serial_min_p_short: serial
            .iter()
            .take(4)
            .map(|r| r.rao_p)
            .fold(f64::INFINITY, f64::min),
        normality_p: jb.joint_p,
        stable: roots.stable,
        max_root_modulus: roots.roots.iter().map(|r| r.modulus).fold(0.0, f64::max),
    };
    Ok((vec![lm, normal, rt], diag))
}

/// Outcome of the automatic respecification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respecification {
    pub order: usize,
    pub serial_ok: bool,
    pub added_dummies: Vec<String>,
}

/// Threshold on standardised residuals for proposing impulse dummies.
pub const OUTLIER_THRESHOLD: f64 = 3.5;

/// Raises the order until the LM tests at lags 1..=4 pass at 5% (or the
/// maximum lag is reached), then adds one impulse dummy per month with a
/// standardised residual beyond [`OUTLIER_THRESHOLD`].
pub fn auto_respecify(ctx: &mut Context, start: usize) -> Result<Respecification, CliError> {
    let max = ctx.config.var.max_lag.max(start);
    let h = 4.min(ctx.config.var.lm_lags.max(1));
    let mut order = start.max(1);
    let mut serial_ok = false;
    loop {
        let model = var_model(ctx, order, true)?;
        let lm = lm_serial_test(&model, h).stage("respecify")?;
        if lm.iter().all(|r| r.rao_p > 0.05) {
            serial_ok = true;
            break;
        }
        if order >= max {
            break;
        }
        order += 1;
    }
    let model = var_model(ctx, order, true)?;
    let dates = ctx.panel.dates();
    let mut months = BTreeSet::new();
    for k in 0..model.n_series() {
        let sd = model.sigma[(k, k)].sqrt();
        for i in 0..model.n_eff {
            if (model.resid[(i, k)] / sd).abs() > OUTLIER_THRESHOLD {
                months.insert(dates[model.first_row + i]);
            }
        }
    }
    let taken: BTreeSet<YearMonth> = ctx
        .dummy_spec
        .entries()
        .iter()
        .flat_map(|(_, m)| m.iter().copied())
        .collect();
    let mut spec = ctx.dummy_spec.clone();
    let mut added = Vec::new();
    for m in months.difference(&taken) {
        let name = format!("D{}M{:02}", m.year(), m.month());
        spec.push(&name, [*m]).stage("respecify")?;
        added.push(name);
    }
    ctx.set_dummies(spec)?;
    ctx.config.var.order = Some(order);
    ctx.config.vecm.lags = Some(order - 1);
    Ok(Respecification {
        order,
        serial_ok,
        added_dummies: added,
    })
}

pub fn johansen(ctx: &Context) -> Result<JohansenResult, CliError> {
    ctx.setup()?.johansen().stage("johansen")
}

fn rank_table(t: &RankTestTable, name: &str, what: &str) -> Table {
    let mut table = Table::new(
        name,
        format!(
            "Johansen {what} test, case {}, {}% critical values",
            t.case.number(),
            percent(t.level)
        ),
        &["hypothesis", "eigenvalue", "statistic", "critical_value", "p"],
    );
    for row in &t.rows {
        table.push(vec![
            Cell::text(format!("r<={}", row.r)),
            Cell::Stat(row.eigenvalue),
            Cell::Stat(row.statistic),
            Cell::Stat(row.critical_value),
            Cell::P(row.p_value),
        ]);
    }
    table
}

pub fn rank_tests(
    ctx: &Context,
    result: &JohansenResult,
) -> Result<(Vec<Table>, RankTestTable, RankTestTable), CliError> {
    let level = ctx.config.johansen.level;
    let trace = trace_test(result, level).stage("johansen")?;
    let max_eig = max_eigen_test(result, level).stage("johansen")?;
    let tables = vec![
        rank_table(&trace, "johansen_trace", "trace"),
        rank_table(&max_eig, "johansen_max_eigen", "maximum eigenvalue"),
    ];
    Ok((tables, trace, max_eig))
}

pub fn choose_rank(
    ctx: &Context,
    trace: &RankTestTable,
    max_eig: &RankTestTable,
) -> Result<RankChoice, CliError> {
    select_rank(trace, max_eig, ctx.config.johansen.rank_policy).stage("rank")
}

fn pivots(ctx: &Context, r: usize) -> Result<Vec<usize>, CliError> {
    let names = &ctx.config.vecm.pivots;
    if names.is_empty() {
        return Ok((0..r).collect());
    }
    if names.len() < r {
        return Err(CliError::Config(format!(
            "vecm.pivots lists {} series, rank is {r}",
            names.len()
        )));
    }
    names[..r]
        .iter()
        .map(|n| {
            ctx.panel
                .index_of(n)
                .ok_or_else(|| CliError::Config(format!("pivot `{n}` is not a series")))
        })
        .collect()
}

pub fn vecm(ctx: &Context, r: usize) -> Result<VecmModel, CliError> {
    let k = ctx.panel.n_series();
    if r == 0 || r >= k {
        return Err(Error::RankSelection(format!(
            "rank {r} leaves no error-correction model to estimate for {k} series"
        )))
        .stage("vecm");
    }
    let setup = ctx.setup()?;
    fit_vecm_with_pivots(&setup, r, &pivots(ctx, r)?).stage("vecm")
}

fn se_cell(x: f64) -> Cell {
    if x.is_finite() && x > 0.0 {
        Cell::Stat(x)
    } else {
        Cell::Empty
    }
}

fn t_cell(se: f64, t: f64) -> Cell {
    if se.is_finite() && se > 0.0 {
        Cell::Stat(t)
    } else {
        Cell::Empty
    }
}

pub fn long_run(model: &VecmModel) -> Vec<String> {
    (0..model.rank)
        .map(|j| {
            let c = model.ce_constant.as_ref().map(|v| v[j]);
            long_run_equation(&model.beta, &model.level_names, j, model.pivots[j], c)
        })
        .collect()
}

pub fn vecm_tables(model: &VecmModel) -> Vec<Table> {
    let mut beta = Table::new(
        "vecm_beta",
        format!("Cointegrating vectors, rank {}, case {}", model.rank, model.case.number()),
        &["vector", "variable", "coefficient", "std_error", "t"],
    );
    for j in 0..model.rank {
        for (i, name) in model.level_names.iter().enumerate() {
            let se = model.beta_se[(i, j)];
            beta.push(vec![
                Cell::int(j + 1),
                Cell::text(name),
                Cell::Stat(model.beta[(i, j)]),
                se_cell(se),
                t_cell(se, model.beta_t[(i, j)]),
            ]);
        }
    }
    for eq in long_run(model) {
        beta.note(eq);
    }
    let mut alpha = Table::new(
        "vecm_alpha",
        "Adjustment coefficients",
        &["equation", "vector", "coefficient", "std_error", "t"],
    );
    for (i, name) in model.names.iter().enumerate() {
        for j in 0..model.rank {
            alpha.push(vec![
                Cell::text(name),
                Cell::int(j + 1),
                Cell::Stat(model.alpha[(i, j)]),
                Cell::Stat(model.alpha_se[(i, j)]),
                Cell::Stat(model.alpha_t[(i, j)]),
            ]);
        }
    }
    let mut coef = Table::new(
        "vecm_coefficients",
        format!("VECM with {} lagged differences", model.lags),
        &["equation", "regressor", "coefficient", "std_error", "t"],
    );
    let eqs: Vec<String> = model.names.iter().map(|n| format!("D({n})")).collect();
    coefficient_rows(
        &mut coef,
        &eqs,
        &model.regressor_names,
        &model.coef,
        &model.std_errors,
        &model.t_stats,
    );
    let s = &model.system;
    coef.note(format!(
        "observations {}, log likelihood {}, AIC {}, SC {}",
        model.n_eff,
        crate::report::format_stat(s.log_lik),
        crate::report::format_stat(s.aic),
        crate::report::format_stat(s.sc)
    ));
    vec![beta, alpha, coef]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerDecision {
    pub equation: String,
    pub excluded: String,
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
    pub reject: bool,
}

pub fn granger_table(results: &[GrangerResult], level: f64) -> (Table, Vec<GrangerDecision>) {
    let mut table = Table::new(
        "granger",
        "VECM Granger causality / block exogeneity Wald tests",
        &["equation", "excluded", "chi2", "df", "p"],
    );
    let mut out = Vec::new();
    for res in results {
        for row in &res.rows {
            table.push(vec![
                Cell::text(&res.equation),
                Cell::text(&row.excluded),
                Cell::Stat(row.chi2),
                Cell::int(row.df),
                Cell::P(row.p_value),
            ]);
            out.push(GrangerDecision {
                equation: res.equation.clone(),
                excluded: row.excluded.clone(),
                chi2: row.chi2,
                df: row.df,
                p: row.p_value,
                reject: row.p_value < level,
            });
        }
    }
    (table, out)
}

pub fn granger(ctx: &Context, model: &VecmModel) -> Result<(Table, Vec<GrangerDecision>), CliError> {
    let results = granger_wald(model).stage("granger")?;
    Ok(granger_table(&results, ctx.config.granger.level))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrDecision {
    pub hypothesis: String,
    pub lr: f64,
    pub df: usize,
    pub p: f64,
    pub reject: bool,
}

impl LrDecision {
    fn new(hypothesis: String, r: &RestrictionResult, level: f64) -> Self {
        Self {
            hypothesis,
            lr: r.lr,
            df: r.df,
            p: r.p_value,
            reject: r.rejects(level),
        }
    }
}

const LR_COLUMNS: [&str; 5] = ["hypothesis", "lr", "df", "p", "reject"];

fn lr_row(d: &LrDecision) -> Vec<Cell> {
    vec![
        Cell::text(&d.hypothesis),
        Cell::Stat(d.lr),
        Cell::int(d.df),
        Cell::P(d.p),
        Cell::flag(d.reject),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LopSummary {
    pub level: f64,
    pub pairs: Vec<LrDecision>,
    /// Pairs whose restriction is not rejected.
    pub not_rejected: Vec<String>,
    pub joint: Option<LrDecision>,
    pub notes: Vec<String>,
}

/// Pairwise LOP tests; untestable ranks give an empty table and a note.
pub fn lop_pairs(ctx: &Context, r: usize) -> Result<(Table, Vec<LrDecision>, Option<String>), CliError> {
    let level = ctx.config.lop.level;
    let mut table = Table::new(
        "lop_pairwise",
        format!("Pairwise law-of-one-price LR tests at {}%", percent(level)),
        &LR_COLUMNS,
    );
    let setup = ctx.setup()?;
    match pairwise_lop(&setup, r, level) {
        Ok(res) => {
            let out: Vec<LrDecision> = res
                .pairs
                .iter()
                .map(|p| LrDecision::new(p.label.clone(), &p.result, level))
                .collect();
            for d in &out {
                table.push(lr_row(d));
            }
            Ok((table, out, None))
        }
        Err(Error::Restriction(msg)) => {
            table.note(&msg);
            Ok((table, Vec::new(), Some(msg)))
        }
        Err(e) => Err(e).stage("lop"),
    }
}

pub fn lop_joint(ctx: &Context, r: usize) -> Result<(Table, Option<LrDecision>, Option<String>), CliError> {
    let level = ctx.config.lop.level;
    let mut table = Table::new(
        "lop_joint",
        format!("Joint law-of-one-price LR test at {}%", percent(level)),
        &LR_COLUMNS,
    );
    let setup = ctx.setup()?;
    match joint_lop_test(&setup, r) {
        Ok(res) => {
            let d = LrDecision::new("all pairs".into(), &res, level);
            table.push(lr_row(&d));
            Ok((table, Some(d), None))
        }
        Err(Error::Restriction(msg)) => {
            table.note(&msg);
            Ok((table, None, Some(msg)))
        }
        Err(e) => Err(e).stage("lop"),
    }
}

pub fn weak_exogeneity(ctx: &Context, r: usize) -> Result<(Table, Vec<LrDecision>), CliError> {
    let level = ctx.config.granger.level;
    let setup = ctx.setup()?;
    let mut table = Table::new(
        "weak_exogeneity",
        "Weak exogeneity LR tests (zero adjustment row)",
        &LR_COLUMNS,
    );
    let mut out = Vec::new();
    for (i, name) in ctx.panel.names().iter().enumerate() {
        let res = weak_exogeneity_test(&setup, r, &[i]).stage("weak-exogeneity")?;
        let d = LrDecision::new(format!("{name} weakly exogenous"), &res, level);
        table.push(lr_row(&d));
        out.push(d);
    }
    Ok((table, out))
}

pub fn ect_table(model: &VecmModel) -> Table {
    let (dates, values) = ect_series(model);
    let columns: Vec<String> = if model.rank == 1 {
        vec!["date".into(), "value".into()]
    } else {
        std::iter::once("date".to_string())
            .chain((1..=model.rank).map(|j| format!("ect{j}")))
            .collect()
    };
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new("ect", "Error-correction terms", &cols);
    for (i, d) in dates.iter().enumerate() {
        let mut row = vec![Cell::text(d.to_string())];
        row.extend((0..model.rank).map(|j| Cell::Stat(values[(i, j)])));
        table.push(row);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSummary {
    pub order: usize,
    pub constant: bool,
    pub trend: bool,
    pub dummies: Vec<String>,
    pub log_lik: f64,
    pub aic: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohansenSummary {
    pub case: u8,
    pub level: f64,
    pub policy: RankPolicy,
    pub eigenvalues: Vec<f64>,
    pub trace: Vec<f64>,
    pub trace_p: Vec<f64>,
    pub max_eigen: Vec<f64>,
    pub max_eigen_p: Vec<f64>,
    pub rank: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VecmSummary {
    pub lags: usize,
    pub pivots: Vec<String>,
    /// One entry per cointegrating vector, over the level variables.
    pub beta: Vec<Vec<f64>>,
    /// One entry per vector, over the equations.
    pub alpha: Vec<Vec<f64>>,
    pub alpha_t: Vec<Vec<f64>>,
    pub long_run: Vec<String>,
    pub log_lik: f64,
}

/// Machine-readable account of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub series: Vec<String>,
    pub first: String,
    pub last: String,
    pub n_obs: usize,
    pub log_prices: bool,
    pub integration: Vec<SeriesOrder>,
    pub lag_selection: SelectedLags,
    pub initial_var: Option<VarSummary>,
    pub var: VarSummary,
    pub respecification: Option<Respecification>,
    pub johansen: JohansenSummary,
    pub rank: usize,
    pub vecm: VecmSummary,
    pub granger_level: f64,
    pub granger: Vec<GrangerDecision>,
    pub lop: LopSummary,
    pub weak_exogeneity: Vec<LrDecision>,
    pub narrative: Vec<String>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serialises");
        s.push('\n');
        s
    }
}

/// Tables plus summary of a completed run.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub tables: Vec<Table>,
    /// Plot-ready series, always written as CSV.
    pub series: Vec<Table>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineOptions {
    pub auto_respec: bool,
}

fn var_summary(ctx: &Context, model: &VarModel, diag: Diagnostics, with_dummies: bool) -> VarSummary {
    VarSummary {
        order: model.order,
        constant: model.deterministic.constant,
        trend: model.deterministic.trend,
        dummies: if with_dummies {
            ctx.dummies.names.clone()
        } else {
            Vec::new()
        },
        log_lik: model.system.log_lik,
        aic: model.system.aic,
        diagnostics: diag,
    }
}

fn matrix_columns(m: &nalgebra::DMatrix<f64>, cols: usize) -> Vec<Vec<f64>> {
    (0..cols).map(|j| m.column(j).iter().copied().collect()).collect()
}

pub fn run_pipeline(config: &PipelineConfig, opts: PipelineOptions) -> Result<Bundle, CliError> {
    let mut ctx = ingest(config)?;
    let mut tables = Vec::new();
    let mut narrative = Vec::new();
    let names = ctx.panel.names().to_vec();
    let dates = ctx.panel.dates();
    let (first, last) = (dates[0].to_string(), dates[dates.len() - 1].to_string());
    narrative.push(format!(
        "{} series, {first} to {last}, {} observations{}",
        names.len(),
        ctx.panel.n_obs(),
        if config.data.log { ", natural logs" } else { "" }
    ));

    let (t, integration) = unit_roots(&ctx)?;
    tables.push(t);
    let i1: Vec<&str> = integration
        .iter()
        .filter(|s| s.order == "I(1)")
        .map(|s| s.series.as_str())
        .collect();
    narrative.push(if i1.len() == names.len() {
        "every series is I(1) at 5%".to_string()
    } else {
        format!("I(1) at 5%: {}", if i1.is_empty() { "none".into() } else { i1.join(", ") })
    });

    let (t, sel) = lag_selection(&ctx)?;
    tables.push(t);
    let s = sel.selected;
    narrative.push(format!(
        "lag selection: LR {}, FPE {}, AIC {}, SC {}, HQ {}",
        s.lr, s.fpe, s.aic, s.sc, s.hq
    ));

    let lm_lags = config.var.lm_lags;
    let mut initial_var = None;
    if let Some(p0) = config.var.initial_order {
        let m0 = var_model(&ctx, p0, false)?;
        tables.push(var_tables(&m0, "_initial"));
        let (diag_tables, diag) = diagnostics(&m0, lm_lags, "_initial")?;
        tables.extend(diag_tables);
        narrative.push(format!(
            "initial VAR({p0}): smallest LM p-value at lags 1-4 {}, normality p {}",
            crate::report::format_p(diag.serial_min_p_short),
            crate::report::format_p(diag.normality_p)
        ));
        initial_var = Some(var_summary(&ctx, &m0, diag, false));
    }

    let respecification = if opts.auto_respec {
        let start = config.initial_order();
        let r = auto_respecify(&mut ctx, start)?;
        narrative.push(format!(
            "automatic respecification: order {}{}, dummies added: {}",
            r.order,
            if r.serial_ok { "" } else { " (LM tests still reject at the maximum lag)" },
            if r.added_dummies.is_empty() { "none".into() } else { r.added_dummies.join(", ") }
        ));
        Some(r)
    } else {
        None
    };

    let order = ctx.config.var_order();
    let model = var_model(&ctx, order, true)?;
    tables.push(var_tables(&model, ""));
    let (diag_tables, diag) = diagnostics(&model, lm_lags, "")?;
    tables.extend(diag_tables);
    narrative.push(format!(
        "final VAR({order}) with {} dummies: smallest LM p-value at lags 1-4 {}, normality p {}, {}",
        ctx.dummies.n_dummies(),
        crate::report::format_p(diag.serial_min_p_short),
        crate::report::format_p(diag.normality_p),
        if diag.stable { "stable" } else { "not stable" }
    ));
    let var = var_summary(&ctx, &model, diag, true);

    let jo = johansen(&ctx)?;
    let (rank_tables, trace, max_eig) = rank_tests(&ctx, &jo)?;
    tables.extend(rank_tables);
    let choice = choose_rank(&ctx, &trace, &max_eig)?;
    let r = choice.rank;
    narrative.push(format!(
        "Johansen case {} at {}%: rank {r} ({} policy)",
        jo.case.number(),
        percent(config.johansen.level),
        policy_label(config.johansen.rank_policy)
    ));
    if let Some(w) = &choice.warning {
        narrative.push(w.clone());
    }
    let johansen_summary = JohansenSummary {
        case: jo.case.number(),
        level: config.johansen.level,
        policy: config.johansen.rank_policy,
        eigenvalues: jo.eigenvalues.clone(),
        trace: trace.rows.iter().map(|x| x.statistic).collect(),
        trace_p: trace.rows.iter().map(|x| x.p_value).collect(),
        max_eigen: max_eig.rows.iter().map(|x| x.statistic).collect(),
        max_eigen_p: max_eig.rows.iter().map(|x| x.p_value).collect(),
        rank: r,
        warning: choice.warning.clone(),
    };

    let vm = vecm(&ctx, r)?;
    tables.extend(vecm_tables(&vm));
    let lr_eqs = long_run(&vm);
    for eq in &lr_eqs {
        narrative.push(format!("long-run relation: {eq}"));
    }
    let vecm_summary = VecmSummary {
        lags: vm.lags,
        pivots: vm.pivots.iter().map(|&i| names[i].clone()).collect(),
        beta: matrix_columns(&vm.beta, r),
        alpha: matrix_columns(&vm.alpha, r),
        alpha_t: matrix_columns(&vm.alpha_t, r),
        long_run: lr_eqs,
        log_lik: vm.system.log_lik,
    };

    let (t, granger_rows) = granger(&ctx, &vm)?;
    tables.push(t);
    let causal: Vec<String> = granger_rows
        .iter()
        .filter(|g| g.reject && g.excluded != "All")
        .map(|g| format!("{} -> {}", g.excluded, g.equation))
        .collect();
    narrative.push(format!(
        "Granger causality at {}%: {}",
        percent(config.granger.level),
        if causal.is_empty() { "none".into() } else { causal.join(", ") }
    ));

    let (t, pairs, pair_note) = lop_pairs(&ctx, r)?;
    tables.push(t);
    let (t, joint, joint_note) = lop_joint(&ctx, r)?;
    tables.push(t);
    let not_rejected: Vec<String> = pairs
        .iter()
        .filter(|d| !d.reject)
        .map(|d| d.hypothesis.clone())
        .collect();
    if pair_note.is_none() {
        narrative.push(format!(
            "LOP at {}% not rejected for: {}",
            percent(config.lop.level),
            if not_rejected.is_empty() { "no pair".into() } else { not_rejected.join(", ") }
        ));
    }
    let lop = LopSummary {
        level: config.lop.level,
        pairs,
        not_rejected,
        joint,
        notes: pair_note.into_iter().chain(joint_note).collect(),
    };

    let (t, weak) = weak_exogeneity(&ctx, r)?;
    tables.push(t);
    let exo: Vec<&str> = weak
        .iter()
        .zip(&names)
        .filter(|(d, _)| !d.reject)
        .map(|(_, n)| n.as_str())
        .collect();
    narrative.push(format!(
        "weakly exogenous at {}%: {}",
        percent(config.granger.level),
        if exo.is_empty() { "none".into() } else { exo.join(", ") }
    ));

    let summary = Summary {
        series: names,
        first,
        last,
        n_obs: ctx.panel.n_obs(),
        log_prices: config.data.log,
        integration,
        lag_selection: sel.selected,
        initial_var,
        var,
        respecification,
        johansen: johansen_summary,
        rank: r,
        vecm: vecm_summary,
        granger_level: config.granger.level,
        granger: granger_rows,
        lop,
        weak_exogeneity: weak,
        narrative,
    };
    Ok(Bundle {
        tables,
        series: vec![ect_table(&vm)],
        summary,
    })
}

/// Writes every table in each format, the series as CSV, `summary.json` and
/// `narrative.txt`.
pub fn write_bundle(bundle: &Bundle, dir: &Path, formats: &[Format]) -> Result<(), CliError> {
    let formats: BTreeSet<Format> = formats.iter().copied().collect();
    for table in &bundle.tables {
        for &f in &formats {
            emit_table(table, dir, f)?;
        }
    }
    for s in &bundle.series {
        emit_table(s, dir, Format::Csv)?;
    }
    write_file(&dir.join("summary.json"), &bundle.summary.to_json())?;
    let mut text = bundle.summary.narrative.join("\n");
    text.push('\n');
    write_file(&dir.join("narrative.txt"), &text)
}
