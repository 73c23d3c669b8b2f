//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p lopcoint-cli --test acceptance -- --nocapture`.
//! The fixture checks need `data/bls_beef_fillet.csv`, which is not
//! shipped; without it they print FAIL and are not asserted here. The
//! ignored test `fixture_reproduction` asserts them and fails when the file
//! is missing.

use std::path::{Path, PathBuf};
use std::time::Instant;

use lopcoint::data::{difference, integrate, DummyMatrix, PricePanel, YearMonth};
use lopcoint::johansen::{
    max_eigen_test, reduced_rank_regression, select_rank, trace_test, JohansenCase, RankPolicy,
};
use lopcoint::simulate::{
    adf_size, generate, granger_size, lop_non_rejection, rank_one_pair_spec, rank_recovery, Dgp,
    SimulationSpec,
};
use lopcoint::unit_root::{adf_test, Deterministic, LagCriterion};
use lopcoint::var::{companion_roots, fit_var, VarDeterministic};
use lopcoint::vecm::{
    fit_vecm, restriction_lr_test, var_to_vecm, weak_exogeneity_test, RestrictionSpec,
    SwitchingOptions, VecmSetup,
};
use lopcoint_cli::config::PipelineConfig;
use lopcoint_cli::pipeline::{self, run_pipeline, PipelineOptions, Summary};
use nalgebra::{Complex, DMatrix};

#[derive(Default)]
struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        let detail = detail.into();
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((name.to_string(), pass, detail));
    }

    fn failures(&self, prefix: &str) -> Vec<String> {
        self.lines
            .iter()
            .filter(|(n, pass, _)| n.starts_with(prefix) && !pass)
            .map(|(n, _, d)| format!("{n}: {d}"))
            .collect()
    }
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("y{}", i + 1)).collect()
}

fn start() -> YearMonth {
    YearMonth::new(1990, 1).unwrap()
}

fn no_dummies(p: &PricePanel) -> DummyMatrix {
    DummyMatrix::empty(p.dates())
}

fn panel(dgp: Dgp, k: usize, n: usize, seed: u64, rep: u64) -> PricePanel {
    generate(&SimulationSpec::new(dgp, names(k), n, start()), seed, rep).unwrap()
}

fn stationary_var(n: usize, rep: u64) -> PricePanel {
    let dgp = Dgp::Var {
        intercept: vec![0.1, -0.2, 0.05],
        lags: vec![
            vec![0.4, 0.1, 0.0, -0.1, 0.3, 0.1, 0.0, 0.2, 0.2],
            vec![0.1, 0.0, 0.05, 0.0, 0.1, 0.0, -0.05, 0.0, 0.1],
        ],
    };
    panel(dgp, 3, n, 11, rep)
}

fn rank_one_triple(n: usize, rep: u64) -> PricePanel {
    let dgp = Dgp::Vecm {
        intercept: vec![0.01, 0.0, -0.01],
        alpha: vec![-0.3, 0.1, 0.2],
        beta: vec![1.0, -0.5, -0.5],
        gamma: vec![vec![0.2, 0.0, 0.1, 0.0, 0.1, 0.0, 0.1, 0.0, 0.2]],
    };
    panel(dgp, 3, n, 31, rep)
}

/// LU solve of the normal equations with iterative refinement.
fn normal_equations(y: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let lu = (x.transpose() * x).lu();
    let mut b = lu.solve(&(x.transpose() * y)).expect("singular normal equations");
    for _ in 0..4 {
        let r = y - x * &b;
        b += lu.solve(&(x.transpose() * r)).unwrap();
    }
    b
}

fn residualize(y: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    y - x * normal_equations(y, x)
}

fn oracle_ols(report: &mut Report) {
    let mut worst = 0.0f64;
    for rep in 0..20 {
        let panel = stationary_var(150, rep);
        let p = 1 + (rep as usize % 3);
        let model = fit_var(&panel, p, VarDeterministic::CONSTANT_TREND, &no_dummies(&panel)).unwrap();
        let y = panel.values().rows(model.first_row, model.n_eff).into_owned();
        worst = worst.max((&model.coef - normal_equations(&y, model.design())).amax());
    }
    report.check(
        "oracle/ols-vs-normal-equations",
        worst < 1e-10,
        format!("max |diff| {worst:.2e} over 20 problems (< 1e-10)"),
    );
}

/// Roots of a complex polynomial (ascending coefficients) by Durand-Kerner.
fn poly_roots(p: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let lead = *p.last().unwrap();
    let monic: Vec<Complex<f64>> = p.iter().map(|c| c / lead).collect();
    let n = monic.len() - 1;
    let eval = |z: Complex<f64>| monic.iter().rev().fold(Complex::new(0.0, 0.0), |a, c| a * z + c);
    let seed = Complex::new(0.4, 0.9);
    let mut z: Vec<Complex<f64>> = (0..n).map(|i| seed.powu(i as u32)).collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

fn oracle_roots(report: &mut Report) {
    let mut worst = 0.0f64;
    let mut state = 0x2545F4914F6CDD1Du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 1.2 - 0.6
    };
    for trial in 0..20 {
        let p = 1 + trial % 3;
        let lags: Vec<DMatrix<f64>> = (0..p).map(|_| DMatrix::from_fn(2, 2, |_, _| next())).collect();
        // det(λ^p I - Σ A_i λ^{p-i}) for K = 2.
        let entry = |i: usize, j: usize| -> Vec<Complex<f64>> {
            let mut c = vec![Complex::new(0.0, 0.0); p + 1];
            if i == j {
                c[p] = Complex::new(1.0, 0.0);
            }
            for (l, a) in lags.iter().enumerate() {
                c[p - 1 - l] -= Complex::new(a[(i, j)], 0.0);
            }
            c
        };
        let mul = |a: &[Complex<f64>], b: &[Complex<f64>]| {
            let mut out = vec![Complex::new(0.0, 0.0); a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        };
        let d = mul(&entry(0, 0), &entry(1, 1));
        let o = mul(&entry(0, 1), &entry(1, 0));
        let charpoly: Vec<Complex<f64>> = d.iter().zip(&o).map(|(a, b)| a - b).collect();
        let got = companion_roots(&lags);
        for z in poly_roots(&charpoly) {
            let dist = got
                .roots
                .iter()
                .map(|r| (Complex::new(r.re, r.im) - z).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(dist);
        }
    }
    report.check(
        "oracle/companion-roots-vs-characteristic-polynomial",
        worst < 1e-8,
        format!("max root distance {worst:.2e} (< 1e-8)"),
    );
}

fn oracle_johansen(report: &mut Report) {
    let mut worst = 0.0f64;
    for rep in 0..5 {
        let panel = generate(&rank_one_pair_spec(300, None), 21, rep).unwrap();
        let result = reduced_rank_regression(
            &panel,
            2,
            JohansenCase::UnrestrictedConstant,
            &no_dummies(&panel),
        )
        .unwrap();
        let y = panel.values();
        let rows = y.nrows() - 2;
        let dy = DMatrix::from_fn(rows, 2, |i, j| y[(i + 2, j)] - y[(i + 1, j)]);
        let lev = DMatrix::from_fn(rows, 2, |i, j| y[(i + 1, j)]);
        let z = DMatrix::from_fn(rows, 3, |i, j| {
            if j == 0 {
                1.0
            } else {
                y[(i + 1, j - 1)] - y[(i, j - 1)]
            }
        });
        let r0 = residualize(&dy, &z);
        let r1 = residualize(&lev, &z);
        let t = rows as f64;
        let s00 = r0.transpose() * &r0 / t;
        let s01 = r0.transpose() * &r1 / t;
        let s11 = r1.transpose() * &r1 / t;
        let m = s11.try_inverse().unwrap() * s01.transpose() * s00.try_inverse().unwrap() * &s01;
        let (tr, det) = (m.trace(), m.determinant());
        let disc = (tr * tr - 4.0 * det).sqrt();
        for (a, b) in result.eigenvalues.iter().zip([(tr + disc) / 2.0, (tr - disc) / 2.0]) {
            worst = worst.max((a - b).abs());
        }
    }
    report.check(
        "oracle/johansen-eigenvalues-vs-dense-solution",
        worst < 1e-9,
        format!("max eigenvalue difference {worst:.2e} (< 1e-9)"),
    );
}

fn oracle_vecm_var(report: &mut Report) {
    let mut worst = 0.0f64;
    for rep in 0..20 {
        let panel = rank_one_triple(200, rep);
        let model =
            fit_vecm(&panel, 2, 1, JohansenCase::UnrestrictedConstant, &no_dummies(&panel)).unwrap();
        let pis = model.to_levels_var();
        let c = model.regressor_names.iter().position(|n| n == "C").unwrap();
        let mu = model.coef.row(c).transpose();
        let y = panel.values();
        let first = panel.n_obs() - model.n_eff;
        for (i, t) in (first..panel.n_obs()).enumerate() {
            let mut fitted = mu.clone() + model.resid.row(i).transpose();
            for (l, a) in pis.iter().enumerate() {
                fitted += a * y.row(t - 1 - l).transpose();
            }
            worst = worst.max((y.row(t).transpose() - fitted).amax());
        }
        let (pi, gamma) = var_to_vecm(&pis);
        worst = worst.max((pi - model.pi()).amax());
        for (g, h) in gamma.iter().zip(&model.gamma) {
            worst = worst.max((g - h).amax());
        }
    }
    report.check(
        "oracle/vecm-var-rewriting-identity",
        worst < 1e-8,
        format!("max identity error {worst:.2e} over 20 datasets (< 1e-8)"),
    );
}

fn monte_carlo(report: &mut Report) {
    let started = Instant::now();
    let t = adf_size(250, 2000, 101, 0.05).unwrap();
    report.check(
        "monte-carlo/adf-size",
        (0.035..=0.065).contains(&t.rate()),
        format!("{}/{} = {:.4} rejections at 5% (in [0.035, 0.065])", t.hits, t.reps, t.rate()),
    );
    let t = rank_recovery(1000, 200, 202, 0.05).unwrap();
    report.check(
        "monte-carlo/johansen-rank-recovery",
        t.rate() >= 0.90,
        format!("{}/{} = {:.4} select rank 1 (>= 0.90)", t.hits, t.reps, t.rate()),
    );
    let t = lop_non_rejection(500, 200, 303, 0.05).unwrap();
    report.check(
        "monte-carlo/lop-non-rejection",
        (0.90..=0.98).contains(&t.rate()),
        format!("{}/{} = {:.4} not rejected at 5% (in [0.90, 0.98])", t.hits, t.reps, t.rate()),
    );
    let t = granger_size(300, 500, 404, 0.05).unwrap();
    report.check(
        "monte-carlo/granger-size",
        (0.03..=0.07).contains(&t.rate()),
        format!("{}/{} = {:.4} rejections at 5% (in [0.03, 0.07])", t.hits, t.reps, t.rate()),
    );
    let secs = started.elapsed().as_secs_f64();
    report.check(
        "monte-carlo/runtime",
        secs < 120.0,
        format!("{secs:.1} s (< 120 s)"),
    );
}

/// Deterministic spot checks of each module's invariants. The randomised
/// versions live in the core crate's property tests.
fn invariants(report: &mut Report) {
    // Data: differencing then integrating restores the series.
    let p = stationary_var(120, 0);
    let d = difference(&p).unwrap();
    let mut worst = 0.0f64;
    for k in 0..p.n_series() {
        let y = p.series(k);
        let back = integrate(y[0], &d.series(k));
        worst = worst.max(y.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    report.check(
        "invariant/difference-integrate-round-trip",
        worst < 1e-12,
        format!("max error {worst:.2e}"),
    );

    // Unit roots: ADF is invariant to affine rescaling.
    let rw = panel(Dgp::RandomWalk, 1, 200, 5, 0).series(0);
    let scaled: Vec<f64> = rw.iter().map(|x| 3.5 * x - 7.0).collect();
    let a = adf_test(&rw, Deterministic::Constant, 8, LagCriterion::Aic).unwrap();
    let b = adf_test(&scaled, Deterministic::Constant, 8, LagCriterion::Aic).unwrap();
    let diff = (a.statistic - b.statistic).abs();
    report.check(
        "invariant/adf-scale-invariance",
        diff < 1e-9 && a.lags_or_bandwidth == b.lags_or_bandwidth,
        format!("statistic difference {diff:.2e}"),
    );

    // Johansen: trace(r) is the sum of max-eigenvalue statistics from r on.
    let tri = rank_one_triple(250, 3);
    let jo = reduced_rank_regression(&tri, 2, JohansenCase::RestrictedConstant, &no_dummies(&tri)).unwrap();
    let worst = (0..jo.trace.len())
        .map(|r| (jo.trace[r] - jo.max_eigen[r..].iter().sum::<f64>()).abs())
        .fold(0.0, f64::max);
    let ordered = jo.eigenvalues.windows(2).all(|w| w[0] >= w[1])
        && jo.eigenvalues.iter().all(|l| (0.0..1.0).contains(l));
    report.check(
        "invariant/trace-maxeig-identity",
        worst < 1e-10 && ordered,
        format!("max identity error {worst:.2e}, eigenvalues ordered in [0, 1)"),
    );

    // VECM restrictions: LR >= 0, and the unrestricted estimate imposed as a
    // restriction gives LR = 0.
    let empty = no_dummies(&tri);
    let setup = VecmSetup::new(&tri, 1, JohansenCase::RestrictedConstant, &empty);
    let lr = restriction_lr_test(
        &setup,
        1,
        &RestrictionSpec::parse("1,-1,0,*").unwrap(),
        &SwitchingOptions::default(),
    )
    .unwrap();
    let model = fit_vecm(&tri, 1, 1, JohansenCase::RestrictedConstant, &empty).unwrap();
    let own: Vec<String> = model.beta.column(0).iter().map(|b| format!("{b:.17e}")).collect();
    let nested = restriction_lr_test(
        &setup,
        1,
        &RestrictionSpec::parse(&own.join(",")).unwrap(),
        &SwitchingOptions::default(),
    )
    .unwrap();
    report.check(
        "invariant/restriction-lr",
        lr.lr >= 0.0 && lr.log_lik_restricted <= lr.log_lik_unrestricted + 1e-9 && nested.lr < 1e-6,
        format!("LR {:.4} >= 0, nested-optimum LR {:.2e}", lr.lr, nested.lr),
    );
    let weak = weak_exogeneity_test(&setup, 1, &[0]).unwrap();
    report.check(
        "invariant/weak-exogeneity-lr",
        weak.lr >= 0.0 && weak.df == 1,
        format!("LR {:.4}, df {}", weak.lr, weak.df),
    );

    // Simulation is a pure function of (spec, seed, replication).
    let spec = rank_one_pair_spec(100, None);
    let same = generate(&spec, 9, 4).unwrap() == generate(&spec, 9, 4).unwrap();
    let differ = generate(&spec, 9, 4).unwrap() != generate(&spec, 9, 5).unwrap();
    report.check("invariant/simulation-determinism", same && differ, "same seed equal, other stream differs");

    // Pipeline: summary survives JSON and reruns agree.
    let config = PipelineConfig::from_file(&repo().join("configs/synthetic.toml")).unwrap();
    let a = run_pipeline(&config, PipelineOptions::default()).unwrap();
    let b = run_pipeline(&config, PipelineOptions::default()).unwrap();
    let parsed: Summary = serde_json::from_str(&a.summary.to_json()).unwrap();
    let texts_equal = a
        .tables
        .iter()
        .zip(&b.tables)
        .all(|(x, y)| x.to_csv() == y.to_csv() && x.to_text() == y.to_text());
    report.check(
        "invariant/pipeline-determinism-and-json-round-trip",
        parsed == a.summary && texts_equal && a.summary == b.summary,
        format!("{} tables compared", a.tables.len()),
    );
}

const FIXTURE: &str = "data/bls_beef_fillet.csv";

struct FixtureRef;

impl FixtureRef {
    /// ADF and PP level statistics per series (MW, NE, SO, WE).
    const LEVEL_STATS: [(f64, f64); 4] = [(-1.02, -1.21), (-1.19, -1.12), (-1.25, -1.16), (-0.84, -0.84)];
    const AIC_LAG3: f64 = -19.48544;
    const TRACE0: f64 = 50.02568;
    const MAXEIG0: f64 = 28.26276;
    const BETA: [f64; 4] = [1.0, 1.9085, -1.1484, -1.7319];
    /// (equation, excluded, rejected at 5%).
    const GRANGER: [(&'static str, &'static str, bool); 12] = [
        ("MW", "NE", false),
        ("MW", "SO", false),
        ("MW", "WE", false),
        ("NE", "MW", true),
        ("NE", "SO", false),
        ("NE", "WE", false),
        ("SO", "MW", true),
        ("SO", "NE", true),
        ("SO", "WE", true),
        ("WE", "MW", false),
        ("WE", "NE", true),
        ("WE", "SO", false),
    ];
    /// Rejected pairs and their LR statistics; NE-WE is not rejected.
    const LOP: [(&'static str, f64); 5] = [
        ("MW-NE", 18.38),
        ("MW-SO", 19.73),
        ("MW-WE", 16.75),
        ("NE-SO", 22.44),
        ("SO-WE", 19.74),
    ];
}

fn fixture_checks(report: &mut Report) {
    let path = repo().join(FIXTURE);
    let names = [
        "fixture/unit-root-table",
        "fixture/lag-selection",
        "fixture/rank-tests",
        "fixture/vecm-beta-alpha",
        "fixture/granger-decisions",
        "fixture/lop-decisions",
    ];
    if !path.exists() {
        for n in names {
            report.check(n, false, format!("{FIXTURE} not present; cannot be evaluated"));
        }
        return;
    }
    let config = PipelineConfig::from_file(&repo().join("configs/bls_beef.toml")).unwrap();
    let ctx = pipeline::ingest(&config).unwrap();

    let started = Instant::now();
    let (_, orders) = pipeline::unit_roots(&ctx).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    let mut decisions = true;
    for (o, (adf, pp)) in orders.iter().zip(FixtureRef::LEVEL_STATS) {
        worst = worst.max((o.adf_level - adf).abs()).max((o.pp_level - pp).abs());
        decisions &= o.adf_level_p >= 0.01 && o.pp_level_p >= 0.01;
        decisions &= o.adf_diff_p < 0.01 && o.pp_diff_p < 0.01;
    }
    report.check(
        names[0],
        worst <= 0.10 && decisions && secs < 1.0,
        format!("max level-statistic deviation {worst:.3} (<= 0.10), decisions match: {decisions}, {secs:.3} s"),
    );

    let (_, sel) = pipeline::lag_selection(&ctx).unwrap();
    let s = sel.selected;
    let aic3 = sel.rows[3].aic;
    report.check(
        names[1],
        s.aic == 3 && s.fpe == 3 && s.sc == 2 && s.hq == 2 && s.lr == 4 && (aic3 - FixtureRef::AIC_LAG3).abs() <= 0.01,
        format!(
            "AIC {} FPE {} SC {} HQ {} LR {}, AIC(3) = {aic3:.5}",
            s.aic, s.fpe, s.sc, s.hq, s.lr
        ),
    );

    let jo = pipeline::johansen(&ctx).unwrap();
    let trace = trace_test(&jo, 0.05).unwrap();
    let maxeig = max_eigen_test(&jo, 0.05).unwrap();
    let agree = select_rank(&trace, &maxeig, RankPolicy::Agree).map(|c| c.rank);
    report.check(
        names[2],
        (jo.trace[0] - FixtureRef::TRACE0).abs() <= 1.0
            && (jo.max_eigen[0] - FixtureRef::MAXEIG0).abs() <= 1.0
            && agree.as_ref().is_ok_and(|r| *r == 1),
        format!("trace(0) {:.4}, maxeig(0) {:.4}, rank {agree:?}", jo.trace[0], jo.max_eigen[0]),
    );

    let s = run_pipeline(&config, PipelineOptions::default()).unwrap().summary;
    let beta = &s.vecm.beta[0];
    let beta_dev = beta.iter().zip(FixtureRef::BETA).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let alpha = &s.vecm.alpha[0];
    let sig: Vec<bool> = s.vecm.alpha_t[0].iter().map(|t| t.abs() > 1.96).collect();
    let alpha_ok = !sig[0] && sig[1] && alpha[1] < 0.0 && sig[2] && alpha[2] < 0.0 && sig[3] && alpha[3] > 0.0;
    report.check(
        names[3],
        beta_dev <= 0.02 && alpha_ok,
        format!("beta {beta:.4?} (max deviation {beta_dev:.4}), alpha pattern match: {alpha_ok}"),
    );

    let mismatched: Vec<String> = FixtureRef::GRANGER
        .iter()
        .filter(|(eq, ex, rej)| {
            s.granger
                .iter()
                .find(|g| g.equation == *eq && g.excluded == *ex)
                .is_none_or(|g| g.reject != *rej)
        })
        .map(|(eq, ex, _)| format!("{ex}->{eq}"))
        .collect();
    report.check(
        names[4],
        mismatched.is_empty(),
        format!("{} of 12 decisions differ {mismatched:?}", mismatched.len()),
    );

    let mut lop_ok = s.lop.not_rejected == vec!["NE-WE".to_string()];
    let mut detail = format!("not rejected at 1%: {:?}", s.lop.not_rejected);
    for (pair, lr) in FixtureRef::LOP {
        match s.lop.pairs.iter().find(|d| d.hypothesis == pair) {
            Some(d) => {
                lop_ok &= d.reject && (d.lr - lr).abs() <= 2.0;
                detail.push_str(&format!(", {pair} {:.2}", d.lr));
            }
            None => lop_ok = false,
        }
    }
    report.check(names[5], lop_ok, detail);
}

#[test]
fn acceptance_suite() {
    let mut report = Report::default();
    fixture_checks(&mut report);
    oracle_ols(&mut report);
    oracle_roots(&mut report);
    oracle_johansen(&mut report);
    oracle_vecm_var(&mut report);
    monte_carlo(&mut report);
    invariants(&mut report);
    let passed = report.lines.iter().filter(|l| l.1).count();
    println!("{passed}/{} criteria passed", report.lines.len());

    let mut failures = Vec::new();
    for prefix in ["oracle/", "monte-carlo/", "invariant/"] {
        failures.extend(report.failures(prefix));
    }
    if repo().join(FIXTURE).exists() {
        failures.extend(report.failures("fixture/"));
    }
    assert!(failures.is_empty(), "failed criteria: {failures:#?}");
}

#[test]
#[ignore = "requires the BLS fixture data/bls_beef_fillet.csv"]
fn fixture_reproduction() {
    let mut report = Report::default();
    fixture_checks(&mut report);
    let failures = report.failures("fixture/");
    assert!(failures.is_empty(), "failed criteria: {failures:#?}");
}
