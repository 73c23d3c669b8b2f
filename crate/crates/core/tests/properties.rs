mod common;

use common::*;
use lopcoint::data::{
    build_dummies, difference_series, integrate, read_panel, DummySpec, RegionColumn, YearMonth,
};
use lopcoint::johansen::{reduced_rank_regression, JohansenCase};
use lopcoint::simulate::{generate, Dgp, SimulationSpec};
use lopcoint::unit_root::{adf_test, mackinnon_pvalue, Deterministic, LagCriterion};
use lopcoint::var::{
    fit_var, fit_var_from, jarque_bera_test, stability_roots, VarDeterministic,
};
use lopcoint::vecm::{
    fit_vecm, fit_vecm_with_pivots, granger_wald, joint_lop_test, normalize_beta, pairwise_lop,
    restriction_lr_test, weak_exogeneity_from_moments, Entry, RestrictionSpec, SwitchingOptions,
    VecmSetup,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    // ---- data ----

    #[test]
    fn difference_then_integrate(xs in prop::collection::vec(-1e3f64..1e3, 2..60)) {
        let back = integrate(xs[0], &difference_series(&xs));
        for (a, b) in xs.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0) * xs.len() as f64);
        }
    }

    #[test]
    fn month_text_round_trip(year in 1900i32..2100, month in 1u8..=12) {
        let m = YearMonth::new(year, month).unwrap();
        let back: YearMonth = m.to_string().parse().unwrap();
        prop_assert_eq!(m, back);
        prop_assert_eq!(YearMonth::from_ordinal(m.ordinal()), m);
    }

    #[test]
    fn panel_reading_is_deterministic(values in prop::collection::vec(0.5f64..10.0, 24)) {
        let mut text = String::from("date,a,b\n");
        for i in 0..12 {
            let d = YearMonth::new(2001, 1).unwrap().add_months(i as i64);
            text.push_str(&format!("{d},{},{}\n", values[2 * i], values[2 * i + 1]));
        }
        let cols = RegionColumn::parse_list("a,b").unwrap();
        let p1 = read_panel(text.as_bytes(), &cols).unwrap();
        let p2 = read_panel(text.as_bytes(), &cols).unwrap();
        prop_assert_eq!(p1, p2);
    }

    #[test]
    fn dummy_sums_equal_month_counts(offsets in prop::collection::btree_set(0i64..48, 1..6)) {
        let dates: Vec<YearMonth> = (0..48).map(|i| YearMonth::new(2000, 1).unwrap().add_months(i)).collect();
        let mut spec = DummySpec::new();
        spec.push("D", offsets.iter().map(|&o| dates[o as usize])).unwrap();
        let d = build_dummies(&spec, &dates).unwrap();
        prop_assert_eq!(d.values.column(0).sum(), offsets.len() as f64);
    }

    // ---- unit roots ----

    #[test]
    fn adf_scale_and_shift_invariance(seed in 0u64..1000, a in 0.01f64..100.0, b in -50f64..50.0) {
        let y = generate(&SimulationSpec::new(Dgp::RandomWalk, names(1), 120, start()), seed, 0).unwrap().series(0);
        let base = adf_test(&y, Deterministic::Constant, 4, LagCriterion::Fixed).unwrap().statistic;
        let scaled: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let s = adf_test(&scaled, Deterministic::Constant, 4, LagCriterion::Fixed).unwrap().statistic;
        prop_assert!((base - s).abs() < 1e-9, "{} vs {}", base, s);
        let trend = adf_test(&y, Deterministic::ConstantTrend, 2, LagCriterion::Fixed).unwrap().statistic;
        let st = adf_test(&scaled, Deterministic::ConstantTrend, 2, LagCriterion::Fixed).unwrap().statistic;
        prop_assert!((trend - st).abs() < 1e-9);
    }

    #[test]
    fn adf_lag_choice_minimises_aic(seed in 0u64..1000, max_lag in 0usize..8) {
        let spec = SimulationSpec::new(
            Dgp::Var { intercept: vec![0.0], lags: vec![vec![1.3], vec![-0.3]] },
            names(1), 150, start(),
        );
        let y = generate(&spec, seed, 0).unwrap().series(0);
        let res = adf_test(&y, Deterministic::Constant, max_lag, LagCriterion::Aic).unwrap();
        prop_assert!(res.lags_or_bandwidth <= max_lag);
        // independent recomputation on the common sample
        let start_row = max_lag + 1;
        let n = y.len() - start_row;
        let ic: Vec<f64> = (0..=max_lag).map(|k| {
            let x = DMatrix::from_fn(n, k + 2, |r, c| {
                let t = r + start_row;
                match c {
                    0 => y[t - 1],
                    c if c <= k => y[t - c] - y[t - c - 1],
                    _ => 1.0,
                }
            });
            let dy = DMatrix::from_fn(n, 1, |r, _| y[r + start_row] - y[r + start_row - 1]);
            let ssr = residualize(&dy, &x).norm_squared();
            n as f64 * (ssr / n as f64).ln() + 2.0 * (k + 2) as f64
        }).collect();
        let chosen = res.lags_or_bandwidth;
        let best = ic.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(ic[chosen] <= best + 1e-8);
        for v in &ic[..chosen] {
            prop_assert!(*v > ic[chosen] - 1e-8);
        }
    }

    #[test]
    fn mackinnon_pvalue_monotone_and_continuous(x in -8.0f64..3.0) {
        for spec in [Deterministic::None, Deterministic::Constant, Deterministic::ConstantTrend] {
            let p = mackinnon_pvalue(x, spec);
            let q = mackinnon_pvalue(x + 1e-3, spec);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(q >= p);
            prop_assert!(q - p < 5e-3);
        }
    }

    // ---- VAR ----

    #[test]
    fn var_residuals_orthogonal_and_criteria_consistent(seed in 0u64..1000, p in 1usize..4) {
        let panel = stationary_var(120, seed, 0);
        let model = fit_var(&panel, p, VarDeterministic::CONSTANT, &no_dummies(&panel)).unwrap();
        let xe = model.design().transpose() * &model.resid;
        prop_assert!(xe.amax() < 1e-8 * model.design().amax() * 100.0);
        let t = model.n_eff as f64;
        let n = (model.n_series() * model.n_regressors()) as f64;
        let ll = model.system.log_lik;
        prop_assert!((model.system.aic - (-2.0 * ll / t + 2.0 * n / t)).abs() < 1e-6);
        prop_assert!((model.system.sc - (-2.0 * ll / t + n * t.ln() / t)).abs() < 1e-6);
        prop_assert!((model.system.hq - (-2.0 * ll / t + 2.0 * n * t.ln().ln() / t)).abs() < 1e-6);
        let jb = jarque_bera_test(&model).unwrap();
        let sum: f64 = jb.components.iter().map(|c| c.jb).sum();
        prop_assert!((jb.joint - sum).abs() <= 1e-12 * sum.max(1.0));
        let roots = stability_roots(&model).roots;
        prop_assert_eq!(roots.len(), model.n_series() * p);
        for r in roots.iter().filter(|r| r.im.abs() > 1e-12) {
            let partner = roots.iter().any(|s| (s.re - r.re).abs() < 1e-12 && (s.im + r.im).abs() < 1e-12);
            prop_assert!(partner);
            let m = roots.iter().filter(|s| (s.modulus - r.modulus).abs() < 1e-12).count();
            prop_assert!(m >= 2);
        }
    }

    #[test]
    fn redundant_lag_never_lowers_likelihood(seed in 0u64..1000, p in 1usize..4) {
        let panel = stationary_var(100, seed, 1);
        let d = no_dummies(&panel);
        let small = fit_var_from(&panel, p, VarDeterministic::CONSTANT, &d, p + 1).unwrap();
        let big = fit_var_from(&panel, p + 1, VarDeterministic::CONSTANT, &d, p + 1).unwrap();
        prop_assert!(big.system.log_lik >= small.system.log_lik - 1e-9);
    }

    // ---- Johansen ----

    #[test]
    fn johansen_identities_and_scale_invariance(seed in 0u64..1000, scale in 0.01f64..100.0, col in 0usize..3, case_no in 1u8..=5) {
        let case = JohansenCase::from_number(case_no).unwrap();
        let panel = rank_one_triple(150, seed, 0);
        let d = no_dummies(&panel);
        let res = reduced_rank_regression(&panel, 2, case, &d).unwrap();
        let k = res.n_series();
        for w in res.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for l in &res.eigenvalues {
            prop_assert!(*l >= -1e-10 && *l < 1.0);
        }
        for r in 0..k {
            let next = if r + 1 < k { res.trace[r + 1] } else { 0.0 };
            prop_assert!((res.trace[r] - next - res.max_eigen[r]).abs() < 1e-9);
        }
        let total: f64 = res.max_eigen.iter().sum();
        prop_assert!((total - res.trace[0]).abs() < 1e-9);

        // S10 S00^{-1} S01 = S11 V Λ V' S11 with V' S11 V = I
        let m = &res.moments;
        let (vals, vecs) = m.eigen().unwrap();
        let lhs = m.s01.transpose() * m.s00.clone().try_inverse().unwrap() * &m.s01;
        let rhs = &m.s11 * &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose() * &m.s11;
        prop_assert!((lhs - rhs).amax() < 1e-8 * m.s11.amax().max(1.0));
        let gram = vecs.transpose() * &m.s11 * &vecs;
        prop_assert!((gram - DMatrix::identity(vecs.ncols(), vecs.ncols())).amax() < 1e-8);

        let mut values = panel.values().clone();
        values.column_mut(col).scale_mut(scale);
        let scaled = lopcoint::data::PricePanel::new(panel.dates().to_vec(), panel.names().to_vec(), values, panel.scale()).unwrap();
        let res2 = reduced_rank_regression(&scaled, 2, case, &d).unwrap();
        for (a, b) in res.eigenvalues.iter().zip(&res2.eigenvalues) {
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
    }

    // ---- VECM ----

    #[test]
    fn vecm_structure(seed in 0u64..1000, case_no in 1u8..=5) {
        let case = JohansenCase::from_number(case_no).unwrap();
        let panel = rank_one_triple(160, seed, 2);
        let model = fit_vecm(&panel, 2, 1, case, &no_dummies(&panel)).unwrap();
        prop_assert_eq!(model.beta[(0, 0)], 1.0);
        prop_assert!((model.recompute_ect() - &model.ect).amax() < 1e-12);
        let sv = model.pi().singular_values();
        prop_assert!(sv[1] <= 1e-8 * sv[0]);
        let granger = granger_wald(&model).unwrap();
        for g in &granger {
            for row in &g.rows {
                prop_assert!(row.chi2 >= 0.0);
                let want = if row.excluded == "All" { 2 * model.lags } else { model.lags };
                prop_assert_eq!(row.df, want);
            }
        }
    }

    #[test]
    fn full_rank_vecm_is_the_levels_var(seed in 0u64..1000) {
        let panel = rank_one_triple(150, seed, 3);
        let d = no_dummies(&panel);
        let setup = VecmSetup::new(&panel, 2, JohansenCase::UnrestrictedConstant, &d);
        let full = fit_vecm_with_pivots(&setup, 3, &[0, 1, 2]).unwrap();
        let var = fit_var(&panel, 3, VarDeterministic::CONSTANT, &d).unwrap();
        prop_assert!((full.system.log_lik - var.system.log_lik).abs() < 1e-6);
        prop_assert!((full.johansen.log_lik(3).unwrap() - var.system.log_lik).abs() < 1e-6);
    }

    #[test]
    fn normalisation_ignores_eigenvector_scale(seed in 0u64..1000, s in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0]) {
        let panel = rank_one_triple(150, seed, 4);
        let res = reduced_rank_regression(&panel, 3, JohansenCase::RestrictedConstant, &no_dummies(&panel)).unwrap();
        let raw = res.beta(1);
        let a = normalize_beta(&raw, &[0]).unwrap();
        let b = normalize_beta(&(raw * s), &[0]).unwrap();
        prop_assert!((a.clone() - b).amax() < 1e-9);
        let again = normalize_beta(&a, &[0]).unwrap();
        prop_assert_eq!(again, a);
    }

    #[test]
    fn restrictions_never_raise_likelihood(seed in 0u64..1000, i in 0usize..3, j in 0usize..3) {
        prop_assume!(i != j);
        let panel = rank_one_triple(150, seed, 5);
        let d = no_dummies(&panel);
        let setup = VecmSetup::new(&panel, 2, JohansenCase::RestrictedConstant, &d);
        let spec = RestrictionSpec::pairwise(3, 4, i, j);
        let res = restriction_lr_test(&setup, 1, &spec, &SwitchingOptions::default()).unwrap();
        prop_assert!(res.lr >= 0.0);
        prop_assert!(res.log_lik_restricted <= res.log_lik_unrestricted + 1e-8);
        prop_assert!((0.0..=1.0).contains(&res.p_value));
        prop_assert_eq!(res.df, 2);
    }

    #[test]
    fn switching_respects_likelihood_bound(seed in 0u64..1000) {
        let panel = rank_two_triple(200, seed, 6);
        let d = no_dummies(&panel);
        let setup = VecmSetup::new(&panel, 1, JohansenCase::RestrictedConstant, &d);
        let spec = RestrictionSpec::parse("1,-1,0,*; 0,1,*,*").unwrap();
        let res = restriction_lr_test(&setup, 2, &spec, &SwitchingOptions::default()).unwrap();
        prop_assert!(res.log_lik_restricted <= res.log_lik_unrestricted + 1e-8);
        prop_assert_eq!(res.beta[(0, 0)], 1.0);
        prop_assert!((res.beta[(1, 0)] + 1.0).abs() < 1e-12);
        prop_assert!(res.beta[(2, 0)].abs() < 1e-12);
    }

    #[test]
    fn own_estimate_is_a_nested_optimum(seed in 0u64..1000) {
        let panel = rank_one_triple(150, seed, 7);
        let d = no_dummies(&panel);
        let setup = VecmSetup::new(&panel, 2, JohansenCase::RestrictedConstant, &d);
        let model = fit_vecm(&panel, 2, 1, JohansenCase::RestrictedConstant, &d).unwrap();
        let fixed = model.beta.column(0).iter().map(|v| Entry::Fixed(*v)).collect();
        let spec = RestrictionSpec::new("own", vec![fixed]);
        let res = restriction_lr_test(&setup, 1, &spec, &SwitchingOptions::default()).unwrap();
        prop_assert!(res.lr < 1e-6, "LR {}", res.lr);
    }

    #[test]
    fn determinism(seed in any::<u64>(), rep in any::<u64>()) {
        let spec = SimulationSpec::new(Dgp::WhiteNoise, names(2), 100, start());
        let a = generate(&spec, seed, rep).unwrap();
        let b = generate(&spec, seed, rep).unwrap();
        prop_assert_eq!(a.values().as_slice(), b.values().as_slice());
    }
}

#[test]
fn zero_adjustment_row_gives_zero_lr() {
    // moments where the second equation is unrelated to everything else
    let s00 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
    let s01 = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.0, 0.0]);
    let s11 = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.5]);
    let mm = lopcoint::johansen::MomentMatrices {
        s00,
        s01,
        s11,
        n_eff: 200,
    };
    let res = weak_exogeneity_from_moments(&mm, 1, &[1], "y2".into()).unwrap();
    assert!(res.lr.abs() < 1e-10, "{}", res.lr);
    assert_eq!(res.df, 1);
}

#[test]
fn joint_test_collapses_to_pairwise_for_two_series() {
    let panel = rank_one_pair(300, 12, 0);
    let d = no_dummies(&panel);
    let setup = VecmSetup::new(&panel, 1, JohansenCase::RestrictedConstant, &d);
    let joint = joint_lop_test(&setup, 1).unwrap();
    let pair = pairwise_lop(&setup, 1, 0.05).unwrap();
    assert!((joint.lr - pair.pairs[0].result.lr).abs() < 1e-9);
    assert_eq!(joint.df, pair.pairs[0].result.df);
}

#[test]
fn joint_test_refuses_wrong_rank() {
    let panel = rank_one_triple(150, 1, 0);
    let d = no_dummies(&panel);
    let setup = VecmSetup::new(&panel, 1, JohansenCase::RestrictedConstant, &d);
    let err = joint_lop_test(&setup, 1).unwrap_err();
    assert!(err.to_string().contains("joint LOP untestable at rank 1"));
}

#[test]
fn nearly_identical_pair_has_negligible_lr() {
    let base = rank_one_triple(200, 2, 0);
    let noise = generate(&SimulationSpec::new(Dgp::WhiteNoise, names(1), 200, start()), 9, 0).unwrap();
    let mut v = base.values().clone();
    for t in 0..v.nrows() {
        v[(t, 2)] = v[(t, 0)] + 1e-3 * noise.values()[(t, 0)];
    }
    let panel = lopcoint::data::PricePanel::new(base.dates().to_vec(), base.names().to_vec(), v, base.scale()).unwrap();
    let d = no_dummies(&panel);
    let setup = VecmSetup::new(&panel, 1, JohansenCase::RestrictedConstant, &d);
    let lop = pairwise_lop(&setup, 1, 0.01).unwrap();
    let pair = lop.pairs.iter().find(|p| (p.i, p.j) == (0, 2)).unwrap();
    assert!(pair.result.lr < 1.0, "LR {}", pair.result.lr);
    assert!(!pair.reject);
}

#[test]
fn pivot_only_vector_gives_lagged_series() {
    let panel = rank_one_triple(100, 3, 0);
    let d = no_dummies(&panel);
    let mut model = fit_vecm(&panel, 1, 1, JohansenCase::RestrictedConstant, &d).unwrap();
    model.beta = DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]);
    let ect = model.recompute_ect();
    let y = panel.series(0);
    let first = panel.n_obs() - model.n_eff;
    for i in 0..model.n_eff {
        assert_eq!(ect[(i, 0)], y[first + i - 1]);
    }
}
