//! Size and power of the tests on known data-generating processes.

mod common;

use common::*;
use lopcoint::johansen::JohansenCase;
use lopcoint::simulate::{
    adf_size, generate, granger_size, lop_non_rejection, rank_recovery, Dgp, SimulationSpec,
};
use lopcoint::unit_root::{adf_test, Deterministic, LagCriterion};
use lopcoint::var::{fit_var, lm_serial_test, VarDeterministic};
use lopcoint::vecm::{fit_vecm, joint_lop_test, weak_exogeneity_test, VecmSetup};

#[test]
fn adf_size_on_random_walks() {
    let t = adf_size(250, 2000, 101, 0.05).unwrap();
    println!("ADF size: {:.4}", t.rate());
    assert!((0.035..=0.065).contains(&t.rate()), "{t:?}");
}

#[test]
fn trace_test_recovers_rank_one() {
    let t = rank_recovery(1000, 200, 202, 0.05).unwrap();
    println!("rank recovery: {:.4}", t.rate());
    assert!(t.rate() >= 0.90, "{t:?}");
}

#[test]
fn unit_slope_restriction_holds_under_null() {
    let t = lop_non_rejection(500, 200, 303, 0.05).unwrap();
    println!("LOP non-rejection: {:.4}", t.rate());
    assert!((0.90..=0.98).contains(&t.rate()), "{t:?}");
}

#[test]
fn granger_wald_size() {
    let t = granger_size(300, 500, 404, 0.05).unwrap();
    println!("Granger size: {:.4}", t.rate());
    assert!((0.03..=0.07).contains(&t.rate()), "{t:?}");
}

#[test]
fn lm_serial_test_size_on_white_noise() {
    let spec = SimulationSpec::new(Dgp::WhiteNoise, names(3), 200, start());
    let reps = 500;
    let mut lre = 0;
    let mut rao = 0;
    for rep in 0..reps {
        let panel = generate(&spec, 505, rep).unwrap();
        let model = fit_var(&panel, 1, VarDeterministic::CONSTANT, &no_dummies(&panel)).unwrap();
        let row = &lm_serial_test(&model, 1).unwrap()[0];
        lre += (row.lre_p < 0.05) as usize;
        rao += (row.rao_p < 0.05) as usize;
    }
    let (lre, rao) = (lre as f64 / reps as f64, rao as f64 / reps as f64);
    println!("LM size: LRE {lre:.4}, Rao {rao:.4}");
    assert!((0.03..=0.07).contains(&rao), "{rao}");
    assert!((0.03..=0.07).contains(&lre), "{lre}");
}

#[test]
fn weak_exogeneity_size() {
    // y1 does not adjust: alpha = (0, 0.3)'
    let spec = SimulationSpec::new(
        Dgp::Vecm {
            intercept: vec![0.0, 0.0],
            alpha: vec![0.0, 0.3],
            beta: vec![1.0, -1.0],
            gamma: vec![],
        },
        names(2),
        300,
        start(),
    );
    let mut keep = 0;
    for rep in 0..200 {
        let panel = generate(&spec, 606, rep).unwrap();
        let d = no_dummies(&panel);
        let setup = VecmSetup::new(&panel, 1, JohansenCase::RestrictedConstant, &d);
        let res = weak_exogeneity_test(&setup, 1, &[0]).unwrap();
        assert_eq!(res.df, 1);
        keep += (!res.rejects(0.05)) as usize;
    }
    let rate = keep as f64 / 200.0;
    println!("weak exogeneity non-rejection: {rate:.4}");
    assert!((0.90..=0.99).contains(&rate), "{rate}");
}

#[test]
fn joint_lop_holds_under_null() {
    let mut keep = 0;
    for rep in 0..200 {
        let panel = rank_two_triple(300, 707, rep);
        let d = no_dummies(&panel);
        let setup = VecmSetup::new(&panel, 1, JohansenCase::RestrictedConstant, &d);
        let res = joint_lop_test(&setup, 2).unwrap();
        assert_eq!(res.df, 2);
        keep += (!res.rejects(0.05)) as usize;
    }
    let rate = keep as f64 / 200.0;
    println!("joint LOP non-rejection: {rate:.4}");
    assert!((0.90..=0.99).contains(&rate), "{rate}");
}

#[test]
fn beta_recovered_at_true_rank() {
    let mut dev = Vec::new();
    for rep in 0..100 {
        let panel = rank_one_triple(2000, 808, rep);
        let model = fit_vecm(&panel, 2, 1, JohansenCase::UnrestrictedConstant, &no_dummies(&panel)).unwrap();
        // truth normalised on y1: (1, -0.5, -0.5)
        dev.push((model.beta[(1, 0)] + 0.5).abs().max((model.beta[(2, 0)] + 0.5).abs()));
    }
    dev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = (dev[49] + dev[50]) / 2.0;
    println!("median absolute deviation of beta: {median:.5}");
    assert!(median < 0.05);
    assert!(dev[0] < 0.05);
}

#[test]
fn no_adjustment_means_no_mean_reversion() {
    let spec = SimulationSpec::new(
        Dgp::Vecm {
            intercept: vec![0.0, 0.0],
            alpha: vec![0.0, 0.0],
            beta: vec![1.0, -1.0],
            gamma: vec![vec![0.2, 0.0, 0.0, 0.2]],
        },
        names(2),
        250,
        start(),
    );
    let mut rejections = 0;
    for rep in 0..200 {
        let panel = generate(&spec, 909, rep).unwrap();
        let ect: Vec<f64> = (0..panel.n_obs())
            .map(|t| panel.values()[(t, 0)] - panel.values()[(t, 1)])
            .collect();
        rejections += adf_test(&ect, Deterministic::Constant, 4, LagCriterion::Aic)
            .unwrap()
            .rejects(0.05) as usize;
    }
    let rate = rejections as f64 / 200.0;
    println!("ADF rejection on the error-correction term without adjustment: {rate:.4}");
    assert!(rate < 0.10, "{rate}");
}
