#![allow(dead_code)]

use lopcoint::data::{DummyMatrix, PricePanel, YearMonth};
use lopcoint::simulate::{generate, Dgp, SimulationSpec};
use nalgebra::DMatrix;

pub fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("y{}", i + 1)).collect()
}

pub fn start() -> YearMonth {
    YearMonth::new(1990, 1).unwrap()
}

pub fn no_dummies(panel: &PricePanel) -> DummyMatrix {
    DummyMatrix::empty(panel.dates())
}

/// Δy = α β' y_{t-1} + ε with β = (1, -1)', α = (-0.5, 0.2)'.
pub fn rank_one_pair(n: usize, seed: u64, rep: u64) -> PricePanel {
    let spec = SimulationSpec::new(
        Dgp::Vecm {
            intercept: vec![0.0, 0.0],
            alpha: vec![-0.5, 0.2],
            beta: vec![1.0, -1.0],
            gamma: vec![],
        },
        names(2),
        n,
        start(),
    );
    generate(&spec, seed, rep).unwrap()
}

/// Trivariate VECM with one relation, two lagged differences and drift.
pub fn rank_one_triple(n: usize, seed: u64, rep: u64) -> PricePanel {
    let spec = SimulationSpec::new(
        Dgp::Vecm {
            intercept: vec![0.01, -0.02, 0.005],
            alpha: vec![-0.3, 0.1, 0.2],
            beta: vec![1.0, -0.5, -0.5],
            gamma: vec![
                vec![0.2, 0.05, 0.0, 0.0, 0.1, 0.05, 0.1, 0.0, 0.15],
                vec![-0.1, 0.0, 0.05, 0.05, -0.05, 0.0, 0.0, 0.05, 0.1],
            ],
        },
        names(3),
        n,
        start(),
    );
    generate(&spec, seed, rep).unwrap()
}

/// Stationary VAR(2) in three variables with a constant.
pub fn stationary_var(n: usize, seed: u64, rep: u64) -> PricePanel {
    let spec = SimulationSpec::new(
        Dgp::Var {
            intercept: vec![0.5, -0.2, 1.0],
            lags: vec![
                vec![0.5, 0.1, 0.0, 0.0, 0.4, 0.1, 0.1, 0.0, 0.3],
                vec![0.1, 0.0, 0.0, 0.05, 0.1, 0.0, 0.0, 0.0, 0.2],
            ],
        },
        names(3),
        n,
        start(),
    );
    generate(&spec, seed, rep).unwrap()
}

/// Least squares through the normal equations with iterative refinement.
pub fn normal_equations(y: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let xtx = x.transpose() * x;
    let lu = xtx.clone().lu();
    let mut b = lu.solve(&(x.transpose() * y)).expect("singular normal equations");
    for _ in 0..4 {
        let r = y - x * &b;
        let db = lu.solve(&(x.transpose() * r)).unwrap();
        b += db;
    }
    b
}

pub fn residualize(y: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    if x.ncols() == 0 {
        return y.clone();
    }
    y - x * normal_equations(y, x)
}

/// Trivariate system with relations y1 - y2 and y2 - y3.
pub fn rank_two_triple(n: usize, seed: u64, rep: u64) -> PricePanel {
    let spec = SimulationSpec::new(
        Dgp::Vecm {
            intercept: vec![0.0, 0.0, 0.0],
            alpha: vec![-0.3, 0.0, 0.1, -0.3, 0.0, 0.2],
            beta: vec![1.0, 0.0, -1.0, 1.0, 0.0, -1.0],
            gamma: vec![],
        },
        names(3),
        n,
        start(),
    );
    generate(&spec, seed, rep).unwrap()
}
