//! Wald tests that the lagged differences of one variable do not enter
//! another variable's equation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::VecmModel;
use crate::dist::chi2_sf;
use crate::error::{Error, Result};
use crate::linalg::inverse_spd;

#[derive(Debug, Clone, Serialize)]
pub struct GrangerRow {
    /// Excluded variable, or `"All"` for every other variable at once.
    pub excluded: String,
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrangerResult {
    /// Dependent variable of the equation being tested.
    pub equation: String,
    pub rows: Vec<GrangerRow>,
}

fn wald(model: &VecmModel, eq: usize, rows: &[usize]) -> Result<f64> {
    let df_resid = (model.n_eff - model.coef.nrows()) as f64;
    let s2 = model.resid.column(eq).norm_squared() / df_resid;
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&i| model.coef[(i, eq)]));
    let v = DMatrix::from_fn(rows.len(), rows.len(), |a, c| s2 * model.xtx_inv[(rows[a], rows[c])]);
    let v_inv = inverse_spd(&v, "coefficient covariance")?;
    Ok((b.transpose() * v_inv * &b)[(0, 0)])
}

/// Block-exogeneity Wald tests for every equation of the model: one row per
/// excluded variable (df = lags) and a joint `All` row.
pub fn granger_wald(model: &VecmModel) -> Result<Vec<GrangerResult>> {
    let k = model.n_series();
    let lags = model.lags;
    if lags == 0 {
        return Err(Error::InvalidArgument(
            "no lagged differences to test".into(),
        ));
    }
    let rows_of = |v: usize| (1..=lags).map(move |l| model.short_run_row(v, l));
    let mut out = Vec::with_capacity(k);
    for eq in 0..k {
        let mut rows = Vec::with_capacity(k);
        let mut all = Vec::new();
        for v in (0..k).filter(|&v| v != eq) {
            let idx: Vec<usize> = rows_of(v).collect();
            let chi2 = wald(model, eq, &idx)?;
            rows.push(GrangerRow {
                excluded: model.names[v].clone(),
                chi2,
                df: lags,
                p_value: chi2_sf(chi2, lags as f64),
            });
            all.extend(idx);
        }
        let chi2 = wald(model, eq, &all)?;
        let df = all.len();
        rows.push(GrangerRow {
            excluded: "All".into(),
            chi2,
            df,
            p_value: chi2_sf(chi2, df as f64),
        });
        out.push(GrangerResult {
            equation: model.names[eq].clone(),
            rows,
        });
    }
    Ok(out)
}
