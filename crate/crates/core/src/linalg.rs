//! Dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on the diagonal of R below which a regressor matrix is
/// treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Multivariate least squares `Y = X B + U`, solved by Householder QR.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// m×q coefficients, one column per response.
    pub coef: DMatrix<f64>,
    /// n×q residuals.
    pub resid: DMatrix<f64>,
    /// (X'X)^{-1}, m×m.
    pub xtx_inv: DMatrix<f64>,
}

impl LeastSquares {
    pub fn fit(y: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<Self> {
        let (n, m) = x.shape();
        if y.nrows() != n {
            return Err(Error::InvalidArgument(format!(
                "regressand has {} rows, regressors {}",
                y.nrows(),
                n
            )));
        }
        if m == 0 {
            return Ok(Self {
                coef: DMatrix::zeros(0, y.ncols()),
                resid: y.clone(),
                xtx_inv: DMatrix::zeros(0, 0),
            });
        }
        if n < m {
            return Err(Error::InsufficientData {
                needed: m,
                available: n,
            });
        }
        let qr = x.clone().qr();
        let r = qr.r();
        let max_diag = (0..m).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        if max_diag == 0.0 || (0..m).any(|i| r[(i, i)].abs() <= RANK_TOL * max_diag) {
            return Err(Error::Singular("regressor matrix is rank deficient".into()));
        }
        let qty = qr.q().transpose() * y;
        let coef = r
            .solve_upper_triangular(&qty)
            .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
        let resid = y - x * &coef;
        let r_inv = r
            .solve_upper_triangular(&DMatrix::identity(m, m))
            .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
        let xtx_inv = &r_inv * r_inv.transpose();
        Ok(Self {
            coef,
            resid,
            xtx_inv,
        })
    }
}

/// Residuals of `y` after projection on the columns of `x` (identity when `x`
/// has no columns).
pub fn partial_out(y: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() == 0 {
        return Ok(y.clone());
    }
    Ok(LeastSquares::fit(y, x)?.resid)
}

/// `A'B / n`.
pub fn moment(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * b / a.nrows() as f64
}

/// Lower Cholesky factor, with a relative pivot check so nearly singular
/// matrices are rejected rather than factored into garbage.
pub fn cholesky_lower(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))?;
    let l = chol.l();
    let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..n {
        if l[(i, i)] * l[(i, i)] <= 1e-13 * max_diag {
            return Err(Error::Singular(format!("{what} is numerically singular")));
        }
    }
    Ok(l)
}

pub fn log_det_spd(a: &DMatrix<f64>, what: &str) -> Result<f64> {
    let l = cholesky_lower(a, what)?;
    Ok((0..a.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

pub fn inverse_spd(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let l = cholesky_lower(a, what)?;
    let n = a.nrows();
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Singular(format!("{what} is singular")))?;
    Ok(l_inv.transpose() * l_inv)
}

/// Symmetric eigen-decomposition with eigenvalues sorted in descending order
/// and eigenvectors permuted to match.
pub fn sym_eigen_desc(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Horizontal concatenation of row-aligned blocks; blocks may have zero
/// columns.
pub fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the column space of
/// `a` (n×m with full column rank m < n).
pub fn orthogonal_complement(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let proj = a * inverse_general(&(a.transpose() * a)) * a.transpose();
    let resid = DMatrix::identity(n, n) - proj;
    let (vals, vecs) = sym_eigen_desc(&resid);
    let keep = vals.iter().filter(|v| **v > 0.5).count();
    vecs.columns(0, keep).into_owned()
}

pub fn inverse_general(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::from_element(a.nrows(), a.ncols(), f64::NAN))
}
