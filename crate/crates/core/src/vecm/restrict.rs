//! Likelihood-ratio tests of linear restrictions on β and of zero rows in α.
//!
//! Each cointegration vector is written as `β_j = H_j φ_j`. A restriction
//! pattern fixes some entries of β_j up to a common scale and leaves others
//! free, so `H_j` is spanned by the fixed-pattern vector and unit vectors on
//! the free entries. When every vector shares the same `H` (or r = 1) the
//! restricted estimate solves a smaller eigenproblem; otherwise the
//! likelihood is maximised by switching between the vectors, each step
//! solving the eigenproblem for one vector with the others held fixed.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{normalize_beta, VecmSetup};
use crate::dist::chi2_sf;
use crate::error::{Error, Result};
use crate::johansen::{generalized_eigen, MomentMatrices};
use crate::linalg::{inverse_spd, log_det_spd, orthogonal_complement};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Entry {
    /// Coefficient proportional to this value (the common scale is free).
    Fixed(f64),
    Free,
}

/// One pattern per cointegration vector, each with K + restricted-rows
/// entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionSpec {
    pub label: String,
    pub vectors: Vec<Vec<Entry>>,
}

impl RestrictionSpec {
    pub fn new(label: impl Into<String>, vectors: Vec<Vec<Entry>>) -> Self {
        Self {
            label: label.into(),
            vectors,
        }
    }

    /// Parses `"1,-1,0,0,*"`; vectors are separated by `;` and `*` marks a
    /// free entry.
    pub fn parse(text: &str) -> Result<Self> {
        let vectors = text
            .split(';')
            .map(|v| {
                v.split(',')
                    .map(|e| {
                        let e = e.trim();
                        if e == "*" {
                            Ok(Entry::Free)
                        } else {
                            e.parse::<f64>()
                                .ok()
                                .filter(|x| x.is_finite())
                                .map(Entry::Fixed)
                                .ok_or_else(|| {
                                    Error::InvalidArgument(format!("bad restriction entry {e:?}"))
                                })
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(text.trim(), vectors))
    }

    /// `+1` on series i, `-1` on series j, zero on the other series and
    /// free restricted deterministic rows.
    pub fn pairwise(n_series: usize, n_rows: usize, i: usize, j: usize) -> Self {
        let v = (0..n_rows)
            .map(|row| {
                if row >= n_series {
                    Entry::Free
                } else if row == i {
                    Entry::Fixed(1.0)
                } else if row == j {
                    Entry::Fixed(-1.0)
                } else {
                    Entry::Fixed(0.0)
                }
            })
            .collect();
        Self::new(format!("pair({i},{j})"), vec![v])
    }

    /// The design matrix `H_j` of vector `j`.
    fn design(&self, j: usize) -> Result<DMatrix<f64>> {
        let pattern = &self.vectors[j];
        let rows = pattern.len();
        let fixed: Vec<f64> = pattern
            .iter()
            .map(|e| match e {
                Entry::Fixed(v) => *v,
                Entry::Free => 0.0,
            })
            .collect();
        let mut cols: Vec<DVector<f64>> = Vec::new();
        if fixed.iter().any(|v| *v != 0.0) {
            cols.push(DVector::from_vec(fixed));
        }
        for (i, e) in pattern.iter().enumerate() {
            if *e == Entry::Free {
                let mut u = DVector::zeros(rows);
                u[i] = 1.0;
                cols.push(u);
            }
        }
        if cols.is_empty() {
            return Err(Error::Restriction(format!(
                "vector {} is restricted to zero",
                j + 1
            )));
        }
        Ok(DMatrix::from_columns(&cols))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SwitchingOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Random starting values tried in addition to the projection of the
    /// unrestricted estimate.
    pub extra_starts: usize,
    pub seed: u64,
}

impl Default for SwitchingOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
            extra_starts: 4,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictionResult {
    pub label: String,
    pub lr: f64,
    pub df: usize,
    pub p_value: f64,
    pub log_lik_restricted: f64,
    pub log_lik_unrestricted: f64,
    /// Restricted β, K1×r.
    #[serde(skip)]
    pub beta: DMatrix<f64>,
    /// Switching iterations used (0 when solved directly).
    pub iterations: usize,
}

impl RestrictionResult {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

fn log_lik(mm: &MomentMatrices, log_det: f64) -> f64 {
    let t = mm.n_eff as f64;
    -0.5 * t * (mm.n_series() as f64 * (1.0 + LN_2PI) + log_det)
}

fn unrestricted_log_det(mm: &MomentMatrices, r: usize) -> Result<f64> {
    let (values, _) = mm.eigen()?;
    let sum: f64 = values.iter().take(r).map(|l| (1.0 - l.clamp(0.0, 1.0 - 1e-15)).ln()).sum();
    Ok(log_det_spd(&mm.s00, "S00")? + sum)
}

/// Maximises the likelihood over `β = H φ` with a common H.
fn common_design(mm: &MomentMatrices, h: &DMatrix<f64>, r: usize) -> Result<(DMatrix<f64>, f64)> {
    if h.ncols() < r {
        return Err(Error::Restriction(format!(
            "restriction leaves {} free directions for {r} vectors",
            h.ncols()
        )));
    }
    let s01h = &mm.s01 * h;
    let hsh = h.transpose() * &mm.s11 * h;
    let (values, vectors) = generalized_eigen(&mm.s00, &s01h, &hsh)?;
    let beta = h * vectors.columns(0, r);
    let sum: f64 = values.iter().take(r).map(|l| (1.0 - l.clamp(0.0, 1.0 - 1e-15)).ln()).sum();
    Ok((beta, log_det_spd(&mm.s00, "S00")? + sum))
}

/// Moments conditional on the vectors in `others`.
fn conditional(mm: &MomentMatrices, others: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    if others.ncols() == 0 {
        return Ok((mm.s00.clone(), mm.s01.clone(), mm.s11.clone()));
    }
    let inv = inverse_spd(&(others.transpose() * &mm.s11 * others), "β'S11β")?;
    let s0b = &mm.s01 * others;
    let s1b = &mm.s11 * others;
    let s00 = &mm.s00 - &s0b * &inv * s0b.transpose();
    let s01 = &mm.s01 - &s0b * &inv * s1b.transpose();
    let s11 = &mm.s11 - &s1b * &inv * s1b.transpose();
    Ok((s00, s01, s11))
}

fn without_column(beta: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    beta.clone().remove_column(j)
}

fn switching(
    mm: &MomentMatrices,
    hs: &[DMatrix<f64>],
    start: DMatrix<f64>,
    opts: &SwitchingOptions,
) -> Result<(DMatrix<f64>, f64, usize)> {
    let mut beta = start;
    let mut prev = mm.log_det_omega(&beta)?;
    for iter in 1..=opts.max_iterations {
        for (j, h) in hs.iter().enumerate() {
            let others = without_column(&beta, j);
            let (s00, s01, s11) = conditional(mm, &others)?;
            let (_, vecs) = generalized_eigen(&s00, &(s01 * h), &(h.transpose() * s11 * h))?;
            let col = h * vecs.column(0);
            beta.set_column(j, &col);
        }
        let cur = mm.log_det_omega(&beta)?;
        // Improvement in the log-likelihood is T/2 times the drop in log det.
        if 0.5 * mm.n_eff as f64 * (prev - cur) < opts.tolerance {
            return Ok((beta, cur, iter));
        }
        prev = cur;
    }
    Err(Error::NoConvergence(opts.max_iterations))
}

fn restricted_fit(
    mm: &MomentMatrices,
    hs: &[DMatrix<f64>],
    opts: &SwitchingOptions,
) -> Result<(DMatrix<f64>, f64, usize)> {
    let r = hs.len();
    let common = hs.iter().all(|h| h == &hs[0]);
    if common || r == 1 {
        let (beta, ld) = common_design(mm, &hs[0], r)?;
        return Ok((beta, ld, 0));
    }
    for h in hs {
        if h.ncols() == 0 {
            return Err(Error::Restriction("empty restriction design".into()));
        }
    }
    let (_, vecs) = mm.eigen()?;
    let unrestricted = vecs.columns(0, r).into_owned();
    let k1 = mm.s11.nrows();
    let mut starts = Vec::new();
    // Projection of the unrestricted vectors on each sp(H_j) in the S11 metric.
    let mut proj = DMatrix::zeros(k1, r);
    for (j, h) in hs.iter().enumerate() {
        let hsh = h.transpose() * &mm.s11 * h;
        let phi = inverse_spd(&hsh, "H'S11H")? * h.transpose() * &mm.s11 * unrestricted.column(j);
        proj.set_column(j, &(h * phi));
    }
    starts.push(proj);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.extra_starts {
        let mut b = DMatrix::zeros(k1, r);
        for (j, h) in hs.iter().enumerate() {
            let phi = DVector::from_fn(h.ncols(), |_, _| StandardNormal.sample(&mut rng));
            b.set_column(j, &(h * phi));
        }
        starts.push(b);
    }
    let mut best: Option<(DMatrix<f64>, f64, usize)> = None;
    let mut last_err = None;
    for start in starts {
        match switching(mm, hs, start, opts) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.1 < b.1) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::NoConvergence(opts.max_iterations)))
}

fn degrees_of_freedom(hs: &[DMatrix<f64>], k1: usize) -> Result<usize> {
    let r = hs.len();
    let common = hs.iter().all(|h| h == &hs[0]);
    let df: i64 = if common {
        r as i64 * (k1 as i64 - hs[0].ncols() as i64)
    } else {
        hs.iter()
            .map(|h| k1 as i64 - r as i64 + 1 - h.ncols() as i64)
            .sum()
    };
    if df <= 0 {
        return Err(Error::Restriction(format!(
            "restriction imposes no testable constraint (df = {df})"
        )));
    }
    Ok(df as usize)
}

/// Scales each restricted vector so its first fixed nonzero entry takes the
/// value given in the pattern.
fn scale_to_pattern(beta: &mut DMatrix<f64>, spec: &RestrictionSpec) {
    for (j, pattern) in spec.vectors.iter().enumerate() {
        let anchor = pattern.iter().enumerate().find_map(|(i, e)| match e {
            Entry::Fixed(v) if *v != 0.0 => Some((i, *v)),
            _ => None,
        });
        if let Some((i, v)) = anchor {
            let cur = beta[(i, j)];
            if cur.abs() > 0.0 {
                beta.column_mut(j).scale_mut(v / cur);
                // The fixed entries are now exactly the pattern values.
                for (row, e) in pattern.iter().enumerate() {
                    if let Entry::Fixed(f) = e {
                        beta[(row, j)] = *f;
                    }
                }
            }
        }
    }
}

fn finish(
    label: String,
    mm: &MomentMatrices,
    r: usize,
    restricted_ld: f64,
    df: usize,
    beta: DMatrix<f64>,
    iterations: usize,
) -> Result<RestrictionResult> {
    let unrestricted_ld = unrestricted_log_det(mm, r)?;
    let t = mm.n_eff as f64;
    let lr = (t * (restricted_ld - unrestricted_ld)).max(0.0);
    Ok(RestrictionResult {
        label,
        lr,
        df,
        p_value: chi2_sf(lr, df as f64),
        log_lik_restricted: log_lik(mm, restricted_ld),
        log_lik_unrestricted: log_lik(mm, unrestricted_ld),
        beta,
        iterations,
    })
}

pub fn restriction_lr_test(
    setup: &VecmSetup,
    r: usize,
    spec: &RestrictionSpec,
    opts: &SwitchingOptions,
) -> Result<RestrictionResult> {
    setup.check_rank(r)?;
    let mm = setup.ecm_data()?.moments()?;
    restriction_lr_from_moments(&mm, r, spec, opts)
}

pub fn restriction_lr_from_moments(
    mm: &MomentMatrices,
    r: usize,
    spec: &RestrictionSpec,
    opts: &SwitchingOptions,
) -> Result<RestrictionResult> {
    let k1 = mm.s11.nrows();
    if spec.vectors.len() != r {
        return Err(Error::Restriction(format!(
            "{} restriction patterns for rank {r}",
            spec.vectors.len()
        )));
    }
    if let Some(v) = spec.vectors.iter().find(|v| v.len() != k1) {
        return Err(Error::Restriction(format!(
            "pattern has {} entries, expected {k1}",
            v.len()
        )));
    }
    let hs = (0..r).map(|j| spec.design(j)).collect::<Result<Vec<_>>>()?;
    let df = degrees_of_freedom(&hs, k1)?;
    let (mut beta, ld, iterations) = restricted_fit(mm, &hs, opts)?;
    scale_to_pattern(&mut beta, spec);
    finish(spec.label.clone(), mm, r, ld, df, beta, iterations)
}

/// Tests `α_i = 0` for every listed equation (weak exogeneity of those
/// series for β).
pub fn weak_exogeneity_test(setup: &VecmSetup, r: usize, rows: &[usize]) -> Result<RestrictionResult> {
    setup.check_rank(r)?;
    let mm = setup.ecm_data()?.moments()?;
    let names = setup.panel.names();
    let label = format!(
        "alpha = 0: {}",
        rows.iter()
            .map(|&i| names.get(i).cloned().unwrap_or_else(|| i.to_string()))
            .collect::<Vec<_>>()
            .join(",")
    );
    weak_exogeneity_from_moments(&mm, r, rows, label)
}

pub fn weak_exogeneity_from_moments(
    mm: &MomentMatrices,
    r: usize,
    rows: &[usize],
    label: String,
) -> Result<RestrictionResult> {
    let k = mm.n_series();
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || sorted.iter().any(|&i| i >= k) {
        return Err(Error::InvalidArgument("weak exogeneity rows must index series".into()));
    }
    if r + sorted.len() > k {
        return Err(Error::Restriction(format!(
            "cannot set {} rows of α to zero at rank {r} with {k} series",
            sorted.len()
        )));
    }
    let a: Vec<usize> = (0..k).filter(|i| !sorted.contains(i)).collect();
    let b = &sorted;
    let s_aa = mm.s00.select_rows(&a).select_columns(&a);
    let s_ab = mm.s00.select_rows(&a).select_columns(b);
    let s_bb = mm.s00.select_rows(b).select_columns(b);
    let s_a1 = mm.s01.select_rows(&a);
    let s_b1 = mm.s01.select_rows(b);
    let bb_inv = inverse_spd(&s_bb, "S_bb")?;
    let s_aa_b = &s_aa - &s_ab * &bb_inv * s_ab.transpose();
    let s_a1_b = &s_a1 - &s_ab * &bb_inv * &s_b1;
    let s_11_b = &mm.s11 - s_b1.transpose() * &bb_inv * &s_b1;
    let (values, vectors) = generalized_eigen(&s_aa_b, &s_a1_b, &s_11_b)?;
    let sum: f64 = values.iter().take(r).map(|l| (1.0 - l.clamp(0.0, 1.0 - 1e-15)).ln()).sum();
    let ld = log_det_spd(&s_bb, "S_bb")? + log_det_spd(&s_aa_b, "S_aa.b")? + sum;
    let raw = vectors.columns(0, r).into_owned();
    let pivots: Vec<usize> = (0..r).collect();
    let beta = normalize_beta(&raw, &pivots).unwrap_or(raw);
    finish(label, mm, r, ld, r * b.len(), beta, 0)
}

#[derive(Debug, Clone, Serialize)]
pub struct LopPair {
    pub i: usize,
    pub j: usize,
    pub label: String,
    pub result: RestrictionResult,
    pub reject: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairwiseLop {
    pub level: f64,
    pub names: Vec<String>,
    pub pairs: Vec<LopPair>,
}

impl PairwiseLop {
    /// `Some(true)` when the pair (i, j) rejects the unit-slope relation.
    pub fn rejects(&self, i: usize, j: usize) -> Option<bool> {
        self.pairs
            .iter()
            .find(|p| (p.i, p.j) == (i, j) || (p.i, p.j) == (j, i))
            .map(|p| p.reject)
    }
}

/// Tests `β = (.., 1, .., -1, ..)'` with free restricted deterministic rows
/// for every pair i < j. Defined for a single cointegration vector.
pub fn pairwise_lop(setup: &VecmSetup, r: usize, level: f64) -> Result<PairwiseLop> {
    setup.check_rank(r)?;
    if r != 1 {
        return Err(Error::Restriction(format!(
            "pairwise LOP tests need a single cointegration vector, rank is {r}"
        )));
    }
    let mm = setup.ecm_data()?.moments()?;
    let k = setup.n_series();
    let k1 = mm.s11.nrows();
    let names = setup.panel.names().to_vec();
    let opts = SwitchingOptions::default();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let mut spec = RestrictionSpec::pairwise(k, k1, i, j);
            spec.label = format!("{}-{}", names[i], names[j]);
            let result = restriction_lr_from_moments(&mm, 1, &spec, &opts)?;
            pairs.push(LopPair {
                i,
                j,
                label: spec.label.clone(),
                reject: result.rejects(level),
                result,
            });
        }
    }
    Ok(PairwiseLop {
        level,
        names,
        pairs,
    })
}

/// Tests that every cointegration vector has price coefficients summing to
/// zero, with r = K - 1 so that all prices move one-for-one in the long run.
pub fn joint_lop_test(setup: &VecmSetup, r: usize) -> Result<RestrictionResult> {
    setup.check_rank(r)?;
    let k = setup.n_series();
    if r != k - 1 {
        return Err(Error::Restriction(format!("joint LOP untestable at rank {r}")));
    }
    let mm = setup.ecm_data()?.moments()?;
    let k1 = mm.s11.nrows();
    let ones = DMatrix::from_element(k, 1, 1.0);
    let basis = orthogonal_complement(&ones);
    let extra = k1 - k;
    let mut h = DMatrix::zeros(k1, basis.ncols() + extra);
    h.view_mut((0, 0), (k, basis.ncols())).copy_from(&basis);
    for e in 0..extra {
        h[(k + e, basis.ncols() + e)] = 1.0;
    }
    let hs = vec![h.clone(); r];
    let df = degrees_of_freedom(&hs, k1)?;
    let (raw, ld) = common_design(&mm, &h, r)?;
    let pivots: Vec<usize> = (0..r).collect();
    let beta = normalize_beta(&raw, &pivots).unwrap_or(raw);
    finish("joint LOP".into(), &mm, r, ld, df, beta, 0)
}
