//! Regional price panels: loading, transformation and impulse dummies.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    /// Months since year 0, January.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        Self {
            year: ordinal.div_euclid(12) as i32,
            month: (ordinal.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn add_months(self, n: i64) -> Self {
        Self::from_ordinal(self.ordinal() + n)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("`{s}` is not a YYYY-MM month"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u8 = m.parse().map_err(|_| bad())?;
        Self::new(year, month).map_err(|_| bad())
    }
}

impl TryFrom<String> for YearMonth {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<YearMonth> for String {
    fn from(ym: YearMonth) -> String {
        ym.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Level,
    Log,
    FirstDifference,
}

/// Aligned monthly observations for K named regions.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<YearMonth>,
    names: Vec<String>,
    values: DMatrix<f64>,
    scale: Scale,
}

impl PricePanel {
    /// Builds a panel, checking that dates advance by exactly one month, that
    /// names match the column count and that every value is finite.
    pub fn new(
        dates: Vec<YearMonth>,
        names: Vec<String>,
        values: DMatrix<f64>,
        scale: Scale,
    ) -> Result<Self> {
        if dates.is_empty() {
            return Err(Error::InvalidPanel("panel has no observations".into()));
        }
        if values.nrows() != dates.len() || values.ncols() != names.len() {
            return Err(Error::InvalidPanel(format!(
                "values are {}x{}, expected {}x{}",
                values.nrows(),
                values.ncols(),
                dates.len(),
                names.len()
            )));
        }
        if names.is_empty() {
            return Err(Error::InvalidPanel("panel has no series".into()));
        }
        check_contiguous(&dates)?;
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::InvalidPanel("region names must be unique".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (i % values.nrows(), i / values.nrows());
            return Err(Error::InvalidPanel(format!(
                "missing or non-finite value for {} at {}",
                names[c], dates[r]
            )));
        }
        Ok(Self {
            dates,
            names,
            values,
            scale,
        })
    }

    /// Panel with consecutive months starting at `start`.
    pub fn from_start(
        start: YearMonth,
        names: Vec<String>,
        values: DMatrix<f64>,
        scale: Scale,
    ) -> Result<Self> {
        let dates = (0..values.nrows() as i64).map(|i| start.add_months(i)).collect();
        Self::new(dates, names, values, scale)
    }

    pub fn dates(&self) -> &[YearMonth] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// T×K observations.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn n_obs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_series(&self) -> usize {
        self.values.ncols()
    }

    pub fn series(&self, k: usize) -> Vec<f64> {
        self.values.column(k).iter().copied().collect()
    }

    /// Sub-panel with the given columns, in the given order.
    pub fn select(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.n_series()) {
            return Err(Error::InvalidArgument(format!("no series at index {bad}")));
        }
        let values = self.values.select_columns(columns);
        let names = columns.iter().map(|&c| self.names[c].clone()).collect();
        Self::new(self.dates.clone(), names, values, self.scale)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

fn check_contiguous(dates: &[YearMonth]) -> Result<()> {
    for w in dates.windows(2) {
        if w[1].ordinal() - w[0].ordinal() != 1 {
            return Err(Error::NonContiguousDates(format!("{} followed by {}", w[0], w[1])));
        }
    }
    Ok(())
}

/// A CSV column and the region label it is loaded under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionColumn {
    pub column: String,
    pub label: String,
}

impl RegionColumn {
    /// Parses `column` or `column:label` entries separated by commas.
    pub fn parse_list(spec: &str) -> Result<Vec<Self>> {
        let out: Vec<Self> = spec
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|entry| match entry.split_once(':') {
                Some((c, l)) => Self {
                    column: c.trim().to_string(),
                    label: l.trim().to_string(),
                },
                None => Self {
                    column: entry.to_string(),
                    label: entry.to_string(),
                },
            })
            .collect();
        if out.is_empty() {
            return Err(Error::InvalidArgument("no regions configured".into()));
        }
        Ok(out)
    }
}

/// Reads a CSV with a `date` column (YYYY-MM) and one column per region.
///
/// Rows may appear in any order; after sorting the months must be
/// contiguous and unique. Empty cells are rejected with their line number.
pub fn load_panel(path: &Path, regions: &[RegionColumn]) -> Result<PricePanel> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_panel(file, regions)
}

pub fn read_panel<R: std::io::Read>(reader: R, regions: &[RegionColumn]) -> Result<PricePanel> {
    if regions.is_empty() {
        return Err(Error::InvalidArgument("no regions configured".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_col = find("date")?;
    let cols = regions
        .iter()
        .map(|r| find(&r.column))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<(YearMonth, u64, Vec<f64>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let date: YearMonth = record
            .get(date_col)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        let mut vals = Vec::with_capacity(cols.len());
        for (&c, region) in cols.iter().zip(regions) {
            let cell = record.get(c).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse `{cell}` as a number for {}", region.column),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite value for {}", region.column),
                });
            }
            vals.push(v);
        }
        rows.push((date, line, vals));
    }
    if rows.is_empty() {
        return Err(Error::InvalidPanel("input has no data rows".into()));
    }
    rows.sort_by_key(|r| r.0);
    for w in rows.windows(2) {
        if w[1].0.ordinal() - w[0].0.ordinal() != 1 {
            return Err(Error::NonContiguousDates(format!(
                "{} (line {}) followed by {} (line {})",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    let t = rows.len();
    let k = regions.len();
    let values = DMatrix::from_fn(t, k, |i, j| rows[i].2[j]);
    let dates = rows.iter().map(|r| r.0).collect();
    let names = regions.iter().map(|r| r.label.clone()).collect();
    PricePanel::new(dates, names, values, Scale::Level)
}

/// Element-wise natural logarithm of a level panel.
pub fn log_transform(panel: &PricePanel) -> Result<PricePanel> {
    if panel.scale != Scale::Level {
        return Err(Error::InvalidArgument(format!(
            "log transform needs a level panel, got {:?}",
            panel.scale
        )));
    }
    for (j, name) in panel.names.iter().enumerate() {
        for (i, &v) in panel.values.column(j).iter().enumerate() {
            if v <= 0.0 {
                return Err(Error::NonPositive {
                    value: v,
                    region: name.clone(),
                    date: panel.dates[i].to_string(),
                });
            }
        }
    }
    Ok(PricePanel {
        values: panel.values.map(f64::ln),
        scale: Scale::Log,
        ..panel.clone()
    })
}

/// First differences; row `t` of the output is `x[t+1] - x[t]` and is dated
/// at the later month.
pub fn difference(panel: &PricePanel) -> Result<PricePanel> {
    let t = panel.n_obs();
    if t < 2 {
        return Err(Error::InsufficientData {
            needed: 1,
            available: t,
        });
    }
    let k = panel.n_series();
    let values = DMatrix::from_fn(t - 1, k, |i, j| panel.values[(i + 1, j)] - panel.values[(i, j)]);
    Ok(PricePanel {
        dates: panel.dates[1..].to_vec(),
        names: panel.names.clone(),
        values,
        scale: Scale::FirstDifference,
    })
}

/// Inverse of [`difference`] for a single series: cumulative sum of `diffs`
/// starting from `first`.
pub fn integrate(first: f64, diffs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(diffs.len() + 1);
    let mut acc = first;
    out.push(acc);
    for d in diffs {
        acc += d;
        out.push(acc);
    }
    out
}

pub fn difference_series(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Named impulse dummies, each active in a set of months.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DummySpec {
    entries: Vec<(String, BTreeSet<YearMonth>)>,
}

impl DummySpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, months: impl IntoIterator<Item = YearMonth>) -> Result<()> {
        if self.entries.iter().any(|(n, _)| n == name) {
            return Err(Error::InvalidDummy(format!("duplicate dummy name `{name}`")));
        }
        let set: BTreeSet<YearMonth> = months.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidDummy(format!("dummy `{name}` has no months")));
        }
        self.entries.push((name.to_string(), set));
        Ok(())
    }

    /// Adds a dummy from a comma-separated list of YYYY-MM months.
    pub fn push_str(&mut self, name: &str, months: &str) -> Result<()> {
        let parsed = months
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<YearMonth>()
                    .map_err(|_| Error::InvalidDummy(format!("`{s}` in `{name}` is not a YYYY-MM month")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.push(name, parsed)
    }

    pub fn entries(&self) -> &[(String, BTreeSet<YearMonth>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// T×d matrix of impulse regressors aligned with a panel's dates.
#[derive(Debug, Clone, PartialEq)]
pub struct DummyMatrix {
    pub names: Vec<String>,
    pub dates: Vec<YearMonth>,
    pub values: DMatrix<f64>,
}

impl DummyMatrix {
    pub fn empty(dates: &[YearMonth]) -> Self {
        Self {
            names: Vec::new(),
            dates: dates.to_vec(),
            values: DMatrix::zeros(dates.len(), 0),
        }
    }

    pub fn n_dummies(&self) -> usize {
        self.values.ncols()
    }
}

pub fn build_dummies(spec: &DummySpec, dates: &[YearMonth]) -> Result<DummyMatrix> {
    let (first, last) = match (dates.first(), dates.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::InvalidDummy("empty date index".into())),
    };
    let mut values = DMatrix::zeros(dates.len(), spec.len());
    for (j, (name, months)) in spec.entries.iter().enumerate() {
        for m in months {
            if *m < first || *m > last {
                return Err(Error::InvalidDummy(format!(
                    "{name}: {m} outside {first}..{last}"
                )));
            }
            let i = (m.ordinal() - first.ordinal()) as usize;
            if dates[i] != *m {
                return Err(Error::InvalidDummy("date index is not contiguous".into()));
            }
            values[(i, j)] = 1.0;
        }
    }
    Ok(DummyMatrix {
        names: spec.entries.iter().map(|(n, _)| n.clone()).collect(),
        dates: dates.to_vec(),
        values,
    })
}

/// Data section of a configuration file: `data.path`, `data.regions` and
/// `dummies.<name>` keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataConfig {
    pub path: PathBuf,
    pub regions: Vec<RegionColumn>,
    pub dummies: DummySpec,
}

impl DataConfig {
    pub fn from_parts(
        path: PathBuf,
        regions: &str,
        dummies: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let mut spec = DummySpec::new();
        for (name, months) in dummies {
            spec.push_str(&name, &months)?;
        }
        Ok(Self {
            path,
            regions: RegionColumn::parse_list(regions)?,
            dummies: spec,
        })
    }

    pub fn load(&self) -> Result<PricePanel> {
        load_panel(&self.path, &self.regions)
    }
}
