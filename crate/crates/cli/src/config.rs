//! TOML pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lopcoint::data::{DataConfig, YearMonth};
use lopcoint::johansen::{JohansenCase, RankPolicy};
use lopcoint::unit_root::LagCriterion;
use lopcoint::var::VarDeterministic;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataSection,
    /// Impulse dummies: name = "YYYY-MM[, YYYY-MM...]".
    #[serde(default)]
    pub dummies: BTreeMap<String, String>,
    #[serde(default)]
    pub unit_root: UnitRootSection,
    #[serde(default)]
    pub var: VarSection,
    #[serde(default)]
    pub johansen: JohansenSection,
    #[serde(default)]
    pub vecm: VecmSection,
    #[serde(default)]
    pub granger: GrangerSection,
    #[serde(default)]
    pub lop: LopSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// CSV with a `date` column; relative paths resolve against the config
    /// file's directory.
    pub path: PathBuf,
    /// `column[:label], ...`
    pub regions: String,
    /// Analyse natural logs of the prices.
    #[serde(default = "yes")]
    pub log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Sc,
}

impl From<Criterion> for LagCriterion {
    fn from(c: Criterion) -> Self {
        match c {
            Criterion::Aic => LagCriterion::Aic,
            Criterion::Sc => LagCriterion::Sc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitRootSection {
    #[serde(default = "fifteen")]
    pub max_lag: usize,
    #[serde(default = "aic")]
    pub criterion: Criterion,
}

impl Default for UnitRootSection {
    fn default() -> Self {
        Self {
            max_lag: 15,
            criterion: Criterion::Aic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarSection {
    /// Largest lag in the selection table.
    #[serde(default = "five")]
    pub max_lag: usize,
    /// Final order, fitted with the dummies.
    pub order: Option<usize>,
    /// First-pass order, fitted without dummies and diagnosed. Defaults to
    /// the final order.
    pub initial_order: Option<usize>,
    #[serde(default = "yes")]
    pub constant: bool,
    #[serde(default)]
    pub trend: bool,
    /// Largest lag of the residual autocorrelation tests.
    #[serde(default = "twelve")]
    pub lm_lags: usize,
    /// Include the dummies when comparing lag orders.
    #[serde(default = "yes")]
    pub select_with_dummies: bool,
}

impl Default for VarSection {
    fn default() -> Self {
        Self {
            max_lag: 5,
            order: None,
            initial_order: None,
            constant: true,
            trend: false,
            lm_lags: 12,
            select_with_dummies: true,
        }
    }
}

impl VarSection {
    pub fn deterministic(&self) -> VarDeterministic {
        VarDeterministic {
            constant: self.constant,
            trend: self.trend,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JohansenSection {
    /// Deterministic case 1..=5.
    #[serde(default = "two")]
    pub case: u8,
    #[serde(default = "trace")]
    pub rank_policy: RankPolicy,
    #[serde(default = "five_percent")]
    pub level: f64,
}

impl Default for JohansenSection {
    fn default() -> Self {
        Self {
            case: 2,
            rank_policy: RankPolicy::Trace,
            level: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VecmSection {
    /// Lagged differences; must equal the VAR order minus one.
    pub lags: Option<usize>,
    /// Series on which each cointegrating vector is normalised.
    #[serde(default)]
    pub pivots: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrangerSection {
    #[serde(default = "five_percent")]
    pub level: f64,
}

impl Default for GrangerSection {
    fn default() -> Self {
        Self { level: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LopSection {
    #[serde(default = "one_percent")]
    pub level: f64,
}

impl Default for LopSection {
    fn default() -> Self {
        Self { level: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out(),
            formats: default_formats(),
        }
    }
}

fn yes() -> bool {
    true
}
fn two() -> u8 {
    2
}
fn five() -> usize {
    5
}
fn twelve() -> usize {
    12
}
fn fifteen() -> usize {
    15
}
fn aic() -> Criterion {
    Criterion::Aic
}
fn trace() -> RankPolicy {
    RankPolicy::Trace
}
fn five_percent() -> f64 {
    0.05
}
fn one_percent() -> f64 {
    0.01
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Text, Format::Csv]
}

impl PipelineConfig {
    /// Reads a config file, resolving the data path against its directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut config = Self::from_toml(&text)?;
        if config.data.path.is_relative() {
            if let Some(dir) = path.parent() {
                config.data.path = dir.join(&config.data.path);
            }
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.case()?;
        for (what, level) in [
            ("johansen.level", self.johansen.level),
            ("granger.level", self.granger.level),
            ("lop.level", self.lop.level),
        ] {
            if !(level > 0.0 && level < 1.0) {
                return bad(format!("{what} = {level} is outside (0, 1)"));
            }
        }
        let order = self.var_order();
        if order == 0 {
            return bad("var.order must be at least 1".into());
        }
        if order > self.var.max_lag.max(order) {
            return bad("var.order exceeds var.max_lag".into());
        }
        if let Some(lags) = self.vecm.lags {
            if lags + 1 != order {
                return bad(format!(
                    "vecm.lags = {lags} must equal var.order - 1 = {}",
                    order - 1
                ));
            }
        }
        if self.var.lm_lags == 0 {
            return bad("var.lm_lags must be at least 1".into());
        }
        if self.output.formats.is_empty() {
            return bad("output.formats is empty".into());
        }
        Ok(())
    }

    pub fn case(&self) -> Result<JohansenCase, CliError> {
        JohansenCase::from_number(self.johansen.case).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Final VAR order: explicit, else one more than the VECM lags, else 2.
    pub fn var_order(&self) -> usize {
        self.var
            .order
            .or(self.vecm.lags.map(|l| l + 1))
            .unwrap_or(2)
    }

    pub fn initial_order(&self) -> usize {
        self.var.initial_order.unwrap_or_else(|| self.var_order())
    }

    pub fn data_config(&self) -> Result<DataConfig, lopcoint::Error> {
        DataConfig::from_parts(
            self.data.path.clone(),
            &self.data.regions,
            self.dummies.iter().map(|(k, v)| (k.clone(), v.clone())),
        )
    }

    /// Overrides every significance level.
    pub fn set_level(&mut self, level: f64) {
        self.johansen.level = level;
        self.granger.level = level;
        self.lop.level = level;
    }

    /// Dummy months outside the sample are reported as data errors.
    pub fn check_dummy_range(&self, first: YearMonth, last: YearMonth) -> Result<(), lopcoint::Error> {
        for (name, months) in self.data_config()?.dummies.entries() {
            if let Some(m) = months.iter().find(|m| **m < first || **m > last) {
                return Err(lopcoint::Error::InvalidDummy(format!(
                    "{name}: {m} outside the sample {first}..{last}"
                )));
            }
        }
        Ok(())
    }
}
