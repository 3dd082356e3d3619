//! Run configuration: one TOML file with named sections.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tsbench::backtest::BacktestConfig;
use tsbench::characteristics::{AdfLags, AdfTrend, CharacteristicsOptions};
use tsbench::metrics::IcMode;
use tsbench::panel::PanelFormat;
use tsbench::predictors::{PredictorSpec, DEFAULT_MODEL_FEATURES};
use tsbench::segment::{DEFAULT_COHORT_SIZE, DEFAULT_SEGMENT_LEN, DEFAULT_Z_THRESHOLD};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// One cohort per movement pattern.
    RegimeCohorts,
    MeanReverting,
    Trending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub generator: Generator,
    /// Stocks per pattern (`regime_cohorts`).
    pub cohort_size: usize,
    /// Universe size (`mean_reverting`, `trending`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_stocks: Option<usize>,
    pub n_days: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            generator: Generator::RegimeCohorts,
            cohort_size: 10,
            n_stocks: None,
            n_days: 250,
        }
    }
}

impl SynthSpec {
    pub const DEFAULT_UNIVERSE: usize = 50;

    pub fn universe(&self) -> usize {
        match self.generator {
            Generator::RegimeCohorts => 4 * self.cohort_size,
            _ => self.n_stocks.unwrap_or(Self::DEFAULT_UNIVERSE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    File {
        path: PathBuf,
        #[serde(default = "default_format")]
        format: PanelFormat,
    },
    Synth(SynthSpec),
}

fn default_format() -> PanelFormat {
    PanelFormat::CsvLong
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub length: usize,
    pub cohort_size: usize,
    pub z_threshold: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            length: DEFAULT_SEGMENT_LEN,
            cohort_size: DEFAULT_COHORT_SIZE,
            z_threshold: DEFAULT_Z_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratios: [u32; 3],
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { ratios: [7, 1, 2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizeConfig {
    /// Features z-scored across stocks each day.
    pub features: Vec<String>,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        Self {
            features: DEFAULT_MODEL_FEATURES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacteristicsConfig {
    /// Fixed ADF lag order; the Schwert rule when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adf_lags: Option<usize>,
    pub adf_trend: AdfTrend,
    pub autocorr_lag: usize,
}

impl Default for CharacteristicsConfig {
    fn default() -> Self {
        Self {
            adf_lags: None,
            adf_trend: AdfTrend::Constant,
            autocorr_lag: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub ic_mode: IcMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs"),
        }
    }
}

/// The whole pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Mandatory; may come from the command line instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub data: DataSource,
    #[serde(default)]
    pub segment: SegmentConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub normalize: NormalizeConfig,
    #[serde(default)]
    pub characteristics: CharacteristicsConfig,
    #[serde(default)]
    pub predictors: Vec<PredictorSpec>,
    #[serde(default)]
    pub backtest: BacktestConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// A configuration over a synthetic market with default sections.
    pub fn synthetic(spec: SynthSpec, seed: u64) -> Self {
        Self {
            seed: Some(seed),
            data: DataSource::Synth(spec),
            segment: SegmentConfig::default(),
            split: SplitConfig::default(),
            normalize: NormalizeConfig::default(),
            characteristics: CharacteristicsConfig::default(),
            predictors: Vec::new(),
            backtest: BacktestConfig::default(),
            metrics: MetricsConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Parses a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DataSource::File { path, .. } = &mut self.data {
            join(path);
        }
        join(&mut self.output.dir);
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<&Path>) -> Self {
        if seed.is_some() {
            self.seed = seed;
        }
        if let Some(out) = out {
            self.output.dir = out.to_path_buf();
        }
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn split_ratios(&self) -> (u32, u32, u32) {
        let [a, b, c] = self.split.ratios;
        (a, b, c)
    }

    pub fn characteristics_options(&self) -> CharacteristicsOptions {
        CharacteristicsOptions {
            adf_lags: self.characteristics.adf_lags.map_or(AdfLags::Schwert, AdfLags::Fixed),
            adf_trend: self.characteristics.adf_trend,
            autocorr_lag: self.characteristics.autocorr_lag,
            split: self.split_ratios(),
        }
    }

    /// Checks every section that can be checked before data is loaded.
    /// Messages name the offending field.
    pub fn validate(&self) -> CliResult<()> {
        let fail = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if self.seed.is_none() {
            return fail("seed", "required; set `seed` in the config or pass --seed".into());
        }
        match &self.data {
            DataSource::File { path, .. } => {
                if !path.is_file() {
                    return fail("data.path", format!("{} does not exist", path.display()));
                }
            }
            DataSource::Synth(s) => {
                if s.cohort_size == 0 {
                    return fail("data.cohort_size", "must be positive".into());
                }
                if s.n_days < 30 {
                    return fail("data.n_days", format!("need at least 30 days, got {}", s.n_days));
                }
                match (s.generator, s.n_stocks) {
                    (Generator::RegimeCohorts, Some(_)) => {
                        return fail("data.n_stocks", "not used by regime_cohorts; set cohort_size".into())
                    }
                    (_, Some(n)) if n < 3 => return fail("data.n_stocks", format!("need at least 3 stocks, got {n}")),
                    _ => {}
                }
            }
        }
        if self.segment.length < 2 {
            return fail(
                "segment.length",
                format!("need at least 2 days, got {}", self.segment.length),
            );
        }
        if self.segment.cohort_size == 0 {
            return fail("segment.cohort_size", "must be positive".into());
        }
        if !(self.segment.z_threshold > 0.0 && self.segment.z_threshold.is_finite()) {
            return fail(
                "segment.z_threshold",
                format!("must be positive, got {}", self.segment.z_threshold),
            );
        }
        if self.split.ratios.contains(&0) {
            return fail(
                "split.ratios",
                format!("all parts must be positive, got {:?}", self.split.ratios),
            );
        }
        if self.characteristics.autocorr_lag == 0 {
            return fail("characteristics.autocorr_lag", "must be at least 1".into());
        }
        let mut names = BTreeSet::new();
        for (k, spec) in self.predictors.iter().enumerate() {
            if let Err(e) = spec.validate() {
                return fail(&format!("predictors[{k}]"), e.to_string());
            }
            let name = spec.display_name();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return fail(
                    &format!("predictors[{k}].name"),
                    format!("`{name}` must be non-empty ASCII letters, digits, `-`, `_` or `.`"),
                );
            }
            if !names.insert(name.clone()) {
                return fail(
                    &format!("predictors[{k}].name"),
                    format!("duplicate predictor name `{name}`"),
                );
            }
        }
        if let Err(e) = self.backtest.validate(None) {
            return fail("backtest", e.to_string());
        }
        if let DataSource::Synth(s) = &self.data {
            if self.backtest.m > s.universe() {
                return fail(
                    "backtest.m",
                    format!(
                        "portfolio size {} exceeds the synthetic universe of {}",
                        self.backtest.m,
                        s.universe()
                    ),
                );
            }
        }
        Ok(())
    }

    /// Copy written into a run archive: data points at the archived panel
    /// and reruns land inside the archive.
    pub fn archived(&self, panel_file: &str) -> Self {
        Self {
            data: DataSource::File {
                path: PathBuf::from(panel_file),
                format: PanelFormat::Binary,
            },
            output: OutputConfig {
                dir: PathBuf::from("reruns"),
            },
            ..self.clone()
        }
    }
}
