//! Run configuration: a TOML file merged with command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::corpus::ConceptInputMode;
use crate::error::{Error, Result};
use crate::similarity::{ClassifierConfig, Measure};
use crate::weighting::{Basis, WeightingConfig};

pub const CONFIG_ENV: &str = "HETMATCH_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Tsv,
    #[default]
    Table,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "tsv" => Ok(OutputFormat::Tsv),
            "table" => Ok(OutputFormat::Table),
            _ => Err(Error::Config(format!("unknown output format `{s}`"))),
        }
    }
}

/// Every setting optional; used for both the config file and flag overrides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub embeddings: Option<PathBuf>,
    pub embeddings_name: Option<String>,
    pub idf: Option<PathBuf>,
    pub function_words: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub mode: Option<ConceptInputMode>,
    pub measure: Option<Measure>,
    pub use_tf: Option<bool>,
    pub use_idf: Option<bool>,
    pub basis: Option<Basis>,
    pub threshold: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub tuning_fraction: Option<f64>,
    pub format: Option<OutputFormat>,
    pub threads: Option<usize>,
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: PartialConfig) -> PartialConfig {
        PartialConfig {
            embeddings: over.embeddings.or(self.embeddings),
            embeddings_name: over.embeddings_name.or(self.embeddings_name),
            idf: over.idf.or(self.idf),
            function_words: over.function_words.or(self.function_words),
            dataset: over.dataset.or(self.dataset),
            cache: over.cache.or(self.cache),
            mode: over.mode.or(self.mode),
            measure: over.measure.or(self.measure),
            use_tf: over.use_tf.or(self.use_tf),
            use_idf: over.use_idf.or(self.use_idf),
            basis: over.basis.or(self.basis),
            threshold: over.threshold.or(self.threshold),
            n: over.n.or(self.n),
            seed: over.seed.or(self.seed),
            tuning_fraction: over.tuning_fraction.or(self.tuning_fraction),
            format: over.format.or(self.format),
            threads: over.threads.or(self.threads),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub embeddings: PathBuf,
    pub embeddings_name: String,
    pub idf: Option<PathBuf>,
    pub function_words: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub mode: ConceptInputMode,
    pub measure: Measure,
    pub weighting: WeightingConfig,
    pub threshold: Option<f64>,
    pub n: Option<usize>,
    pub seed: u64,
    pub tuning_fraction: f64,
    pub format: OutputFormat,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn resolve(p: PartialConfig) -> Result<Self> {
        let embeddings = p
            .embeddings
            .ok_or_else(|| Error::Config("embeddings path is required".into()))?;
        let embeddings_name = p.embeddings_name.unwrap_or_else(|| {
            embeddings
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "embeddings".into())
        });
        let defaults = WeightingConfig::default();
        Ok(RunConfig {
            embeddings,
            embeddings_name,
            idf: p.idf,
            function_words: p.function_words,
            dataset: p.dataset,
            cache: p.cache,
            mode: p.mode.unwrap_or_default(),
            measure: p.measure.unwrap_or(Measure::AvgCos),
            weighting: WeightingConfig {
                use_tf: p.use_tf.unwrap_or(defaults.use_tf),
                use_idf: p.use_idf.unwrap_or(defaults.use_idf),
                basis: p.basis.unwrap_or(defaults.basis),
            },
            threshold: p.threshold,
            n: p.n,
            seed: p.seed.unwrap_or(42),
            tuning_fraction: p.tuning_fraction.unwrap_or(0.2),
            format: p.format.unwrap_or_default(),
            threads: p.threads,
        })
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| Error::Config("dataset path is required".into()))
    }

    /// Classifier for commands that apply a fixed threshold (`evaluate`, `score`, `explain`).
    pub fn classifier(&self) -> Result<ClassifierConfig> {
        let threshold = self
            .threshold
            .ok_or_else(|| Error::Config("a threshold is required for this command".into()))?;
        let n = match (self.measure, self.n) {
            (Measure::TopN, None) => {
                return Err(Error::Config("n is required for the top-n measure".into()))
            }
            (Measure::AvgCos, Some(_)) => {
                return Err(Error::Config(
                    "n is only valid for the top-n measure".into(),
                ))
            }
            (_, n) => n,
        };
        let c = ClassifierConfig {
            measure: self.measure,
            weighting: self.weighting,
            threshold,
            n,
        };
        c.validate()?;
        Ok(c)
    }

    /// Tuning searches the threshold and `n`, so neither may be fixed.
    pub fn check_tunable(&self) -> Result<()> {
        if self.threshold.is_some() {
            return Err(Error::Config(
                "threshold is chosen by tuning and cannot be given".into(),
            ));
        }
        if self.n.is_some() {
            return Err(Error::Config(
                "n is chosen by tuning and cannot be given".into(),
            ));
        }
        Ok(())
    }
}
