//! Run configuration.
//!
//! A config file is TOML: `key = value` lines under `[section]` headings.
//! Every field has a default, and the all-default config is the reference
//! protocol: 80/20 train/test split with 20% of the training part held out
//! for validation, binary bag of words over title and body, Model 2 trained
//! for 30 epochs.
//!
//! ```toml
//! seed = 0
//! out = "quill-out"
//!
//! [data]
//! dataset = "data/train.csv"
//!
//! [split]
//! test_fraction = 0.2
//!
//! [model]
//! family = "model1"
//!
//! [train]
//! epochs = 30
//! ```
//!
//! Command-line overrides use dotted keys (`--set train.epochs=5`) and win
//! over the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::artifact::ModelFamily;
use crate::baselines::{LogisticParams, SvmParams, TreeParams};
use crate::corpus::{ColumnSchema, SyntheticSpec};
use crate::error::{QuillError, Result};
use crate::neuralnet::{Activation, NetworkSpec, Optimizer, TrainConfig};
use crate::textprep::{Preprocessor, Stoplist, TextFields, TokenizerConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub text: TextConfig,
    pub vocab: VocabConfig,
    pub model: ModelConfig,
    pub train: TrainSettings,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("quill-out"),
            data: DataConfig::default(),
            split: SplitConfig::default(),
            text: TextConfig::default(),
            vocab: VocabConfig::default(),
            model: ModelConfig::default(),
            train: TrainSettings::default(),
            eval: EvalConfig::default(),
        }
    }
}

/// Where records come from: a CSV file, or a generated corpus when
/// `synthetic` is set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dataset: Option<PathBuf>,
    pub schema: ColumnSchema,
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    /// Share of the non-test part held out for validation.
    pub validation_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            validation_fraction: 0.2,
            stratified: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextConfig {
    pub fields: TextFields,
    pub lowercase: bool,
    pub strip_html: bool,
    pub min_token_length: usize,
    pub remove_stopwords: bool,
}

impl Default for TextConfig {
    fn default() -> Self {
        let t = TokenizerConfig::default();
        Self {
            fields: TextFields::default(),
            lowercase: t.lowercase,
            strip_html: t.strip_html,
            min_token_length: t.min_token_length,
            remove_stopwords: true,
        }
    }
}

impl TextConfig {
    pub fn preprocessor(&self) -> Preprocessor {
        Preprocessor {
            tokenizer: TokenizerConfig {
                lowercase: self.lowercase,
                strip_html: self.strip_html,
                min_token_length: self.min_token_length,
            },
            fields: self.fields,
            stoplist: if self.remove_stopwords {
                Stoplist::english()
            } else {
                Stoplist::empty()
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VocabSource {
    /// Train and validation parts; test words never enter the vocabulary.
    #[default]
    TrainOnly,
    FullCorpus,
}

impl VocabSource {
    pub fn as_str(self) -> &'static str {
        match self {
            VocabSource::TrainOnly => "train-only",
            VocabSource::FullCorpus => "full-corpus",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub min_df: usize,
    pub source: VocabSource,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            min_df: 1,
            source: VocabSource::TrainOnly,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub family: ModelFamily,
    pub nb_alpha: f64,
    pub dt_max_depth: usize,
    pub dt_min_samples_split: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub lr_grid: Vec<f64>,
    pub lr_folds: usize,
    pub lr_epochs: usize,
    pub lr_learning_rate: f64,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let tree = TreeParams::default();
        let svm = SvmParams::default();
        let lr = LogisticParams::default();
        Self {
            family: ModelFamily::Model2,
            nb_alpha: 1.0,
            dt_max_depth: tree.max_depth,
            dt_min_samples_split: tree.min_samples_split,
            svm_lambda: svm.lambda,
            svm_epochs: svm.epochs,
            lr_grid: lr.grid,
            lr_folds: lr.folds,
            lr_epochs: lr.epochs,
            lr_learning_rate: lr.learning_rate,
            hidden_activation: Activation::Relu,
            output_activation: Activation::Sigmoid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            optimizer: t.optimizer,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Epochs the validation loss must stay above its minimum before the
    /// curve counts as overfitting.
    pub patience: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { patience: 3 }
    }
}

fn merge(base: &mut toml::Table, patch: toml::Table) {
    for (k, v) in patch {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge(b, p),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses one `section.key=value` override. Values that are not valid TOML
/// are taken as bare strings.
fn override_table(assignment: &str) -> Result<toml::Table> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| QuillError::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || !key.split('.').all(|p| !p.is_empty() && p.chars().all(|c| c.is_alphanumeric() || c == '_')) {
        return Err(QuillError::Config(format!("bad override key `{key}`")));
    }
    let value = value.trim();
    let typed = format!("{key} = {value}");
    if let Ok(t) = typed.parse::<toml::Table>() {
        return Ok(t);
    }
    format!("{key} = {}", toml::Value::String(value.to_string()))
        .parse::<toml::Table>()
        .map_err(|e| QuillError::Config(format!("override `{assignment}`: {e}")))
}

impl RunConfig {
    /// Builds a config from optional file text plus overrides applied in order.
    pub fn from_sources(file_text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut table = match file_text {
            Some(text) => text
                .parse::<toml::Table>()
                .map_err(|e| QuillError::Config(e.to_string().replace('\n', " ")))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            merge(&mut table, override_table(o)?);
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| QuillError::Config(e.to_string().replace('\n', " ")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| QuillError::io(p, e))?),
            None => None,
        };
        Self::from_sources(text.as_deref(), overrides)
    }

    /// Canonical TOML rendering; parsing it back yields an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(QuillError::Config(m));
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return bad(format!("split.test_fraction must be in (0, 1), got {}", self.split.test_fraction));
        }
        if !(0.0..1.0).contains(&self.split.validation_fraction) {
            return bad(format!(
                "split.validation_fraction must be in [0, 1), got {}",
                self.split.validation_fraction
            ));
        }
        if self.vocab.min_df == 0 {
            return bad("vocab.min_df must be >= 1".into());
        }
        let m = &self.model;
        if !(m.nb_alpha > 0.0 && m.nb_alpha.is_finite()) {
            return bad(format!("model.nb_alpha must be positive, got {}", m.nb_alpha));
        }
        if m.dt_min_samples_split < 2 {
            return bad("model.dt_min_samples_split must be >= 2".into());
        }
        if !(m.svm_lambda > 0.0 && m.svm_lambda.is_finite()) || m.svm_epochs == 0 {
            return bad("model.svm_lambda must be positive and model.svm_epochs >= 1".into());
        }
        if m.lr_grid.is_empty() || m.lr_grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return bad("model.lr_grid must be a non-empty list of positive values".into());
        }
        if m.lr_folds < 2 || m.lr_epochs == 0 {
            return bad("model.lr_folds must be >= 2 and model.lr_epochs >= 1".into());
        }
        if m.lr_grid.iter().any(|&l| m.lr_learning_rate * l >= 1.0) || m.lr_learning_rate <= 0.0 {
            return bad("model.lr_learning_rate * lambda must be in (0, 1) for every grid value".into());
        }
        if self.model.family.is_network() {
            self.network_spec(1).validate().map_err(|e| QuillError::Config(e.to_string()))?;
        }
        self.train_config().validate().map_err(|e| QuillError::Config(e.to_string()))?;
        if let Some(s) = &self.data.synthetic {
            s.validate().map_err(|e| QuillError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            optimizer: self.train.optimizer,
            validation_fraction: 0.0,
            seed: self.seed,
        }
    }

    /// Architecture for the configured network family.
    pub fn network_spec(&self, input_dimension: usize) -> NetworkSpec {
        let mut spec = match self.model.family {
            ModelFamily::Model1 => NetworkSpec::model1(input_dimension, self.seed),
            _ => NetworkSpec::model2(input_dimension, self.seed),
        };
        spec.hidden_activation = self.model.hidden_activation;
        spec.output_activation = self.model.output_activation;
        spec
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.model.dt_max_depth,
            min_samples_split: self.model.dt_min_samples_split,
        }
    }

    pub fn svm_params(&self) -> SvmParams {
        SvmParams {
            lambda: self.model.svm_lambda,
            epochs: self.model.svm_epochs,
            seed: self.seed,
        }
    }

    pub fn logistic_params(&self) -> LogisticParams {
        LogisticParams {
            grid: self.model.lr_grid.clone(),
            folds: self.model.lr_folds,
            epochs: self.model.lr_epochs,
            learning_rate: self.model.lr_learning_rate,
            seed: self.seed,
        }
    }
}
