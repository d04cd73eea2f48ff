//! Versioned single-file model format.
//!
//! ```text
//! "QUILLMDL"                  8 bytes
//! version                     u32 LE (currently 1)
//! metadata length             u64 LE
//! metadata                    UTF-8 `key=value` lines, sorted by key
//! parameter count             u64 LE
//! parameters                  f32 LE, order documented per family below
//! checksum                    u64 LE, first 8 bytes (LE) of SHA-256 of everything above
//! ```
//!
//! Parameter order by family:
//!
//! - `nb`: class counts `[k]`, then word-presence counts `[k][d]` (exact integers).
//! - `dt`: per node `[kind, feature, absent child, present child, counts[k]]`,
//!   kind 0 = leaf, 1 = split; integers stored exactly.
//! - `svm`, `lr`: weights input-major `[d][k]`, then biases `[k]`.
//! - `model1`, `model2`: per layer, weights input-major `[in][units]`, then biases `[units]`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{
    Classifier, DecisionTreeModel, GridScore, LinearSvmModel, LogisticRegressionModel, NaiveBayesModel, SvmParams,
    TreeNode, TreeParams,
};
use crate::corpus::QualityLabel;
use crate::error::{QuillError, Result};
use crate::neuralnet::{Activation, NetworkModel, NetworkSpec};
use crate::textprep::SparseBinaryVector;

pub const MAGIC: &[u8; 8] = b"QUILLMDL";
pub const FORMAT_VERSION: u32 = 1;
/// Largest integer every f32 represents exactly.
const F32_EXACT_LIMIT: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelFamily {
    #[serde(rename = "nb")]
    NaiveBayes,
    #[serde(rename = "dt")]
    DecisionTree,
    #[serde(rename = "svm")]
    LinearSvm,
    #[serde(rename = "lr")]
    LogisticRegression,
    #[serde(rename = "model1")]
    Model1,
    #[serde(rename = "model2")]
    Model2,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 6] = [
        ModelFamily::NaiveBayes,
        ModelFamily::DecisionTree,
        ModelFamily::LinearSvm,
        ModelFamily::LogisticRegression,
        ModelFamily::Model1,
        ModelFamily::Model2,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelFamily::NaiveBayes => "nb",
            ModelFamily::DecisionTree => "dt",
            ModelFamily::LinearSvm => "svm",
            ModelFamily::LogisticRegression => "lr",
            ModelFamily::Model1 => "model1",
            ModelFamily::Model2 => "model2",
        }
    }

    pub fn is_network(self) -> bool {
        matches!(self, ModelFamily::Model1 | ModelFamily::Model2)
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelFamily {
    type Err = QuillError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| QuillError::Config(format!("unknown model family `{s}` (nb, dt, svm, lr, model1, model2)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainedModel {
    NaiveBayes(NaiveBayesModel),
    DecisionTree(DecisionTreeModel),
    LinearSvm(LinearSvmModel),
    LogisticRegression(LogisticRegressionModel),
    Network(NetworkModel<f32>),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            TrainedModel::NaiveBayes($m) => $body,
            TrainedModel::DecisionTree($m) => $body,
            TrainedModel::LinearSvm($m) => $body,
            TrainedModel::LogisticRegression($m) => $body,
            TrainedModel::Network($m) => $body,
        }
    };
}

impl Classifier for TrainedModel {
    fn n_classes(&self) -> usize {
        dispatch!(self, m => m.n_classes())
    }

    fn dimension(&self) -> usize {
        dispatch!(self, m => m.dimension())
    }

    fn scores(&self, x: &SparseBinaryVector) -> Result<Vec<f64>> {
        dispatch!(self, m => m.scores(x))
    }
}

/// A trained model plus the metadata needed to reuse it.
///
/// `metadata` holds free-form entries (vocabulary hash, tokenizer settings,
/// training config, metrics). Keys starting with `model.` plus `family`,
/// `labels` and `param_count` are written from the model itself on save.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelArtifact {
    pub family: ModelFamily,
    pub model: TrainedModel,
    pub metadata: BTreeMap<String, String>,
}

fn to_f32_exact(v: u64, what: &str) -> Result<f32> {
    if v > F32_EXACT_LIMIT {
        return Err(QuillError::Format(format!("{what} {v} exceeds the exact f32 range")));
    }
    Ok(v as f32)
}

fn from_f32_exact(v: f32, what: &str) -> Result<u64> {
    if !(v >= 0.0 && v.fract() == 0.0 && (v as u64) <= F32_EXACT_LIMIT) {
        return Err(QuillError::Format(format!("{what} `{v}` is not a valid count")));
    }
    Ok(v as u64)
}

fn labels_value() -> String {
    QualityLabel::ALL.map(|l| l.as_str()).join(",")
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn grid_value(report: &[GridScore]) -> String {
    report
        .iter()
        .map(|g| format!("{}:{}:{}", g.lambda, g.mean_accuracy, join(&g.fold_accuracies)))
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_grid(s: &str) -> Result<Vec<GridScore>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|entry| {
            let bad = || QuillError::Format(format!("bad grid entry `{entry}`"));
            let mut parts = entry.split(':');
            let lambda = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let mean_accuracy = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let folds = parts.next().ok_or_else(bad)?;
            let fold_accuracies = if folds.is_empty() {
                Vec::new()
            } else {
                folds.split(',').map(|v| v.parse().map_err(|_| bad())).collect::<Result<_>>()?
            };
            Ok(GridScore {
                lambda,
                fold_accuracies,
                mean_accuracy,
            })
        })
        .collect()
}

struct Meta<'a>(&'a BTreeMap<String, String>);

impl Meta<'_> {
    fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| QuillError::Format(format!("metadata lacks `{key}`")))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| QuillError::Format(format!("metadata `{key}` has bad value `{v}`")))
    }

    fn list(&self, key: &str) -> Result<Vec<usize>> {
        self.get(key)?
            .split(',')
            .map(|v| v.parse().map_err(|_| QuillError::Format(format!("metadata `{key}` has bad list"))))
            .collect()
    }
}

impl ModelArtifact {
    pub fn new(family: ModelFamily, model: TrainedModel) -> Self {
        Self {
            family,
            model,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    /// Total stored parameter count.
    pub fn param_count(&self) -> usize {
        match &self.model {
            TrainedModel::Network(m) => m.param_count(),
            _ => self.encode_model().map(|(_, p)| p.len()).unwrap_or(0),
        }
    }

    fn encode_model(&self) -> Result<(BTreeMap<String, String>, Vec<f32>)> {
        let mut meta = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            meta.insert(format!("model.{k}"), v);
        };
        let mut params = Vec::new();
        match &self.model {
            TrainedModel::NaiveBayes(m) => {
                put("alpha", m.alpha().to_string());
                put("n_classes", m.n_classes().to_string());
                put("dimension", m.dimension().to_string());
                for &c in m.class_counts() {
                    params.push(to_f32_exact(c, "class count")?);
                }
                for &c in m.present_counts() {
                    params.push(to_f32_exact(c, "feature count")?);
                }
            }
            TrainedModel::DecisionTree(m) => {
                put("n_classes", m.n_classes().to_string());
                put("dimension", m.dimension().to_string());
                put("max_depth", m.params().max_depth.to_string());
                put("min_samples_split", m.params().min_samples_split.to_string());
                put("node_count", m.nodes().len().to_string());
                for node in m.nodes() {
                    let (kind, feature, absent, present) = match node {
                        TreeNode::Leaf { .. } => (0, 0, 0, 0),
                        TreeNode::Split {
                            feature,
                            absent,
                            present,
                            ..
                        } => (1, *feature as u64, *absent as u64, *present as u64),
                    };
                    params.push(kind as f32);
                    params.push(to_f32_exact(feature, "feature index")?);
                    params.push(to_f32_exact(absent, "node index")?);
                    params.push(to_f32_exact(present, "node index")?);
                    for &c in node.counts() {
                        params.push(to_f32_exact(c as u64, "node count")?);
                    }
                }
            }
            TrainedModel::LinearSvm(m) => {
                let p = m.params();
                put("lambda", p.lambda.to_string());
                put("epochs", p.epochs.to_string());
                put("seed", p.seed.to_string());
                put("n_classes", m.n_classes().to_string());
                put("dimension", m.dimension().to_string());
                params.extend_from_slice(m.weights());
                params.extend_from_slice(m.bias());
            }
            TrainedModel::LogisticRegression(m) => {
                put("l2_lambda", m.l2_lambda().to_string());
                put("grid", grid_value(m.grid_report()));
                put("n_classes", m.n_classes().to_string());
                put("dimension", m.dimension().to_string());
                params.extend_from_slice(m.weights());
                params.extend_from_slice(m.bias());
            }
            TrainedModel::Network(m) => {
                let spec = &m.spec;
                put("input_dimension", spec.input_dimension.to_string());
                put("layer_units", join(&spec.layer_units));
                put("hidden_activation", spec.hidden_activation.as_str().into());
                put("output_activation", spec.output_activation.as_str().into());
                put("seed", spec.seed.to_string());
                let per_layer: Vec<usize> = m.layers.iter().map(|l| l.param_count()).collect();
                put("layer_params", join(&per_layer));
                params = m.flat_params();
            }
        }
        meta.insert("param_count".into(), params.len().to_string());
        Ok((meta, params))
    }

    fn decode_model(family: ModelFamily, metadata: &BTreeMap<String, String>, params: &[f32]) -> Result<TrainedModel> {
        let meta = Meta(metadata);
        let shape_err = |what: &str| QuillError::Format(format!("{what}: parameter count does not match metadata"));
        Ok(match family {
            ModelFamily::NaiveBayes => {
                let k: usize = meta.parse("model.n_classes")?;
                let d: usize = meta.parse("model.dimension")?;
                if params.len() != k + k * d {
                    return Err(shape_err("nb"));
                }
                let counts = |s: &[f32]| s.iter().map(|&v| from_f32_exact(v, "count")).collect::<Result<Vec<_>>>();
                TrainedModel::NaiveBayes(NaiveBayesModel::from_counts(
                    counts(&params[..k])?,
                    counts(&params[k..])?,
                    meta.parse("model.alpha")?,
                    d,
                )?)
            }
            ModelFamily::DecisionTree => {
                let k: usize = meta.parse("model.n_classes")?;
                let d: usize = meta.parse("model.dimension")?;
                let n: usize = meta.parse("model.node_count")?;
                let width = 4 + k;
                if params.len() != n * width {
                    return Err(shape_err("dt"));
                }
                let nodes = params
                    .chunks(width)
                    .map(|c| {
                        let counts = c[4..]
                            .iter()
                            .map(|&v| from_f32_exact(v, "node count").map(|v| v as u32))
                            .collect::<Result<Vec<_>>>()?;
                        Ok(match from_f32_exact(c[0], "node kind")? {
                            0 => {
                                let label = crate::argmax(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
                                TreeNode::Leaf { counts, label }
                            }
                            1 => TreeNode::Split {
                                feature: from_f32_exact(c[1], "feature")? as u32,
                                absent: from_f32_exact(c[2], "child")? as usize,
                                present: from_f32_exact(c[3], "child")? as usize,
                                counts,
                            },
                            other => return Err(QuillError::Format(format!("bad node kind {other}"))),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let params = TreeParams {
                    max_depth: meta.parse("model.max_depth")?,
                    min_samples_split: meta.parse("model.min_samples_split")?,
                };
                TrainedModel::DecisionTree(DecisionTreeModel::from_nodes(nodes, k, d, params)?)
            }
            ModelFamily::LinearSvm => {
                let k: usize = meta.parse("model.n_classes")?;
                let d: usize = meta.parse("model.dimension")?;
                if params.len() != k * d + k {
                    return Err(shape_err("svm"));
                }
                let p = SvmParams {
                    lambda: meta.parse("model.lambda")?,
                    epochs: meta.parse("model.epochs")?,
                    seed: meta.parse("model.seed")?,
                };
                TrainedModel::LinearSvm(LinearSvmModel::from_parts(
                    params[..k * d].to_vec(),
                    params[k * d..].to_vec(),
                    d,
                    p,
                )?)
            }
            ModelFamily::LogisticRegression => {
                let k: usize = meta.parse("model.n_classes")?;
                let d: usize = meta.parse("model.dimension")?;
                if params.len() != k * d + k {
                    return Err(shape_err("lr"));
                }
                TrainedModel::LogisticRegression(LogisticRegressionModel::from_parts(
                    params[..k * d].to_vec(),
                    params[k * d..].to_vec(),
                    d,
                    meta.parse("model.l2_lambda")?,
                    parse_grid(meta.get("model.grid")?)?,
                )?)
            }
            ModelFamily::Model1 | ModelFamily::Model2 => {
                let activation = |key: &str| -> Result<Activation> {
                    let v = meta.get(key)?;
                    Activation::parse(v).ok_or_else(|| QuillError::Format(format!("unknown activation `{v}`")))
                };
                let spec = NetworkSpec {
                    input_dimension: meta.parse("model.input_dimension")?,
                    layer_units: meta.list("model.layer_units")?,
                    hidden_activation: activation("model.hidden_activation")?,
                    output_activation: activation("model.output_activation")?,
                    seed: meta.parse("model.seed")?,
                };
                TrainedModel::Network(NetworkModel::from_flat_params(&spec, params)?)
            }
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let (model_meta, params) = self.encode_model()?;
        let mut meta = self.metadata.clone();
        meta.retain(|k, _| !k.starts_with("model."));
        meta.extend(model_meta);
        meta.insert("family".into(), self.family.tag().into());
        meta.insert("labels".into(), labels_value());

        let mut text = String::new();
        for (k, v) in &meta {
            if k.contains(['=', '\n']) || v.contains('\n') {
                return Err(QuillError::Format(format!("metadata entry `{k}` contains a reserved character")));
            }
            text.push_str(k);
            text.push('=');
            text.push_str(v);
            text.push('\n');
        }

        let mut out = Vec::with_capacity(36 + text.len() + 4 * params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(text.len() as u64).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend_from_slice(&(params.len() as u64).to_le_bytes());
        for p in &params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        let checksum = checksum(&out);
        out.extend_from_slice(&checksum.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const MIN_LEN: usize = 8 + 4 + 8 + 8 + 8;
        if bytes.len() < MIN_LEN {
            return Err(QuillError::Truncated(format!("{} bytes is shorter than any model file", bytes.len())));
        }
        if &bytes[..8] != MAGIC {
            return Err(QuillError::Format("missing QUILLMDL magic".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(QuillError::UnsupportedVersion(version));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
        let computed = checksum(body);
        if stored != computed {
            return Err(QuillError::Checksum { stored, computed });
        }

        let mut pos: usize = 12;
        let mut take = |n: usize, what: &str| -> Result<&[u8]> {
            let end = pos
                .checked_add(n)
                .filter(|&e| e <= body.len())
                .ok_or_else(|| QuillError::Truncated(format!("{what} runs past end of file")))?;
            let slice = &body[pos..end];
            pos = end;
            Ok(slice)
        };
        let meta_len = u64::from_le_bytes(take(8, "metadata length")?.try_into().expect("8 bytes")) as usize;
        let text = std::str::from_utf8(take(meta_len, "metadata")?)
            .map_err(|_| QuillError::Format("metadata is not UTF-8".into()))?;
        let count = u64::from_le_bytes(take(8, "parameter count")?.try_into().expect("8 bytes")) as usize;
        let raw = take(
            count
                .checked_mul(4)
                .ok_or_else(|| QuillError::Format("parameter count overflows".into()))?,
            "parameters",
        )?;
        if pos != body.len() {
            return Err(QuillError::Format(format!("{} trailing bytes", body.len() - pos)));
        }
        let params: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();

        let mut metadata = BTreeMap::new();
        for line in text.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| QuillError::Format(format!("bad metadata line `{line}`")))?;
            metadata.insert(k.to_string(), v.to_string());
        }
        let family: ModelFamily = Meta(&metadata).get("family")?.parse()?;
        if Meta(&metadata).get("labels")? != labels_value() {
            return Err(QuillError::Format("unsupported label encoding".into()));
        }
        let model = Self::decode_model(family, &metadata, &params)?;
        metadata.retain(|k, _| !(k.starts_with("model.") || k == "family" || k == "labels" || k == "param_count"));
        Ok(Self {
            family,
            model,
            metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| QuillError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| QuillError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn save_model(artifact: &ModelArtifact, path: impl AsRef<Path>) -> Result<()> {
    artifact.save(path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    ModelArtifact::load(path)
}
