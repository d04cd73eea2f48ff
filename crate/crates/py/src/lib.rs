//! Python bindings for the question-quality pipeline.
//!
//! Feature vectors cross the boundary as lists of active word indices plus
//! the vocabulary size; labels as `"HQ"`, `"LQ_CLOSE"` or `"LQ_EDIT"`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use quill::artifact::{ModelArtifact, ModelFamily};
use quill::baselines::Classifier;
use quill::config::RunConfig;
use quill::corpus::{generate_synthetic as generate, SyntheticSpec};
use quill::eval::{self, CurveSeries, MetricsReport};
use quill::neuralnet::{count_params as count, EpochTrace, NetworkSpec};
use quill::pipeline::{self, EvaluateArgs};
use quill::textprep::{self, Stoplist, TokenizerConfig};
use quill::{QualityLabel, QuillError, Sample, SparseBinaryVector};

create_exception!(quill_py, QuillPyError, PyException, "Error raised by the quill core library.");

fn err(e: QuillError) -> PyErr {
    QuillPyError::new_err(format!("[{}] {e}", e.code()))
}

fn label(s: &str) -> PyResult<QualityLabel> {
    s.parse::<QualityLabel>().map_err(QuillPyError::new_err)
}

fn vector(indices: Vec<u32>, dimension: usize) -> PyResult<SparseBinaryVector> {
    SparseBinaryVector::from_unsorted(indices, dimension).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (text, lowercase = true, strip_html = true, min_token_length = 1))]
fn tokenize(text: &str, lowercase: bool, strip_html: bool, min_token_length: usize) -> Vec<String> {
    let config = TokenizerConfig {
        lowercase,
        strip_html,
        min_token_length,
    };
    textprep::tokenize(text, &config)
}

#[pyfunction]
fn remove_stopwords(tokens: Vec<String>) -> Vec<String> {
    textprep::remove_stopwords(&tokens, &Stoplist::english())
}

#[pyclass(name = "Vocabulary", module = "quill_py")]
struct PyVocabulary {
    inner: quill::Vocabulary,
}

#[pymethods]
impl PyVocabulary {
    /// Words occurring in at least `min_df` of the token lists.
    #[staticmethod]
    #[pyo3(signature = (documents, min_df = 1))]
    fn build(documents: Vec<Vec<String>>, min_df: usize) -> PyResult<Self> {
        let inner = textprep::build_vocabulary(&documents, min_df).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: quill::Vocabulary::load(path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.size()
    }

    fn index_of(&self, word: &str) -> Option<usize> {
        self.inner.index_of(word)
    }

    /// Sorted indices of the vocabulary words among `tokens`.
    fn vectorize(&self, tokens: Vec<String>) -> Vec<u32> {
        textprep::vectorize(&tokens, &self.inner).indices().to_vec()
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }
}

/// Generated records as `(id, title, body, label)` tuples.
#[pyfunction]
#[pyo3(signature = (n_records = 3000, vocabulary_size = 500, class_separation = 1.0, seed = 0))]
fn generate_synthetic(
    n_records: usize,
    vocabulary_size: usize,
    class_separation: f64,
    seed: u64,
) -> PyResult<Vec<(String, String, String, String)>> {
    let spec = SyntheticSpec::new(n_records, vocabulary_size, class_separation, seed);
    Ok(generate(&spec)
        .map_err(err)?
        .into_iter()
        .map(|r| (r.id, r.title, r.body, r.label.as_str().to_string()))
        .collect())
}

/// `(per-layer parameter counts, total)` for `model1` or `model2`.
#[pyfunction]
#[pyo3(signature = (input_dimension, family = "model2"))]
fn count_params(input_dimension: usize, family: &str) -> PyResult<(Vec<usize>, usize)> {
    let spec = match family {
        "model1" => NetworkSpec::model1(input_dimension, 0),
        "model2" => NetworkSpec::model2(input_dimension, 0),
        other => return Err(err(QuillError::Config(format!("not a network family: {other}")))),
    };
    Ok(count(&spec))
}

fn report_dict<'py>(py: Python<'py>, r: &MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("macro_precision", r.macro_precision)?;
    d.set_item("macro_recall", r.macro_recall)?;
    d.set_item("macro_f1", r.macro_f1)?;
    d.set_item("weighted_f1", r.weighted_f1)?;
    for l in QualityLabel::ALL {
        let c = l.index();
        d.set_item(format!("precision_{l}"), r.precision[c])?;
        d.set_item(format!("recall_{l}"), r.recall[c])?;
        d.set_item(format!("f1_{l}"), r.f1[c])?;
        d.set_item(format!("support_{l}"), r.support[c])?;
    }
    Ok(d)
}

#[pyfunction]
fn metrics<'py>(py: Python<'py>, predictions: Vec<String>, truths: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let p = predictions.iter().map(|s| label(s)).collect::<PyResult<Vec<_>>>()?;
    let t = truths.iter().map(|s| label(s)).collect::<PyResult<Vec<_>>>()?;
    let cm = eval::confusion(&p, &t).map_err(err)?;
    report_dict(py, &eval::precision_recall_f1(&cm).map_err(err)?)
}

/// Epoch (1-based) ending `patience` consecutive validation-loss rises, or `None`.
#[pyfunction]
#[pyo3(signature = (val_losses, patience = 3))]
fn detect_overfitting(val_losses: Vec<f64>, patience: usize) -> PyResult<Option<usize>> {
    let traces = val_losses
        .iter()
        .enumerate()
        .map(|(i, &v)| EpochTrace {
            epoch: i + 1,
            train_loss: f64::NAN,
            train_accuracy: f64::NAN,
            val_loss: v,
            val_accuracy: f64::NAN,
        })
        .collect();
    let series = CurveSeries::new("series", traces).map_err(err)?;
    Ok(eval::detect_overfitting(&series, patience))
}

#[pyclass(name = "Model", module = "quill_py")]
struct PyModel {
    inner: ModelArtifact,
}

#[pymethods]
impl PyModel {
    /// Trains `family` on index lists with labels. `overrides` are config
    /// `section.key=value` strings, e.g. `"train.epochs=5"`.
    #[staticmethod]
    #[pyo3(signature = (family, features, labels, dimension, validation_features = None, validation_labels = None, overrides = None))]
    fn train(
        family: &str,
        features: Vec<Vec<u32>>,
        labels: Vec<String>,
        dimension: usize,
        validation_features: Option<Vec<Vec<u32>>>,
        validation_labels: Option<Vec<String>>,
        overrides: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let mut sets = overrides.unwrap_or_default();
        sets.push(format!("model.family=\"{family}\""));
        let config = RunConfig::from_sources(None, &sets).map_err(err)?;
        let samples = |xs: Vec<Vec<u32>>, ys: Vec<String>| -> PyResult<Vec<Sample>> {
            if xs.len() != ys.len() {
                return Err(err(QuillError::LengthMismatch {
                    left: xs.len(),
                    right: ys.len(),
                }));
            }
            xs.into_iter()
                .zip(ys)
                .map(|(x, y)| Ok(Sample::new(vector(x, dimension)?, label(&y)?.index())))
                .collect()
        };
        let train = samples(features, labels)?;
        let validation = samples(
            validation_features.unwrap_or_default(),
            validation_labels.unwrap_or_default(),
        )?;
        let (model, _) = pipeline::train_family(&config, &train, &validation).map_err(err)?;
        Ok(Self {
            inner: ModelArtifact::new(config.model.family, model),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ModelArtifact::load(path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family.tag()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.model.dimension()
    }

    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn scores(&self, indices: Vec<u32>) -> PyResult<Vec<f64>> {
        let x = vector(indices, self.inner.model.dimension())?;
        self.inner.model.scores(&x).map_err(err)
    }

    /// `(label, scores)` for one index list.
    fn predict(&self, indices: Vec<u32>) -> PyResult<(String, Vec<f64>)> {
        let scores = self.scores(indices)?;
        let l = QualityLabel::from_index(quill::argmax(&scores)).expect("3 classes");
        Ok((l.as_str().to_string(), scores))
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, pyo3::types::PyBytes>> {
        Ok(pyo3::types::PyBytes::new(py, &self.inner.to_bytes().map_err(err)?))
    }
}

fn run_config(config_path: Option<PathBuf>, overrides: Option<Vec<String>>) -> PyResult<RunConfig> {
    RunConfig::load(config_path.as_deref(), &overrides.unwrap_or_default()).map_err(err)
}

/// Runs the `prepare` command; returns the report text.
#[pyfunction]
#[pyo3(signature = (config_path = None, overrides = None))]
fn prepare(config_path: Option<PathBuf>, overrides: Option<Vec<String>>) -> PyResult<String> {
    let config = run_config(config_path, overrides)?;
    Ok(pipeline::cmd_prepare(&config).map_err(err)?.to_text())
}

/// Runs the `train` command; returns the artifact path.
#[pyfunction]
#[pyo3(signature = (config_path = None, overrides = None))]
fn train(config_path: Option<PathBuf>, overrides: Option<Vec<String>>) -> PyResult<PathBuf> {
    let config = run_config(config_path, overrides)?;
    Ok(pipeline::cmd_train(&config).map_err(err)?.artifact_path)
}

/// Runs the `evaluate` command; returns the test metrics.
#[pyfunction]
#[pyo3(signature = (config_path = None, overrides = None))]
fn evaluate<'py>(
    py: Python<'py>,
    config_path: Option<PathBuf>,
    overrides: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = run_config(config_path, overrides)?;
    let outcome = pipeline::cmd_evaluate(&config, &EvaluateArgs::default()).map_err(err)?;
    report_dict(py, &outcome.report)
}

/// Prediction lines for `texts` using a trained model and its vocabulary.
#[pyfunction]
#[pyo3(signature = (model_path, texts, vocab_path = None))]
fn predict(model_path: PathBuf, texts: Vec<String>, vocab_path: Option<PathBuf>) -> PyResult<Vec<String>> {
    let predictor = pipeline::Predictor::load(&model_path, vocab_path.as_deref()).map_err(err)?;
    texts.iter().map(|t| predictor.predict_line(t).map_err(err)).collect()
}

#[pymodule]
fn quill_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QuillError", m.py().get_type::<QuillPyError>())?;
    m.add("FAMILIES", ModelFamily::ALL.map(|f| f.tag()).to_vec())?;
    m.add("LABELS", QualityLabel::ALL.map(|l| l.as_str()).to_vec())?;
    m.add_class::<PyVocabulary>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(remove_stopwords, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(count_params, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(detect_overfitting, m)?)?;
    m.add_function(wrap_pyfunction!(prepare, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    Ok(())
}
