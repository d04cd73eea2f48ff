//! The `prepare`, `train`, `evaluate`, `predict` and `curves` commands.
//!
//! Output directory layout:
//!
//! ```text
//! <out>/split.txt                    split manifest
//! <out>/vocab.txt                    vocabulary
//! <out>/prepare_report.txt
//! <out>/<family>/model.qmdl          model artifact
//! <out>/<family>/vocab.txt           copy of the vocabulary the model was trained on
//! <out>/<family>/validation_metrics.csv
//! <out>/<family>/curves.csv          network families only
//! <out>/<family>/test_metrics.csv    written by `evaluate`
//! <out>/<family>/test_predictions.tsv
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use crate::artifact::{ModelArtifact, ModelFamily, TrainedModel};
use crate::baselines::{
    Classifier, DecisionTreeModel, LinearSvmModel, LogisticRegressionModel, NaiveBayesModel,
};
use crate::config::{RunConfig, TextConfig, VocabSource};
use crate::corpus::{
    class_distribution, file_fingerprint, generate_synthetic, load_dataset, split_dataset, split_dataset_stratified,
    DatasetSplit, QualityLabel, QuestionRecord, SplitManifest,
};
use crate::error::{QuillError, Result};
use crate::eval::{confusion, detect_overfitting, merge_curves_csv, metrics_csv, precision_recall_f1, sig6, CurveSeries, MetricsReport};
use crate::neuralnet::{init_network, train_with_validation};
use crate::textprep::{build_vocabulary, vectorize, Preprocessor, TextFields, Vocabulary, STOPLIST_VERSION};
use crate::Sample;

pub const SPLIT_FILE: &str = "split.txt";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const PREPARE_REPORT_FILE: &str = "prepare_report.txt";
pub const MODEL_FILE: &str = "model.qmdl";
pub const VALIDATION_METRICS_FILE: &str = "validation_metrics.csv";
pub const TEST_METRICS_FILE: &str = "test_metrics.csv";
pub const TEST_PREDICTIONS_FILE: &str = "test_predictions.tsv";
pub const CURVES_FILE: &str = "curves.csv";
pub const LOCK_FILE: &str = ".quill.lock";

/// Advisory lock on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| QuillError::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(QuillError::Locked(dir.to_path_buf())),
            Err(e) => Err(QuillError::io(&path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| QuillError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| QuillError::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| QuillError::io(path, e))
}

pub fn family_dir(config: &RunConfig, family: ModelFamily) -> PathBuf {
    config.out.join(family.tag())
}

/// Records named by the config plus the identity hash of their source.
pub fn load_records(config: &RunConfig) -> Result<(Vec<QuestionRecord>, String)> {
    if let Some(spec) = &config.data.synthetic {
        return Ok((generate_synthetic(spec)?, spec.fingerprint()));
    }
    let path = config
        .data
        .dataset
        .as_deref()
        .ok_or_else(|| QuillError::Config("no dataset: set data.dataset or [data.synthetic]".into()))?;
    let records = load_dataset(path, &config.data.schema)?;
    Ok((records, file_fingerprint(path)?))
}

fn make_split(config: &RunConfig, records: &[QuestionRecord]) -> Result<DatasetSplit> {
    let s = &config.split;
    if s.stratified {
        split_dataset_stratified(records, s.test_fraction, s.validation_fraction, config.seed)
    } else {
        split_dataset(records, s.test_fraction, s.validation_fraction, config.seed)
    }
}

fn vocabulary_for(config: &RunConfig, split: &DatasetSplit, pre: &Preprocessor) -> Result<Vocabulary> {
    let docs: Vec<Vec<String>> = match config.vocab.source {
        VocabSource::TrainOnly => split.non_test().map(|r| pre.record_tokens(r)).collect(),
        VocabSource::FullCorpus => split
            .non_test()
            .chain(split.test.iter())
            .map(|r| pre.record_tokens(r))
            .collect(),
    };
    build_vocabulary(&docs, config.vocab.min_df)
}

/// Feature vectors for `records`, labels by encoding index.
pub fn featurize(records: &[QuestionRecord], pre: &Preprocessor, vocab: &Vocabulary) -> Vec<Sample> {
    records
        .iter()
        .map(|r| Sample::new(vectorize(&pre.record_tokens(r), vocab), r.label.index()))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrepareReport {
    pub dataset_hash: String,
    pub records: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub vocabulary_size: usize,
    pub min_df: usize,
    pub vocab_source: VocabSource,
    pub class_counts: BTreeMap<QualityLabel, usize>,
}

impl PrepareReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset_hash={}", self.dataset_hash);
        let _ = writeln!(s, "records={}", self.records);
        let _ = writeln!(s, "train={}", self.train);
        let _ = writeln!(s, "validation={}", self.validation);
        let _ = writeln!(s, "test={}", self.test);
        let _ = writeln!(s, "classes={}", self.class_counts.values().filter(|&&c| c > 0).count());
        for (label, count) in &self.class_counts {
            let _ = writeln!(s, "class.{label}={count}");
        }
        let _ = writeln!(s, "vocabulary_size={}", self.vocabulary_size);
        let _ = writeln!(s, "min_df={}", self.min_df);
        let _ = writeln!(s, "vocab_source={}", self.vocab_source.as_str());
        s
    }
}

/// Everything downstream commands need from the prepared data.
pub struct Prepared {
    pub split: DatasetSplit,
    pub vocabulary: Vocabulary,
    pub dataset_hash: String,
    pub report: PrepareReport,
}

fn prepare_unlocked(config: &RunConfig) -> Result<Prepared> {
    let (records, dataset_hash) = load_records(config)?;
    let split = make_split(config, &records)?;
    let pre = config.text.preprocessor();
    let vocabulary = vocabulary_for(config, &split, &pre)?;
    let report = PrepareReport {
        dataset_hash: dataset_hash.clone(),
        records: records.len(),
        train: split.train.len(),
        validation: split.validation.len(),
        test: split.test.len(),
        vocabulary_size: vocabulary.size(),
        min_df: config.vocab.min_df,
        vocab_source: config.vocab.source,
        class_counts: class_distribution(&records),
    };
    write_file(
        &config.out.join(SPLIT_FILE),
        SplitManifest::from_split(&split, &dataset_hash).to_text(),
    )?;
    vocabulary.save(config.out.join(VOCAB_FILE))?;
    write_file(&config.out.join(PREPARE_REPORT_FILE), report.to_text())?;
    Ok(Prepared {
        split,
        vocabulary,
        dataset_hash,
        report,
    })
}

/// Splits the records and builds the vocabulary; writes the split manifest,
/// vocabulary file and a prepare report into `config.out`.
pub fn cmd_prepare(config: &RunConfig) -> Result<PrepareReport> {
    config.validate()?;
    let _lock = OutputLock::acquire(&config.out)?;
    Ok(prepare_unlocked(config)?.report)
}

/// Reuses prepared files in `config.out` when present, otherwise prepares.
fn load_or_prepare(config: &RunConfig) -> Result<(DatasetSplit, Vocabulary, String)> {
    let split_path = config.out.join(SPLIT_FILE);
    let vocab_path = config.out.join(VOCAB_FILE);
    if !(split_path.exists() && vocab_path.exists()) {
        let p = prepare_unlocked(config)?;
        return Ok((p.split, p.vocabulary, p.dataset_hash));
    }
    let (records, dataset_hash) = load_records(config)?;
    let manifest = SplitManifest::parse(&read_file(&split_path)?)?;
    if manifest.dataset_hash != dataset_hash {
        return Err(QuillError::HashMismatch {
            what: "dataset",
            expected: manifest.dataset_hash,
            found: dataset_hash,
        });
    }
    Ok((manifest.resolve(&records)?, Vocabulary::load(&vocab_path)?, dataset_hash))
}

fn text_metadata(text: &TextConfig) -> Vec<(&'static str, String)> {
    vec![
        ("text.fields", text.fields.as_str().to_string()),
        ("text.lowercase", text.lowercase.to_string()),
        ("text.strip_html", text.strip_html.to_string()),
        ("text.min_token_length", text.min_token_length.to_string()),
        (
            "text.stoplist",
            if text.remove_stopwords { STOPLIST_VERSION } else { "none" }.to_string(),
        ),
    ]
}

/// Rebuilds the text settings an artifact was trained with.
pub fn artifact_text_config(artifact: &ModelArtifact) -> Result<TextConfig> {
    let get = |k: &str| {
        artifact
            .meta(k)
            .ok_or_else(|| QuillError::Format(format!("metadata lacks `{k}`")))
    };
    let bad = |k: &str| QuillError::Format(format!("metadata `{k}` has a bad value"));
    let flag = |k: &str| get(k)?.parse::<bool>().map_err(|_| bad(k));
    let stoplist = get("text.stoplist")?;
    if stoplist != STOPLIST_VERSION && stoplist != "none" {
        return Err(QuillError::Format(format!("unknown stop list `{stoplist}`")));
    }
    Ok(TextConfig {
        fields: TextFields::parse(get("text.fields")?).ok_or_else(|| bad("text.fields"))?,
        lowercase: flag("text.lowercase")?,
        strip_html: flag("text.strip_html")?,
        min_token_length: get("text.min_token_length")?
            .parse()
            .map_err(|_| bad("text.min_token_length"))?,
        remove_stopwords: stoplist == STOPLIST_VERSION,
    })
}

/// Metrics of `model` on `data`.
pub fn score_samples<C: Classifier>(model: &C, data: &[Sample]) -> Result<(MetricsReport, Vec<Vec<f64>>)> {
    let mut preds = Vec::with_capacity(data.len());
    let mut truths = Vec::with_capacity(data.len());
    let mut all_scores = Vec::with_capacity(data.len());
    for s in data {
        let scores = model.scores(&s.features)?;
        preds.push(QualityLabel::from_index(crate::argmax(&scores)).expect("3 classes"));
        truths.push(QualityLabel::from_index(s.label).expect("3 classes"));
        all_scores.push(scores);
    }
    Ok((precision_recall_f1(&confusion(&preds, &truths)?)?, all_scores))
}

pub fn train_family(
    config: &RunConfig,
    train: &[Sample],
    validation: &[Sample],
) -> Result<(TrainedModel, Option<CurveSeries>)> {
    let n = QualityLabel::COUNT;
    let m = &config.model;
    Ok(match m.family {
        ModelFamily::NaiveBayes => (TrainedModel::NaiveBayes(NaiveBayesModel::fit(train, n, m.nb_alpha)?), None),
        ModelFamily::DecisionTree => (
            TrainedModel::DecisionTree(DecisionTreeModel::fit(train, n, config.tree_params())?),
            None,
        ),
        ModelFamily::LinearSvm => (TrainedModel::LinearSvm(LinearSvmModel::fit(train, n, config.svm_params())?), None),
        ModelFamily::LogisticRegression => (
            TrainedModel::LogisticRegression(LogisticRegressionModel::fit(train, n, &config.logistic_params())?),
            None,
        ),
        ModelFamily::Model1 | ModelFamily::Model2 => {
            let dimension = train.first().map(|s| s.features.dimension()).unwrap_or(0);
            let spec = config.network_spec(dimension);
            let model = init_network::<f32>(&spec)?;
            let (model, traces) = train_with_validation(model, train, validation, &config.train_config())?;
            let series = CurveSeries::new(m.family.tag(), traces)?;
            (TrainedModel::Network(model), Some(series))
        }
    })
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub artifact_path: PathBuf,
    pub validation_metrics: Option<MetricsReport>,
    pub curves: Option<CurveSeries>,
    pub overfitting_epoch: Option<usize>,
    pub param_count: usize,
}

/// Trains `config.model.family`, preparing first if needed. Writes the
/// artifact, validation metrics and (networks) the curves CSV.
pub fn cmd_train(config: &RunConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let _lock = OutputLock::acquire(&config.out)?;
    let (split, vocabulary, dataset_hash) = load_or_prepare(config)?;
    let pre = config.text.preprocessor();
    let train = featurize(&split.train, &pre, &vocabulary);
    let validation = featurize(&split.validation, &pre, &vocabulary);
    if train.is_empty() {
        return Err(QuillError::Empty("training part of the split is empty"));
    }

    let family = config.model.family;
    let (model, curves) = train_family(config, &train, &validation)?;
    let validation_metrics = if validation.is_empty() {
        None
    } else {
        Some(score_samples(&model, &validation)?.0)
    };

    let mut artifact = ModelArtifact::new(family, model)
        .with_meta("vocab_hash", vocabulary.content_hash())
        .with_meta("vocab_size", vocabulary.size())
        .with_meta("dataset_hash", &dataset_hash)
        .with_meta("seed", config.seed);
    for (k, v) in text_metadata(&config.text) {
        artifact.metadata.insert(k.into(), v);
    }
    let snapshot = [
        ("train.epochs", config.train.epochs.to_string()),
        ("train.batch_size", config.train.batch_size.to_string()),
        ("train.learning_rate", config.train.learning_rate.to_string()),
        ("train.optimizer", config.train.optimizer.as_str().to_string()),
        ("split.test_fraction", config.split.test_fraction.to_string()),
        ("split.validation_fraction", config.split.validation_fraction.to_string()),
        ("vocab.min_df", config.vocab.min_df.to_string()),
        ("vocab.source", config.vocab.source.as_str().to_string()),
    ];
    for (k, v) in snapshot {
        artifact.metadata.insert(k.into(), v);
    }
    if let Some(r) = &validation_metrics {
        artifact.metadata.insert("metrics.validation_accuracy".into(), format!("{:.4}", r.accuracy));
        artifact.metadata.insert("metrics.validation_macro_f1".into(), format!("{:.4}", r.macro_f1));
    }

    let dir = family_dir(config, family);
    let artifact_path = dir.join(MODEL_FILE);
    std::fs::create_dir_all(&dir).map_err(|e| QuillError::io(&dir, e))?;
    artifact.save(&artifact_path)?;
    vocabulary.save(dir.join(VOCAB_FILE))?;
    if let Some(r) = &validation_metrics {
        write_file(
            &dir.join(VALIDATION_METRICS_FILE),
            metrics_csv(&[(family.tag().to_string(), r.clone())]),
        )?;
    }
    let overfitting_epoch = match &curves {
        Some(series) => {
            write_file(&dir.join(CURVES_FILE), series.to_csv())?;
            detect_overfitting(series, config.eval.patience)
        }
        None => None,
    };
    Ok(TrainOutcome {
        artifact_path,
        validation_metrics,
        curves,
        overfitting_epoch,
        param_count: artifact.param_count(),
    })
}

#[derive(Clone, Debug, Default)]
pub struct EvaluateArgs {
    /// Defaults to `<out>/<family>/model.qmdl`.
    pub model: Option<PathBuf>,
    /// Defaults to `<out>/split.txt`.
    pub split: Option<PathBuf>,
    /// Defaults to `<out>/vocab.txt`.
    pub vocab: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct EvaluateOutcome {
    pub family: ModelFamily,
    pub report: MetricsReport,
    pub metrics_path: PathBuf,
    pub predictions_path: PathBuf,
}

/// Scores an artifact on the test part of a prepared split.
pub fn cmd_evaluate(config: &RunConfig, args: &EvaluateArgs) -> Result<EvaluateOutcome> {
    config.validate()?;
    let model_path = args
        .model
        .clone()
        .unwrap_or_else(|| family_dir(config, config.model.family).join(MODEL_FILE));
    let artifact = ModelArtifact::load(&model_path)?;
    let split_path = args.split.clone().unwrap_or_else(|| config.out.join(SPLIT_FILE));
    let vocab_path = args.vocab.clone().unwrap_or_else(|| config.out.join(VOCAB_FILE));

    let manifest = SplitManifest::parse(&read_file(&split_path)?)?;
    let (records, dataset_hash) = load_records(config)?;
    if manifest.dataset_hash != dataset_hash {
        return Err(QuillError::HashMismatch {
            what: "dataset",
            expected: manifest.dataset_hash,
            found: dataset_hash,
        });
    }
    let vocabulary = Vocabulary::load(&vocab_path)?;
    let expected = artifact
        .meta("vocab_hash")
        .ok_or_else(|| QuillError::Format("artifact has no vocabulary hash".into()))?;
    if expected != vocabulary.content_hash() {
        return Err(QuillError::HashMismatch {
            what: "vocabulary",
            expected: expected.to_string(),
            found: vocabulary.content_hash(),
        });
    }

    let split = manifest.resolve(&records)?;
    let pre = artifact_text_config(&artifact)?.preprocessor();
    let test = featurize(&split.test, &pre, &vocabulary);
    let (report, scores) = score_samples(&artifact.model, &test)?;

    let dir = model_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let _lock = OutputLock::acquire(&dir)?;
    let metrics_path = dir.join(TEST_METRICS_FILE);
    write_file(&metrics_path, metrics_csv(&[(artifact.family.tag().to_string(), report.clone())]))?;
    let mut tsv = String::from("id\tlabel\tscore_HQ\tscore_LQ_CLOSE\tscore_LQ_EDIT\n");
    for (record, s) in split.test.iter().zip(&scores) {
        let _ = writeln!(tsv, "{}\t{}", record.id, prediction_line(s));
    }
    let predictions_path = dir.join(TEST_PREDICTIONS_FILE);
    write_file(&predictions_path, tsv)?;
    Ok(EvaluateOutcome {
        family: artifact.family,
        report,
        metrics_path,
        predictions_path,
    })
}

/// `label<TAB>score_HQ<TAB>score_LQ_CLOSE<TAB>score_LQ_EDIT`
pub fn prediction_line(scores: &[f64]) -> String {
    let label = QualityLabel::from_index(crate::argmax(scores)).expect("3 classes");
    let mut line = label.as_str().to_string();
    for s in scores {
        line.push('\t');
        line.push_str(&sig6(*s));
    }
    line
}

/// A loaded model with the text pipeline and vocabulary it was trained on.
pub struct Predictor {
    pub artifact: ModelArtifact,
    pub vocabulary: Vocabulary,
    pub preprocessor: Preprocessor,
}

impl Predictor {
    /// Loads `model_path` and the vocabulary at `vocab_path`, or
    /// `vocab.txt` next to the model when `None`.
    pub fn load(model_path: &Path, vocab_path: Option<&Path>) -> Result<Self> {
        let artifact = ModelArtifact::load(model_path)?;
        let default_vocab = model_path.with_file_name(VOCAB_FILE);
        let vocabulary = Vocabulary::load(vocab_path.unwrap_or(&default_vocab))?;
        match artifact.meta("vocab_hash") {
            Some(h) if h == vocabulary.content_hash() => {}
            other => {
                return Err(QuillError::HashMismatch {
                    what: "vocabulary",
                    expected: other.unwrap_or("<none>").to_string(),
                    found: vocabulary.content_hash(),
                })
            }
        }
        let preprocessor = artifact_text_config(&artifact)?.preprocessor();
        Ok(Self {
            artifact,
            vocabulary,
            preprocessor,
        })
    }

    pub fn scores(&self, text: &str) -> Result<Vec<f64>> {
        let x = vectorize(&self.preprocessor.tokens(text), &self.vocabulary);
        self.artifact.model.scores(&x)
    }

    pub fn predict_line(&self, text: &str) -> Result<String> {
        Ok(prediction_line(&self.scores(text)?))
    }
}

/// Writes one prediction line per input line.
pub fn cmd_predict<R: BufRead, W: Write>(predictor: &Predictor, input: R, mut output: W) -> Result<usize> {
    let mut n = 0;
    for line in input.lines() {
        let line = line.map_err(|e| QuillError::io("<input>", e))?;
        writeln!(output, "{}", predictor.predict_line(&line)?).map_err(|e| QuillError::io("<output>", e))?;
        n += 1;
    }
    Ok(n)
}

/// Series name for a curves file: its stem, or the parent directory name
/// for files called `curves.csv`.
pub fn curve_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    if stem == "curves" {
        if let Some(parent) = path.parent().and_then(|p| p.file_name()).and_then(|s| s.to_str()) {
            return parent.to_string();
        }
    }
    stem.to_string()
}

/// Re-reads curve CSVs and merges them into one table with a `model` column.
/// `name=path` inputs set the series name explicitly.
pub fn cmd_curves(inputs: &[String]) -> Result<String> {
    if inputs.is_empty() {
        return Err(QuillError::Empty("no curve files given"));
    }
    let series = inputs
        .iter()
        .map(|spec| {
            let (name, path) = match spec.split_once('=') {
                Some((n, p)) => (n.to_string(), PathBuf::from(p)),
                None => (curve_name(Path::new(spec)), PathBuf::from(spec)),
            };
            CurveSeries::parse_csv(&name, &read_file(&path)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_curves_csv(&series))
}

/// Opens `path`, or standard input when `None` or `-`.
pub fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    match path {
        Some(p) if p != Path::new("-") => {
            let f = File::open(p).map_err(|e| QuillError::io(p, e))?;
            Ok(Box::new(std::io::BufReader::new(f)))
        }
        _ => Ok(Box::new(std::io::stdin().lock())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SyntheticSpec;

    fn config(dir: &Path, family: ModelFamily) -> RunConfig {
        let mut c = RunConfig::default();
        c.out = dir.to_path_buf();
        c.data.synthetic = Some(SyntheticSpec::new(300, 60, 1.0, 3));
        c.model.family = family;
        c.model.lr_folds = 3;
        c.train.epochs = 3;
        c
    }

    #[test]
    fn prepare_reports_counts() {
        let dir = tempfile::tempdir().unwrap();
        let r = cmd_prepare(&config(dir.path(), ModelFamily::NaiveBayes)).unwrap();
        assert_eq!(r.records, 300);
        assert_eq!(r.test, 60);
        assert_eq!(r.validation, 48);
        assert_eq!(r.train, 192);
        assert_eq!(r.class_counts.values().sum::<usize>(), 300);
        assert!(dir.path().join(SPLIT_FILE).exists());
        assert!(!dir.path().join(LOCK_FILE).exists());
    }

    #[test]
    fn lock_blocks_second_writer() {
        let dir = tempfile::tempdir().unwrap();
        let _held = OutputLock::acquire(dir.path()).unwrap();
        let err = cmd_prepare(&config(dir.path(), ModelFamily::NaiveBayes)).unwrap_err();
        assert_eq!(err.code(), "locked");
    }

    #[test]
    fn train_evaluate_predict_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(dir.path(), ModelFamily::NaiveBayes);
        let out = cmd_train(&c).unwrap();
        assert!(out.validation_metrics.unwrap().accuracy >= 0.95);
        let ev = cmd_evaluate(&c, &EvaluateArgs::default()).unwrap();
        assert!(ev.report.accuracy >= 0.95);
        let p = Predictor::load(&out.artifact_path, None).unwrap();
        let mut buf = Vec::new();
        cmd_predict(&p, "w0 w3\n\nthe and of\n".as_bytes(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("HQ\t"));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], lines[2]);
    }

    #[test]
    fn curve_names() {
        assert_eq!(curve_name(Path::new("out/model1/curves.csv")), "model1");
        assert_eq!(curve_name(Path::new("run_a.csv")), "run_a");
    }
}
