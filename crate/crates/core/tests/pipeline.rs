use std::path::Path;

use quill::artifact::{ModelArtifact, ModelFamily, TrainedModel};
use quill::baselines::Classifier;
use quill::config::RunConfig;
use quill::corpus::{generate_synthetic, SyntheticSpec};
use quill::neuralnet::NetworkSpec;
use quill::pipeline::{
    self, cmd_evaluate, cmd_predict, cmd_prepare, cmd_train, EvaluateArgs, Predictor, CURVES_FILE, MODEL_FILE,
    PREPARE_REPORT_FILE, SPLIT_FILE, TEST_METRICS_FILE, TEST_PREDICTIONS_FILE, VALIDATION_METRICS_FILE, VOCAB_FILE,
};
use quill::textprep::TextFields;
use quill::{QuillError, Sample, SparseBinaryVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic_config(out: &Path, family: ModelFamily, n: usize) -> RunConfig {
    let mut c = RunConfig::default();
    c.out = out.to_path_buf();
    c.data.synthetic = Some(SyntheticSpec::new(n, 120, 1.0, 17));
    c.model.family = family;
    c.model.lr_folds = 4;
    c
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

fn write_csv(path: &Path, rows: usize, seed: u64) {
    let records = generate_synthetic(&SyntheticSpec::new(rows, 80, 0.9, seed)).unwrap();
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["Id", "Title", "Body", "Tags", "CreationDate", "Y"]).unwrap();
    for r in &records {
        w.write_record([&r.id, &r.title, &r.body, "<rust>", "2016-01-01 00:00:00", r.label.as_str()])
            .unwrap();
    }
    w.flush().unwrap();
}

#[test]
fn full_runs_are_byte_identical() {
    let run = |dir: &Path| {
        let mut c = synthetic_config(dir, ModelFamily::Model2, 600);
        c.train.epochs = 4;
        cmd_prepare(&c).unwrap();
        cmd_train(&c).unwrap();
        cmd_evaluate(&c, &EvaluateArgs::default()).unwrap();
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    for file in [SPLIT_FILE, VOCAB_FILE, PREPARE_REPORT_FILE] {
        assert_eq!(read(a.path().join(file)), read(b.path().join(file)), "{file}");
    }
    for file in [MODEL_FILE, CURVES_FILE, VALIDATION_METRICS_FILE, TEST_METRICS_FILE, TEST_PREDICTIONS_FILE] {
        assert_eq!(
            read(a.path().join("model2").join(file)),
            read(b.path().join("model2").join(file)),
            "{file}"
        );
    }
}

#[test]
fn network_training_writes_one_curve_row_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let c = synthetic_config(dir.path(), ModelFamily::Model2, 300);
    let out = cmd_train(&c).unwrap();
    let csv = String::from_utf8(read(dir.path().join("model2").join(CURVES_FILE))).unwrap();
    assert_eq!(csv.lines().count(), 1 + 30);
    assert_eq!(out.curves.unwrap().traces.len(), 30);
}

#[test]
fn naive_bayes_is_accurate_on_separable_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_train(&synthetic_config(dir.path(), ModelFamily::NaiveBayes, 900)).unwrap();
    assert!(out.validation_metrics.unwrap().accuracy >= 0.95);
}

#[test]
fn every_family_saves_canonically() {
    let dir = tempfile::tempdir().unwrap();
    for family in ModelFamily::ALL {
        let mut c = synthetic_config(dir.path(), family, 300);
        c.train.epochs = 2;
        let out = cmd_train(&c).unwrap();
        let bytes = read(&out.artifact_path);
        let loaded = ModelArtifact::load(&out.artifact_path).unwrap();
        let again = dir.path().join(format!("{family}.again"));
        loaded.save(&again).unwrap();
        assert_eq!(read(&again), bytes, "{family}");
    }
}

#[test]
fn loaded_network_replays_predictions_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = synthetic_config(dir.path(), ModelFamily::Model2, 600);
    c.train.epochs = 3;
    cmd_train(&c).unwrap();
    let path = dir.path().join("model2").join(MODEL_FILE);
    let loaded = ModelArtifact::load(&path).unwrap();
    let TrainedModel::Network(_) = &loaded.model else {
        panic!("expected a network");
    };
    // retrain in memory to get the original
    let (split, vocab) = {
        let (records, _) = pipeline::load_records(&c).unwrap();
        let manifest = quill::corpus::SplitManifest::parse(&String::from_utf8(read(dir.path().join(SPLIT_FILE))).unwrap())
            .unwrap();
        (manifest.resolve(&records).unwrap(), quill::Vocabulary::load(dir.path().join(VOCAB_FILE)).unwrap())
    };
    let pre = c.text.preprocessor();
    let train = pipeline::featurize(&split.train, &pre, &vocab);
    let validation = pipeline::featurize(&split.validation, &pre, &vocab);
    let (original, _) = pipeline::train_family(&c, &train, &validation).unwrap();

    let d = vocab.size();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let idx: Vec<u32> = (0..d as u32).filter(|_| rng.gen_bool(0.05)).collect();
        let x = SparseBinaryVector::new(idx, d).unwrap();
        assert_eq!(loaded.model.scores(&x).unwrap(), original.scores(&x).unwrap());
    }
}

#[test]
fn model1_artifact_stores_reference_parameter_count() {
    let d = 199_794;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples: Vec<Sample> = (0..64)
        .map(|i| {
            let idx: Vec<u32> = (0..8).map(|_| rng.gen_range(0..d as u32)).collect();
            Sample::new(SparseBinaryVector::from_unsorted(idx, d).unwrap(), i % 3)
        })
        .collect();
    let mut c = RunConfig::default();
    c.model.family = ModelFamily::Model1;
    c.train.epochs = 1;
    let (model, curves) = pipeline::train_family(&c, &samples, &samples[..8]).unwrap();
    assert_eq!(curves.unwrap().traces.len(), 1);
    let artifact = ModelArtifact::new(ModelFamily::Model1, model);
    let bytes = artifact.to_bytes().unwrap();
    let text = String::from_utf8_lossy(&bytes[20..2000]).to_string();
    assert!(text.contains("param_count=1998093\n"));
    assert!(text.contains("model.layer_params=1997950,110,33\n"));
    let back = ModelArtifact::from_bytes(&bytes).unwrap();
    assert_eq!(back.param_count(), 1_998_093);
    assert_eq!(quill::neuralnet::count_params(&NetworkSpec::model1(d, 0)).1, 1_998_093);
}

#[test]
fn constant_model_scores_about_one_third() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = synthetic_config(dir.path(), ModelFamily::DecisionTree, 3000);
    c.model.dt_max_depth = 0;
    cmd_train(&c).unwrap();
    let ev = cmd_evaluate(&c, &EvaluateArgs::default()).unwrap();
    assert!((ev.report.accuracy - 1.0 / 3.0).abs() < 0.05, "{}", ev.report.accuracy);
}

#[test]
fn changed_dataset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("questions.csv");
    write_csv(&data, 120, 1);
    let mut c = RunConfig::default();
    c.out = dir.path().join("out");
    c.data.dataset = Some(data.clone());
    c.model.family = ModelFamily::NaiveBayes;
    cmd_prepare(&c).unwrap();
    cmd_train(&c).unwrap();
    cmd_evaluate(&c, &EvaluateArgs::default()).unwrap();

    write_csv(&data, 121, 1);
    match cmd_evaluate(&c, &EvaluateArgs::default()) {
        Err(QuillError::HashMismatch { what: "dataset", .. }) => {}
        other => panic!("expected dataset hash mismatch, got {other:?}"),
    }
    match cmd_train(&c) {
        Err(QuillError::HashMismatch { what: "dataset", .. }) => {}
        other => panic!("expected dataset hash mismatch, got {other:?}"),
    }
}

#[test]
fn mismatched_vocabulary_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let c = synthetic_config(dir.path(), ModelFamily::NaiveBayes, 300);
    cmd_train(&c).unwrap();
    let other = dir.path().join("other_vocab.txt");
    quill::Vocabulary::from_words(["alpha".to_string()]).save(&other).unwrap();
    let args = EvaluateArgs {
        vocab: Some(other.clone()),
        ..EvaluateArgs::default()
    };
    let err = cmd_evaluate(&c, &args).unwrap_err();
    assert_eq!(err.code(), "hash-mismatch");
    let err = Predictor::load(&dir.path().join("nb").join(MODEL_FILE), Some(&other)).err().unwrap();
    assert_eq!(err.code(), "hash-mismatch");
}

#[test]
fn truncated_or_corrupt_artifacts_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_train(&synthetic_config(dir.path(), ModelFamily::LinearSvm, 300)).unwrap();
    let bytes = read(&out.artifact_path);
    let broken = dir.path().join("broken.qmdl");
    for cut in (0..bytes.len()).step_by(97).chain([bytes.len() - 8, bytes.len() - 1]) {
        std::fs::write(&broken, &bytes[..cut]).unwrap();
        let err = ModelArtifact::load(&broken).unwrap_err();
        assert!(["truncated", "checksum", "format"].contains(&err.code()), "{cut}: {err}");
    }
}

#[test]
fn predictions_are_total_and_replay_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let c = synthetic_config(dir.path(), ModelFamily::LogisticRegression, 600);
    let out = cmd_train(&c).unwrap();
    let ev = cmd_evaluate(&c, &EvaluateArgs::default()).unwrap();
    assert!(ev.report.accuracy >= 0.95);

    let predictor = Predictor::load(&out.artifact_path, None).unwrap();
    let mut buf = Vec::new();
    cmd_predict(&predictor, "\nthe of and is\n".as_bytes(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], lines[1]);
    let fields: Vec<&str> = lines[0].split('\t').collect();
    assert_eq!(fields.len(), 4);
    assert!(fields[1..].iter().all(|f| f.parse::<f64>().unwrap().is_finite()));

    let (records, _) = pipeline::load_records(&c).unwrap();
    let by_id: std::collections::HashMap<&str, _> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let tsv = String::from_utf8(read(&ev.predictions_path)).unwrap();
    for row in tsv.lines().skip(1) {
        let (id, recorded) = row.split_once('\t').unwrap();
        let text = TextFields::TitleBody.text_of(by_id[id]);
        assert_eq!(pipeline::prediction_line(&predictor.scores(&text).unwrap()), recorded);
    }
}
