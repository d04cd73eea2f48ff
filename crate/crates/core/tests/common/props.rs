//! Property bodies and generators shared by the proptest suite and the
//! acceptance run.

use std::collections::HashSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use quill::corpus::{split_dataset, split_dataset_stratified, split_sizes};
use quill::textprep::vectorize;
use quill::{QualityLabel, QuestionRecord, Vocabulary};

pub fn word() -> impl Strategy<Value = String> {
    "[a-f]{1,3}"
}

pub fn words(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 0..max)
}

pub fn records(n: usize) -> Vec<QuestionRecord> {
    (0..n)
        .map(|i| QuestionRecord {
            id: format!("r{i}"),
            title: String::new(),
            body: String::new(),
            tags: String::new(),
            creation_date: String::new(),
            label: QualityLabel::from_index(i % 3).unwrap(),
        })
        .collect()
}

/// Repeating tokens never changes the binary vector.
pub fn binary_idempotence((vocab_words, tokens, reps): (Vec<String>, Vec<String>, usize)) -> Result<(), TestCaseError> {
    let vocab = Vocabulary::from_words(vocab_words);
    let once = vectorize(&tokens, &vocab);
    let repeated: Vec<&String> = tokens.iter().cycle().take(tokens.len() * reps).collect();
    prop_assert_eq!(&vectorize(&repeated, &vocab), &once);
    let mut shuffled = tokens.clone();
    shuffled.reverse();
    prop_assert_eq!(&vectorize(&shuffled, &vocab), &once);
    Ok(())
}

/// Dimension equals vocabulary size; index `i` set iff word `i` occurs.
pub fn vector_dimension((vocab_words, tokens): (Vec<String>, Vec<String>)) -> Result<(), TestCaseError> {
    let vocab = Vocabulary::from_words(vocab_words);
    let x = vectorize(&tokens, &vocab);
    prop_assert_eq!(x.dimension(), vocab.size());
    let present: HashSet<&str> = tokens.iter().map(String::as_str).collect();
    for (w, i) in vocab.iter() {
        prop_assert_eq!(x.contains(i), present.contains(w));
    }
    prop_assert!(x.indices().windows(2).all(|w| w[0] < w[1]));
    prop_assert!(x.indices().iter().all(|&i| (i as usize) < vocab.size()));
    Ok(())
}

/// The three parts are disjoint, cover every record, have the documented
/// sizes and do not depend on anything but the seed.
pub fn split_partition((n, tf, vf, seed, stratified): (usize, f64, f64, u64, bool)) -> Result<(), TestCaseError> {
    let recs = records(n);
    let split = |s| {
        if stratified {
            split_dataset_stratified(&recs, tf, vf, s)
        } else {
            split_dataset(&recs, tf, vf, s)
        }
    };
    let a = split(seed).unwrap();
    prop_assert_eq!(&a, &split(seed).unwrap());
    let mut ids: Vec<&str> = a
        .train
        .iter()
        .chain(&a.validation)
        .chain(&a.test)
        .map(|r| r.id.as_str())
        .collect();
    prop_assert_eq!(ids.len(), n);
    ids.sort_unstable();
    ids.dedup();
    prop_assert_eq!(ids.len(), n);
    if !stratified {
        let (test, val) = split_sizes(n, tf, vf);
        prop_assert_eq!(a.test.len(), test);
        prop_assert_eq!(a.validation.len(), val);
    }
    Ok(())
}

pub fn idempotence_input() -> impl Strategy<Value = (Vec<String>, Vec<String>, usize)> {
    (words(30), words(40), 1usize..5)
}

pub fn dimension_input() -> impl Strategy<Value = (Vec<String>, Vec<String>)> {
    (words(30), words(40))
}

pub fn split_input() -> impl Strategy<Value = (usize, f64, f64, u64, bool)> {
    (1usize..400, 0.01f64..0.99, 0.0f64..0.99, any::<u64>(), any::<bool>())
}

/// Runs `check` on `cases` generated inputs with a fixed generator seed.
pub fn run<S: Strategy>(cases: u32, strategy: S, check: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, check).map_err(|e| e.to_string())
}
