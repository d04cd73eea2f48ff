//! Question-quality prediction for StackOverflow questions.
//!
//! The pipeline turns question text into binary bag-of-words vectors, trains
//! one of four baseline classifiers (Bernoulli naive Bayes, CART decision
//! tree, one-vs-rest linear SVM, cross-validated logistic regression) or one
//! of two small dense networks, and evaluates them with confusion-matrix
//! metrics and per-epoch learning curves.
//!
//! Module map:
//!
//! - [`corpus`]: CSV loading, label parsing, seeded splits, synthetic corpora.
//! - [`textprep`]: tokenizer, stop words, vocabulary, binary vectorizer.
//! - [`baselines`]: the four classical classifiers behind one predict contract.
//! - [`neuralnet`]: dense layers, forward/backward passes, the training loop.
//! - [`eval`]: confusion matrices, accuracy/precision/recall/F1, curves.
//! - [`artifact`]: the versioned, checksummed model file format.
//! - [`config`] and [`pipeline`]: run configuration and the CLI commands.

pub mod artifact;
pub mod baselines;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod neuralnet;
pub mod pipeline;
pub mod textprep;

pub use corpus::{QualityLabel, QuestionRecord};
pub use error::{QuillError, Result};
pub use textprep::{SparseBinaryVector, Vocabulary};

/// A feature vector paired with a class index.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub features: SparseBinaryVector,
    pub label: usize,
}

impl Sample {
    pub fn new(features: SparseBinaryVector, label: usize) -> Self {
        Self { features, label }
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
