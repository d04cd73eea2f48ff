//! Classical baselines on binary bag-of-words features.
//!
//! All four models take [`Sample`]s whose labels are class indices in
//! `0..n_classes` and answer through [`Classifier`]: a per-class score vector
//! and its argmax, ties going to the lowest class index.

mod decision_tree;
mod logistic;
mod naive_bayes;
mod svm;

pub use decision_tree::{gini, train_decision_tree, DecisionTreeModel, TreeNode, TreeParams};
pub use logistic::{
    kfold_indices, train_logistic_regression, GridScore, LogisticParams, LogisticRegressionModel,
};
pub use naive_bayes::{train_naive_bayes, NaiveBayesModel};
pub use svm::{train_linear_svm, LinearSvmModel, SvmParams};

use crate::corpus::QualityLabel;
use crate::error::{QuillError, Result};
use crate::textprep::SparseBinaryVector;
use crate::{argmax, Sample};

/// Class index and the per-class scores it was chosen from.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        Self {
            class: argmax(&scores),
            scores,
        }
    }

    pub fn label(&self) -> Option<QualityLabel> {
        QualityLabel::from_index(self.class)
    }
}

pub trait Classifier {
    fn n_classes(&self) -> usize;

    fn dimension(&self) -> usize;

    /// Per-class scores; larger means more likely.
    fn scores(&self, x: &SparseBinaryVector) -> Result<Vec<f64>>;

    fn predict(&self, x: &SparseBinaryVector) -> Result<Prediction> {
        self.scores(x).map(Prediction::from_scores)
    }

    /// Applies `post` to the scores before taking the argmax.
    fn predict_with<F>(&self, x: &SparseBinaryVector, post: F) -> Result<Prediction>
    where
        F: FnOnce(&mut [f64]),
        Self: Sized,
    {
        let mut scores = self.scores(x)?;
        post(&mut scores);
        Ok(Prediction::from_scores(scores))
    }
}

/// Checks non-emptiness, a shared dimension and label range; returns the dimension.
pub(crate) fn validate_samples(data: &[Sample], n_classes: usize) -> Result<usize> {
    let first = data.first().ok_or(QuillError::Empty("no training samples"))?;
    let dimension = first.features.dimension();
    for s in data {
        s.features.check_dimension(dimension)?;
        if s.label >= n_classes {
            return Err(QuillError::InvalidParameter(format!(
                "label {} out of range for {n_classes} classes",
                s.label
            )));
        }
    }
    Ok(dimension)
}

/// Fraction of samples whose predicted class matches the label.
pub fn training_accuracy<C: Classifier>(model: &C, data: &[Sample]) -> Result<f64> {
    if data.is_empty() {
        return Err(QuillError::Empty("no samples to score"));
    }
    let mut correct = 0usize;
    for s in data {
        if model.predict(&s.features)?.class == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
