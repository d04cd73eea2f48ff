use crate::corpus::QualityLabel;
use crate::error::{QuillError, Result};
use crate::textprep::SparseBinaryVector;
use crate::Sample;

use super::{validate_samples, Classifier};

/// Bernoulli naive Bayes with additive smoothing.
///
/// `P(w_i = 1 | c) = (n_ic + alpha) / (n_c + 2 alpha)`, priors are class
/// frequencies. Classes with no samples get prior 0 (log prior `-inf`).
/// Scores are posterior probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct NaiveBayesModel {
    class_counts: Vec<u64>,
    /// `present_counts[c * dimension + i]` = documents of class `c` containing word `i`.
    present_counts: Vec<u64>,
    log_prior: Vec<f64>,
    log_present: Vec<f64>,
    log_absent: Vec<f64>,
    /// `sum_i log_absent[c, i]`, so scoring only touches active features.
    absent_total: Vec<f64>,
    alpha: f64,
    dimension: usize,
}

impl NaiveBayesModel {
    pub fn fit(data: &[Sample], n_classes: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(QuillError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        let dimension = validate_samples(data, n_classes)?;
        let mut class_counts = vec![0u64; n_classes];
        let mut present_counts = vec![0u64; n_classes * dimension];
        for s in data {
            class_counts[s.label] += 1;
            let row = &mut present_counts[s.label * dimension..(s.label + 1) * dimension];
            for &i in s.features.indices() {
                row[i as usize] += 1;
            }
        }
        Self::from_counts(class_counts, present_counts, alpha, dimension)
    }

    /// Rebuilds a model from its sufficient statistics.
    pub fn from_counts(class_counts: Vec<u64>, present_counts: Vec<u64>, alpha: f64, dimension: usize) -> Result<Self> {
        let n_classes = class_counts.len();
        if present_counts.len() != n_classes * dimension {
            return Err(QuillError::InvalidParameter("count table has the wrong shape".into()));
        }
        let total: u64 = class_counts.iter().sum();
        if total == 0 {
            return Err(QuillError::Empty("no training samples"));
        }
        let log_prior = class_counts
            .iter()
            .map(|&n| (n as f64 / total as f64).ln())
            .collect();
        let mut log_present = Vec::with_capacity(present_counts.len());
        let mut log_absent = Vec::with_capacity(present_counts.len());
        let mut absent_total = vec![0.0; n_classes];
        for c in 0..n_classes {
            let denom = class_counts[c] as f64 + 2.0 * alpha;
            for i in 0..dimension {
                let present = present_counts[c * dimension + i];
                if present > class_counts[c] {
                    return Err(QuillError::InvalidParameter("feature count exceeds class count".into()));
                }
                let lp = ((present as f64 + alpha) / denom).ln();
                let la = (((class_counts[c] - present) as f64 + alpha) / denom).ln();
                log_present.push(lp);
                log_absent.push(la);
                absent_total[c] += la;
            }
        }
        Ok(Self {
            class_counts,
            present_counts,
            log_prior,
            log_present,
            log_absent,
            absent_total,
            alpha,
            dimension,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn class_counts(&self) -> &[u64] {
        &self.class_counts
    }

    pub fn present_counts(&self) -> &[u64] {
        &self.present_counts
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    /// `(ln P(w_i=1|c), ln P(w_i=0|c))`.
    pub fn log_likelihoods(&self, class: usize, feature: usize) -> (f64, f64) {
        let k = class * self.dimension + feature;
        (self.log_present[k], self.log_absent[k])
    }

    /// Unnormalized log joint `ln P(c) + sum_i ln P(x_i | c)` per class.
    pub fn log_joint(&self, x: &SparseBinaryVector) -> Result<Vec<f64>> {
        x.check_dimension(self.dimension)?;
        Ok((0..self.class_counts.len())
            .map(|c| {
                let base = c * self.dimension;
                let active: f64 = x
                    .indices()
                    .iter()
                    .map(|&i| self.log_present[base + i as usize] - self.log_absent[base + i as usize])
                    .sum();
                self.log_prior[c] + self.absent_total[c] + active
            })
            .collect())
    }

    pub fn posterior(&self, x: &SparseBinaryVector) -> Result<Vec<f64>> {
        let joint = self.log_joint(x)?;
        let max = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = joint.iter().map(|&j| (j - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        Ok(exp.into_iter().map(|e| e / z).collect())
    }
}

impl Classifier for NaiveBayesModel {
    fn n_classes(&self) -> usize {
        self.class_counts.len()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn scores(&self, x: &SparseBinaryVector) -> Result<Vec<f64>> {
        self.posterior(x)
    }
}

/// Three-class Bernoulli naive Bayes.
pub fn train_naive_bayes(data: &[Sample], alpha: f64) -> Result<NaiveBayesModel> {
    NaiveBayesModel::fit(data, QualityLabel::COUNT, alpha)
}
