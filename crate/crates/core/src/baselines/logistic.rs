use rayon::prelude::*;

use crate::corpus::{fisher_yates, seeded_rng, QualityLabel};
use crate::error::{QuillError, Result};
use crate::textprep::SparseBinaryVector;
use crate::Sample;

use super::{validate_samples, Classifier};

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticParams {
    pub grid: Vec<f64>,
    pub folds: usize,
    pub epochs: usize,
    /// Initial step size; decays as `lr / (1 + lr * lambda * t)`.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            grid: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            folds: 10,
            epochs: 5,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

/// Cross-validation outcome for one `l2_lambda` candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct GridScore {
    pub lambda: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Multinomial logistic regression with an L2 penalty on the weights
/// (bias unpenalized). Weights are input-major: `weights[i * n_classes + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticRegressionModel {
    weights: Vec<f32>,
    bias: Vec<f32>,
    l2_lambda: f64,
    grid_report: Vec<GridScore>,
    n_classes: usize,
    dimension: usize,
}

/// Seeded fold assignment: a Fisher–Yates permutation of `0..n` cut into
/// `folds` contiguous chunks whose sizes differ by at most one.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(QuillError::InvalidParameter(format!("folds must be >= 2, got {folds}")));
    }
    if n < folds {
        return Err(QuillError::InvalidParameter(format!("{n} samples cannot fill {folds} folds")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    fisher_yates(&mut perm, &mut seeded_rng(seed));
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(perm[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

impl LogisticRegressionModel {
    /// Plain SGD fit at a fixed `l2_lambda`, no model selection.
    pub fn fit_fixed(
        data: &[Sample],
        n_classes: usize,
        l2_lambda: f64,
        epochs: usize,
        learning_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(l2_lambda > 0.0 && l2_lambda.is_finite()) {
            return Err(QuillError::InvalidParameter(format!("l2_lambda must be positive, got {l2_lambda}")));
        }
        if !(learning_rate > 0.0) || learning_rate * l2_lambda >= 1.0 {
            return Err(QuillError::InvalidParameter(format!(
                "learning_rate {learning_rate} must be positive with learning_rate * lambda < 1"
            )));
        }
        if epochs == 0 {
            return Err(QuillError::InvalidParameter("epochs must be >= 1".into()));
        }
        let dimension = validate_samples(data, n_classes)?;
        let k = n_classes;
        // effective weights are scale * raw
        let mut raw = vec![0f64; dimension * k];
        let mut scale = 1.0f64;
        let mut bias = vec![0f64; k];
        let mut z = vec![0f64; k];
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut rng = seeded_rng(seed);
        let mut t = 0u64;
        for _ in 0..epochs {
            fisher_yates(&mut order, &mut rng);
            for &n in &order {
                let s = &data[n];
                let eta = learning_rate / (1.0 + learning_rate * l2_lambda * t as f64);
                t += 1;
                z.copy_from_slice(&bias);
                for &i in s.features.indices() {
                    let row = &raw[i as usize * k..(i as usize + 1) * k];
                    for (zc, &w) in z.iter_mut().zip(row) {
                        *zc += scale * w;
                    }
                }
                softmax_in_place(&mut z);
                z[s.label] -= 1.0;
                scale *= 1.0 - eta * l2_lambda;
                if scale < 1e-9 {
                    raw.iter_mut().for_each(|w| *w *= scale);
                    scale = 1.0;
                }
                for &i in s.features.indices() {
                    let row = &mut raw[i as usize * k..(i as usize + 1) * k];
                    for (w, &g) in row.iter_mut().zip(&z) {
                        *w -= eta * g / scale;
                    }
                }
                for (b, &g) in bias.iter_mut().zip(&z) {
                    *b -= eta * g;
                }
            }
        }
        Ok(Self {
            weights: raw.iter().map(|&w| (scale * w) as f32).collect(),
            bias: bias.iter().map(|&b| b as f32).collect(),
            l2_lambda,
            grid_report: Vec::new(),
            n_classes,
            dimension,
        })
    }

    /// Grid search by k-fold cross-validated accuracy, then a refit on all
    /// data. Ties in mean accuracy go to the smaller lambda.
    pub fn fit(data: &[Sample], n_classes: usize, params: &LogisticParams) -> Result<Self> {
        if params.grid.is_empty() {
            return Err(QuillError::InvalidParameter("empty lambda grid".into()));
        }
        validate_samples(data, n_classes)?;
        let folds = kfold_indices(data.len(), params.folds, params.seed)?;
        let report = cross_validate(data, n_classes, params, &folds)?;
        let best = report
            .iter()
            .reduce(|best, g| {
                if g.mean_accuracy > best.mean_accuracy
                    || (g.mean_accuracy == best.mean_accuracy && g.lambda < best.lambda)
                {
                    g
                } else {
                    best
                }
            })
            .expect("grid is non-empty");
        let mut model =
            Self::fit_fixed(data, n_classes, best.lambda, params.epochs, params.learning_rate, params.seed)?;
        model.grid_report = report;
        Ok(model)
    }

    pub fn from_parts(
        weights: Vec<f32>,
        bias: Vec<f32>,
        dimension: usize,
        l2_lambda: f64,
        grid_report: Vec<GridScore>,
    ) -> Result<Self> {
        let n_classes = bias.len();
        if weights.len() != dimension * n_classes {
            return Err(QuillError::Format("logistic weight table has the wrong shape".into()));
        }
        Ok(Self {
            weights,
            bias,
            l2_lambda,
            grid_report,
            n_classes,
            dimension,
        })
    }

    pub fn l2_lambda(&self) -> f64 {
        self.l2_lambda
    }

    pub fn grid_report(&self) -> &[GridScore] {
        &self.grid_report
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn probabilities(&self, x: &SparseBinaryVector) -> Result<Vec<f64>> {
        x.check_dimension(self.dimension)?;
        let k = self.n_classes;
        let mut z: Vec<f64> = self.bias.iter().map(|&b| b as f64).collect();
        for &i in x.indices() {
            let row = &self.weights[i as usize * k..(i as usize + 1) * k];
            for (zc, &w) in z.iter_mut().zip(row) {
                *zc += w as f64;
            }
        }
        softmax_in_place(&mut z);
        Ok(z)
    }
}

/// Mean held-out accuracy of every grid candidate over the given folds.
/// Fold fits run in parallel; results keep grid and fold order.
pub(crate) fn cross_validate(
    data: &[Sample],
    n_classes: usize,
    params: &LogisticParams,
    folds: &[Vec<usize>],
) -> Result<Vec<GridScore>> {
    let jobs: Vec<(usize, usize)> = (0..params.grid.len())
        .flat_map(|g| (0..folds.len()).map(move |f| (g, f)))
        .collect();
    let accs: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let held_out = &folds[f];
            let train: Vec<Sample> = folds
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != f)
                .flat_map(|(_, idx)| idx.iter().map(|&i| data[i].clone()))
                .collect();
            let model = LogisticRegressionModel::fit_fixed(
                &train,
                n_classes,
                params.grid[g],
                params.epochs,
                params.learning_rate,
                params.seed,
            )?;
            let mut correct = 0usize;
            for &i in held_out {
                if model.predict(&data[i].features)?.class == data[i].label {
                    correct += 1;
                }
            }
            Ok(correct as f64 / held_out.len() as f64)
        })
        .collect::<Result<_>>()?;
    Ok(params
        .grid
        .iter()
        .enumerate()
        .map(|(g, &lambda)| {
            let fold_accuracies = accs[g * folds.len()..(g + 1) * folds.len()].to_vec();
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / folds.len() as f64;
            GridScore {
                lambda,
                fold_accuracies,
                mean_accuracy,
            }
        })
        .collect())
}

impl Classifier for LogisticRegressionModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn scores(&self, x: &SparseBinaryVector) -> Result<Vec<f64>> {
        self.probabilities(x)
    }
}

pub fn train_logistic_regression(data: &[Sample], grid: &[f64], folds: usize, seed: u64) -> Result<LogisticRegressionModel> {
    let params = LogisticParams {
        grid: grid.to_vec(),
        folds,
        seed,
        ..LogisticParams::default()
    };
    LogisticRegressionModel::fit(data, QualityLabel::COUNT, &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::training_accuracy;

    fn blobs(n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let c = i % 3;
                let idx = vec![(c * 4 + i % 4) as u32, 12 + (i % 5) as u32];
                Sample::new(SparseBinaryVector::from_unsorted(idx, 17).unwrap(), c)
            })
            .collect()
    }

    #[test]
    fn folds_partition() {
        let folds = kfold_indices(23, 10, 4).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(kfold_indices(5, 10, 0).is_err());
        assert!(kfold_indices(5, 1, 0).is_err());
    }

    #[test]
    fn singleton_grid_and_separable_fit() {
        let data = blobs(60);
        let m = train_logistic_regression(&data, &[0.05], 3, 1).unwrap();
        assert_eq!(m.l2_lambda(), 0.05);
        assert_eq!(m.grid_report().len(), 1);
        let m = train_logistic_regression(&data, &[1e-4], 3, 1).unwrap();
        assert_eq!(training_accuracy(&m, &data).unwrap(), 1.0);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let data = blobs(30);
        let m = train_logistic_regression(&data, &[1e-3], 3, 2).unwrap();
        for s in &data {
            let p = m.probabilities(&s.features).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ties_pick_smaller_lambda() {
        // fully separable data: both tiny lambdas give perfect CV accuracy
        let data = blobs(60);
        let m = train_logistic_regression(&data, &[1e-3, 1e-4], 3, 5).unwrap();
        let r = m.grid_report();
        assert_eq!(r[0].mean_accuracy, r[1].mean_accuracy);
        assert_eq!(m.l2_lambda(), 1e-4);
    }

    #[test]
    fn rejects_bad_input() {
        let data = blobs(6);
        assert!(train_logistic_regression(&data, &[], 3, 0).is_err());
        assert!(train_logistic_regression(&data, &[0.1], 10, 0).is_err());
        assert!(train_logistic_regression(&data, &[0.1], 1, 0).is_err());
    }
}
