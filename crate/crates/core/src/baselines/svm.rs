use crate::corpus::{fisher_yates, seeded_rng, QualityLabel};
use crate::error::{QuillError, Result};
use crate::textprep::SparseBinaryVector;
use crate::Sample;

use super::{validate_samples, Classifier};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 5,
            seed: 0,
        }
    }
}

/// One-vs-rest linear SVM trained with Pegasos.
///
/// The bias is the weight of an implicit always-on feature and is
/// regularized with the rest. Weights are stored input-major:
/// `weights[i * n_classes + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvmModel {
    weights: Vec<f32>,
    bias: Vec<f32>,
    n_classes: usize,
    dimension: usize,
    params: SvmParams,
}

/// Weight vector kept as `scale * raw` so the per-step shrink is O(1).
struct ScaledWeights {
    raw: Vec<f64>,
    raw_bias: f64,
    scale: f64,
}

impl ScaledWeights {
    fn dot(&self, x: &SparseBinaryVector) -> f64 {
        let s: f64 = x.indices().iter().map(|&i| self.raw[i as usize]).sum();
        self.scale * (s + self.raw_bias)
    }

    fn fold_scale(&mut self) {
        for w in &mut self.raw {
            *w *= self.scale;
        }
        self.raw_bias *= self.scale;
        self.scale = 1.0;
    }
}

impl LinearSvmModel {
    pub fn fit(data: &[Sample], n_classes: usize, params: SvmParams) -> Result<Self> {
        if !(params.lambda > 0.0 && params.lambda.is_finite()) {
            return Err(QuillError::InvalidParameter(format!("lambda must be positive, got {}", params.lambda)));
        }
        if params.epochs == 0 {
            return Err(QuillError::InvalidParameter("epochs must be >= 1".into()));
        }
        let dimension = validate_samples(data, n_classes)?;
        let mut rng = seeded_rng(params.seed);
        let mut ws: Vec<ScaledWeights> = (0..n_classes)
            .map(|_| ScaledWeights {
                raw: vec![0.0; dimension],
                raw_bias: 0.0,
                scale: 1.0,
            })
            .collect();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut t = 0u64;
        for _ in 0..params.epochs {
            fisher_yates(&mut order, &mut rng);
            for &k in &order {
                t += 1;
                let eta = 1.0 / (params.lambda * t as f64);
                let s = &data[k];
                for (c, w) in ws.iter_mut().enumerate() {
                    let y = if s.label == c { 1.0 } else { -1.0 };
                    let margin = y * w.dot(&s.features);
                    if t == 1 {
                        // (1 - eta * lambda) = 0 on the first step
                        w.raw.fill(0.0);
                        w.raw_bias = 0.0;
                        w.scale = 1.0;
                    } else {
                        w.scale *= 1.0 - eta * params.lambda;
                        if w.scale < 1e-9 {
                            w.fold_scale();
                        }
                    }
                    if margin < 1.0 {
                        let step = eta * y / w.scale;
                        for &i in s.features.indices() {
                            w.raw[i as usize] += step;
                        }
                        w.raw_bias += step;
                    }
                }
            }
        }
        let mut weights = vec![0f32; dimension * n_classes];
        let mut bias = vec![0f32; n_classes];
        for (c, w) in ws.iter().enumerate() {
            for i in 0..dimension {
                weights[i * n_classes + c] = (w.scale * w.raw[i]) as f32;
            }
            bias[c] = (w.scale * w.raw_bias) as f32;
        }
        Ok(Self {
            weights,
            bias,
            n_classes,
            dimension,
            params,
        })
    }

    pub fn from_parts(weights: Vec<f32>, bias: Vec<f32>, dimension: usize, params: SvmParams) -> Result<Self> {
        let n_classes = bias.len();
        if weights.len() != dimension * n_classes {
            return Err(QuillError::Format("svm weight table has the wrong shape".into()));
        }
        Ok(Self {
            weights,
            bias,
            n_classes,
            dimension,
            params,
        })
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn params(&self) -> SvmParams {
        self.params
    }
}

impl Classifier for LinearSvmModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    /// Signed margins `w_c . x + b_c`.
    fn scores(&self, x: &SparseBinaryVector) -> Result<Vec<f64>> {
        x.check_dimension(self.dimension)?;
        let k = self.n_classes;
        let mut out: Vec<f64> = self.bias.iter().map(|&b| b as f64).collect();
        for &i in x.indices() {
            let row = &self.weights[i as usize * k..(i as usize + 1) * k];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w as f64;
            }
        }
        Ok(out)
    }
}

pub fn train_linear_svm(data: &[Sample], lambda: f64, epochs: usize, seed: u64) -> Result<LinearSvmModel> {
    LinearSvmModel::fit(data, QualityLabel::COUNT, SvmParams { lambda, epochs, seed })
}
