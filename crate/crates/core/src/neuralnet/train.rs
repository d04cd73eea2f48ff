use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{fisher_yates, seeded_rng};
use crate::error::{QuillError, Result};
use crate::{argmax, Sample};

use super::network::{loss, Gradients, NetworkModel};
use super::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

impl Optimizer {
    pub fn as_str(self) -> &'static str {
        match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.001,
            optimizer: Optimizer::Adam,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(QuillError::InvalidParameter("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(QuillError::InvalidParameter("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(QuillError::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(QuillError::InvalidParameter(format!(
                "validation_fraction must be in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// Loss and accuracy after one epoch. Training values are running means over
/// the epoch's mini-batches; validation values are computed after the
/// epoch's last update and are NaN when there is no held-out data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;
/// Tensors at least this long are updated in parallel chunks.
const PAR_MIN_LEN: usize = 1 << 16;

struct AdamState<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: i32,
}

fn tensors_mut<T>(model: &mut NetworkModel<T>) -> Vec<&mut Vec<T>> {
    model
        .layers
        .iter_mut()
        .flat_map(|l| [&mut l.weights, &mut l.bias])
        .collect()
}

fn grad_tensors<T>(grads: &Gradients<T>) -> Vec<&Vec<T>> {
    grads.layers.iter().flat_map(|l| [&l.weights, &l.bias]).collect()
}

fn sgd_update<T: Scalar>(params: &mut [T], grads: &[T], lr: T) {
    let body = |(p, &g): (&mut T, &T)| *p -= lr * g;
    if params.len() >= PAR_MIN_LEN {
        params.par_iter_mut().zip(grads.par_iter()).for_each(body);
    } else {
        params.iter_mut().zip(grads.iter()).for_each(body);
    }
}

fn adam_update<T: Scalar>(params: &mut [T], grads: &[T], m: &mut [T], v: &mut [T], lr_t: T) {
    let (b1, b2, eps) = (T::of(ADAM_BETA1), T::of(ADAM_BETA2), T::of(ADAM_EPSILON));
    // moments of idle rows decay geometrically; flush them to zero before
    // they go subnormal
    let flush = |v: T| if v.abs() < T::min_positive_value() { T::zero() } else { v };
    let body = |((p, &g), (mi, vi)): ((&mut T, &T), (&mut T, &mut T))| {
        *mi = flush(b1 * *mi + (T::one() - b1) * g);
        *vi = flush(b2 * *vi + (T::one() - b2) * g * g);
        *p -= lr_t * *mi / (vi.sqrt() + eps);
    };
    if params.len() >= PAR_MIN_LEN {
        params
            .par_iter_mut()
            .zip(grads.par_iter())
            .zip(m.par_iter_mut().zip(v.par_iter_mut()))
            .for_each(body);
    } else {
        params
            .iter_mut()
            .zip(grads.iter())
            .zip(m.iter_mut().zip(v.iter_mut()))
            .for_each(body);
    }
}

/// Mean loss and accuracy of `model` over `data`; NaN for empty data.
pub(crate) fn evaluate<T: Scalar>(model: &NetworkModel<T>, data: &[Sample]) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let mut total_loss = 0.0;
    let mut correct = 0usize;
    for s in data {
        let scores = model.forward(&s.features)?;
        total_loss += loss(&scores, s.label).as_f64();
        let as64: Vec<f64> = scores.iter().map(|v| v.as_f64()).collect();
        if argmax(&as64) == s.label {
            correct += 1;
        }
    }
    Ok((total_loss / data.len() as f64, correct as f64 / data.len() as f64))
}

/// Holds out `config.validation_fraction` of `data` (seeded shuffle) and
/// trains on the rest. Returns exactly `config.epochs` traces.
pub fn train<T: Scalar>(
    model: NetworkModel<T>,
    data: &[Sample],
    config: &TrainConfig,
) -> Result<(NetworkModel<T>, Vec<EpochTrace>)> {
    config.validate()?;
    if data.is_empty() {
        return Err(QuillError::Empty("no training samples"));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    fisher_yates(&mut order, &mut seeded_rng(config.seed ^ 0x5eed_0f_ba11));
    let n_val = (config.validation_fraction * data.len() as f64).round() as usize;
    if n_val >= data.len() {
        return Err(QuillError::InvalidParameter(format!(
            "validation_fraction {} leaves no training samples",
            config.validation_fraction
        )));
    }
    let validation: Vec<Sample> = order[..n_val].iter().map(|&i| data[i].clone()).collect();
    let train_part: Vec<Sample> = order[n_val..].iter().map(|&i| data[i].clone()).collect();
    train_with_validation(model, &train_part, &validation, config)
}

/// Mini-batch training with an explicit held-out set; `config.validation_fraction`
/// is ignored. Per-example gradients within a batch are summed in sample order.
pub fn train_with_validation<T: Scalar>(
    mut model: NetworkModel<T>,
    train_data: &[Sample],
    validation: &[Sample],
    config: &TrainConfig,
) -> Result<(NetworkModel<T>, Vec<EpochTrace>)> {
    config.validate()?;
    if train_data.is_empty() {
        return Err(QuillError::Empty("no training samples"));
    }
    let mut rng = seeded_rng(config.seed);
    let mut grads = Gradients::zeros_like(&model);
    let mut adam = AdamState {
        m: grad_tensors(&grads).iter().map(|t| vec![T::zero(); t.len()]).collect(),
        v: grad_tensors(&grads).iter().map(|t| vec![T::zero(); t.len()]).collect(),
        step: 0,
    };
    let first_units = model.layers[0].units;
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut traces = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        fisher_yates(&mut order, &mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let scale = T::one() / T::of(batch.len() as f64);
            for &k in batch {
                let s = &train_data[k];
                let (value, scores) = model.accumulate_gradients(&s.features, s.label, scale, &mut grads)?;
                loss_sum += value.as_f64();
                let as64: Vec<f64> = scores.iter().map(|v| v.as_f64()).collect();
                if argmax(&as64) == s.label {
                    correct += 1;
                }
            }

            let lr = config.learning_rate;
            match config.optimizer {
                Optimizer::Sgd => {
                    for (p, g) in tensors_mut(&mut model).into_iter().zip(grad_tensors(&grads)) {
                        sgd_update(p, g, T::of(lr));
                    }
                }
                Optimizer::Adam => {
                    adam.step += 1;
                    let t = adam.step;
                    let lr_t = lr * (1.0 - ADAM_BETA2.powi(t)).sqrt() / (1.0 - ADAM_BETA1.powi(t));
                    let tensors = tensors_mut(&mut model);
                    let gs = grad_tensors(&grads);
                    for (((p, g), m), v) in tensors.into_iter().zip(gs).zip(&mut adam.m).zip(&mut adam.v) {
                        adam_update(p, g, m, v, T::of(lr_t));
                    }
                }
            }

            // only the active rows of the first layer were written
            for &k in batch {
                for &i in train_data[k].features.indices() {
                    let i = i as usize;
                    grads.layers[0].weights[i * first_units..(i + 1) * first_units].fill(T::zero());
                }
            }
            grads.layers[0].bias.fill(T::zero());
            for g in grads.layers.iter_mut().skip(1) {
                g.weights.fill(T::zero());
                g.bias.fill(T::zero());
            }
        }
        let (val_loss, val_accuracy) = evaluate(&model, validation)?;
        traces.push(EpochTrace {
            epoch,
            train_loss: loss_sum / train_data.len() as f64,
            train_accuracy: correct as f64 / train_data.len() as f64,
            val_loss,
            val_accuracy,
        });
    }
    Ok((model, traces))
}
