use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{Classifier, Prediction};
use crate::corpus::{seeded_rng, QualityLabel};
use crate::error::{QuillError, Result};
use crate::textprep::SparseBinaryVector;

use super::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Softmax,
    Identity,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Softmax => "softmax",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            "softmax" => Some(Activation::Softmax),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    fn apply<T: Scalar>(self, z: &[T], out: &mut [T]) {
        match self {
            Activation::Relu => {
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = v.max(T::zero());
                }
            }
            Activation::Sigmoid => {
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = T::one() / (T::one() + (-v).exp());
                }
            }
            Activation::Identity => out.copy_from_slice(z),
            Activation::Softmax => {
                let max = z.iter().copied().fold(T::neg_infinity(), T::max);
                let mut total = T::zero();
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = (v - max).exp();
                    total += *o;
                }
                for o in out.iter_mut() {
                    *o = *o / total;
                }
            }
        }
    }

    /// Turns `dL/da` into `dL/dz` in place, given `z` and `a = phi(z)`.
    fn backprop<T: Scalar>(self, z: &[T], a: &[T], grad: &mut [T]) {
        match self {
            Activation::Relu => {
                for (g, &v) in grad.iter_mut().zip(z) {
                    if v <= T::zero() {
                        *g = T::zero();
                    }
                }
            }
            Activation::Sigmoid => {
                for (g, &y) in grad.iter_mut().zip(a) {
                    *g *= y * (T::one() - y);
                }
            }
            Activation::Identity => {}
            Activation::Softmax => {
                let dot: T = grad.iter().zip(a).map(|(&g, &y)| g * y).sum();
                for (g, &y) in grad.iter_mut().zip(a) {
                    *g = y * (*g - dot);
                }
            }
        }
    }
}

/// One affine layer plus activation. Weights are input-major:
/// `weights[i * units + o]` multiplies input `i` into unit `o`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<T> {
    pub inputs: usize,
    pub units: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn new(inputs: usize, units: usize, weights: Vec<T>, bias: Vec<T>, activation: Activation) -> Result<Self> {
        if weights.len() != inputs * units || bias.len() != units {
            return Err(QuillError::InvalidParameter(format!(
                "layer {inputs}x{units} given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self {
            inputs,
            units,
            weights,
            bias,
            activation,
        })
    }

    pub fn param_count(&self) -> usize {
        self.units * (self.inputs + 1)
    }

    /// `W[o][i]` in the usual output-by-input view.
    pub fn weight(&self, output: usize, input: usize) -> T {
        self.weights[input * self.units + output]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dimension: usize,
    pub layer_units: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub seed: u64,
}

impl NetworkSpec {
    /// Three dense layers, 10-10-3.
    pub fn model1(input_dimension: usize, seed: u64) -> Self {
        Self {
            input_dimension,
            layer_units: vec![10, 10, QualityLabel::COUNT],
            hidden_activation: Activation::Relu,
            output_activation: Activation::Sigmoid,
            seed,
        }
    }

    /// Two dense layers, 10-3.
    pub fn model2(input_dimension: usize, seed: u64) -> Self {
        Self {
            layer_units: vec![10, QualityLabel::COUNT],
            ..Self::model1(input_dimension, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dimension == 0 {
            return Err(QuillError::InvalidParameter("input_dimension must be positive".into()));
        }
        if self.layer_units.last() != Some(&QualityLabel::COUNT) {
            return Err(QuillError::InvalidParameter(format!(
                "last layer must have {} units, got {:?}",
                QualityLabel::COUNT,
                self.layer_units
            )));
        }
        if self.layer_units.contains(&0) {
            return Err(QuillError::InvalidParameter("layers need at least one unit".into()));
        }
        if self.hidden_activation == Activation::Softmax {
            return Err(QuillError::InvalidParameter("softmax is only allowed on the output layer".into()));
        }
        Ok(())
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.layer_units.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// `(fan_in, units)` per layer.
    fn shapes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let fan_ins = std::iter::once(self.input_dimension).chain(self.layer_units.iter().copied());
        fan_ins.zip(self.layer_units.iter().copied())
    }
}

/// Per-layer parameter counts `units * (fan_in + 1)` and their total.
pub fn count_params(spec: &NetworkSpec) -> (Vec<usize>, usize) {
    let per_layer: Vec<usize> = spec.shapes().map(|(fan_in, units)| units * (fan_in + 1)).collect();
    let total = per_layer.iter().sum();
    (per_layer, total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel<T> {
    pub layers: Vec<DenseLayer<T>>,
    pub spec: NetworkSpec,
}

/// Glorot-uniform weights (`|w| <= sqrt(6 / (fan_in + fan_out))`), zero biases.
pub fn init_network<T: Scalar>(spec: &NetworkSpec) -> Result<NetworkModel<T>> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let layers = spec
        .shapes()
        .enumerate()
        .map(|(l, (fan_in, units))| {
            let limit = (6.0 / (fan_in + units) as f64).sqrt();
            let weights = (0..fan_in * units).map(|_| T::of(rng.gen_range(-limit..limit))).collect();
            DenseLayer {
                inputs: fan_in,
                units,
                weights,
                bias: vec![T::zero(); units],
                activation: spec.activation_of(l),
            }
        })
        .collect();
    Ok(NetworkModel {
        layers,
        spec: spec.clone(),
    })
}

/// Network input: a binary bag of words or an explicit dense vector.
#[derive(Clone, Copy, Debug)]
pub enum Input<'a, T> {
    Sparse(&'a SparseBinaryVector),
    Dense(&'a [T]),
}

impl<T> Input<'_, T> {
    fn dimension(&self) -> usize {
        match self {
            Input::Sparse(x) => x.dimension(),
            Input::Dense(x) => x.len(),
        }
    }
}

impl<'a, T> From<&'a SparseBinaryVector> for Input<'a, T> {
    fn from(x: &'a SparseBinaryVector) -> Self {
        Input::Sparse(x)
    }
}

/// Pre- and post-activation values of every layer.
struct Trace<T> {
    pre: Vec<Vec<T>>,
    post: Vec<Vec<T>>,
}

/// Gradient of one layer, same layout as the layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGradient<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(model: &NetworkModel<T>) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![T::zero(); l.weights.len()],
                    bias: vec![T::zero(); l.bias.len()],
                })
                .collect(),
        }
    }
}

/// Lower clip bound for normalized probabilities (upper bound is `1 - eps`).
pub const CLIP_EPSILON: f64 = 1e-7;

/// Cross-entropy over integer labels.
///
/// Scores are renormalized to sum to one (their sum floored at the clip
/// epsilon), each probability clipped to `[eps, 1 - eps]`, and the loss is
/// `-ln p[label]`.
pub fn loss<T: Scalar>(scores: &[T], label: usize) -> T {
    let eps = T::of(CLIP_EPSILON);
    let total = scores.iter().copied().sum::<T>().max(eps);
    let p = (scores[label] / total).max(eps).min(T::one() - eps);
    -p.ln()
}

/// `dL/dscores` for [`loss`]; zero wherever a clip is active.
pub fn loss_gradient<T: Scalar>(scores: &[T], label: usize) -> Vec<T> {
    let eps = T::of(CLIP_EPSILON);
    let raw_total = scores.iter().copied().sum::<T>();
    let sum_clipped = raw_total < eps;
    let total = raw_total.max(eps);
    let p = scores[label] / total;
    let mut grad = vec![T::zero(); scores.len()];
    if p < eps || p > T::one() - eps {
        return grad;
    }
    // d(-ln p)/ds_j = -(delta_jy - p * [sum unclipped]) / (total * p)
    let coef = -T::one() / (total * p);
    for (j, g) in grad.iter_mut().enumerate() {
        let own = if j == label { T::one() } else { T::zero() };
        let via_sum = if sum_clipped { T::zero() } else { p };
        *g = coef * (own - via_sum);
    }
    grad
}

impl<T: Scalar> NetworkModel<T> {
    pub fn input_dimension(&self) -> usize {
        self.spec.input_dimension
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    fn run(&self, x: Input<'_, T>) -> Result<Trace<T>> {
        if x.dimension() != self.input_dimension() {
            return Err(QuillError::DimensionMismatch {
                expected: self.input_dimension(),
                actual: x.dimension(),
            });
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.bias.clone();
            let u = layer.units;
            match (l, x) {
                (0, Input::Sparse(x)) => {
                    for &i in x.indices() {
                        let row = &layer.weights[i as usize * u..(i as usize + 1) * u];
                        for (zo, &w) in z.iter_mut().zip(row) {
                            *zo += w;
                        }
                    }
                }
                (0, Input::Dense(x)) => accumulate_dense(layer, x, &mut z),
                _ => accumulate_dense(layer, &post[l - 1], &mut z),
            }
            let mut a = vec![T::zero(); u];
            layer.activation.apply(&z, &mut a);
            pre.push(z);
            post.push(a);
        }
        Ok(Trace { pre, post })
    }

    pub fn forward<'a>(&self, x: impl Into<Input<'a, T>>) -> Result<Vec<T>> {
        Ok(self.run(x.into())?.post.pop().expect("network has layers"))
    }

    /// Adds `scale * dL/dparams` into `grads` and returns `(loss, scores)`.
    /// For a sparse input only the active rows of the first layer's
    /// gradient are written.
    pub fn accumulate_gradients<'a>(
        &self,
        x: impl Into<Input<'a, T>>,
        label: usize,
        scale: T,
        grads: &mut Gradients<T>,
    ) -> Result<(T, Vec<T>)> {
        let x = x.into();
        let trace = self.run(x)?;
        let scores = trace.post.last().expect("network has layers").clone();
        if label >= scores.len() {
            return Err(QuillError::InvalidParameter(format!("label {label} out of range")));
        }
        let value = loss(&scores, label);
        let mut delta = loss_gradient(&scores, label);
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let u = layer.units;
            layer.activation.backprop(&trace.pre[l], &trace.post[l], &mut delta);
            let g = &mut grads.layers[l];
            for (gb, &d) in g.bias.iter_mut().zip(&delta) {
                *gb += scale * d;
            }
            match (l, x) {
                (0, Input::Sparse(x)) => {
                    for &i in x.indices() {
                        let row = &mut g.weights[i as usize * u..(i as usize + 1) * u];
                        for (gw, &d) in row.iter_mut().zip(&delta) {
                            *gw += scale * d;
                        }
                    }
                }
                _ => {
                    let input: &[T] = match (l, x) {
                        (0, Input::Dense(x)) => x,
                        _ => &trace.post[l - 1],
                    };
                    for (i, &xi) in input.iter().enumerate() {
                        if xi == T::zero() {
                            continue;
                        }
                        let row = &mut g.weights[i * u..(i + 1) * u];
                        for (gw, &d) in row.iter_mut().zip(&delta) {
                            *gw += scale * xi * d;
                        }
                    }
                }
            }
            if l > 0 {
                delta = (0..layer.inputs)
                    .map(|i| {
                        let row = &layer.weights[i * u..(i + 1) * u];
                        row.iter().zip(&delta).map(|(&w, &d)| w * d).sum()
                    })
                    .collect();
            }
        }
        Ok((value, scores))
    }

    /// Exact gradients of `loss(forward(x), label)` for every parameter.
    pub fn backward<'a>(&self, x: impl Into<Input<'a, T>>, label: usize) -> Result<Gradients<T>> {
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_gradients(x, label, T::one(), &mut grads)?;
        Ok(grads)
    }

    /// Flattened parameters: per layer, weights (input-major) then biases.
    pub fn flat_params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`flat_params`](Self::flat_params) for a given spec.
    pub fn from_flat_params(spec: &NetworkSpec, params: &[T]) -> Result<Self> {
        spec.validate()?;
        let (_, total) = count_params(spec);
        if params.len() != total {
            return Err(QuillError::Format(format!(
                "network expects {total} parameters, got {}",
                params.len()
            )));
        }
        let mut offset = 0;
        let layers = spec
            .shapes()
            .enumerate()
            .map(|(l, (fan_in, units))| {
                let weights = params[offset..offset + fan_in * units].to_vec();
                offset += fan_in * units;
                let bias = params[offset..offset + units].to_vec();
                offset += units;
                DenseLayer {
                    inputs: fan_in,
                    units,
                    weights,
                    bias,
                    activation: spec.activation_of(l),
                }
            })
            .collect();
        Ok(Self {
            layers,
            spec: spec.clone(),
        })
    }
}

fn accumulate_dense<T: Scalar>(layer: &DenseLayer<T>, x: &[T], z: &mut [T]) {
    let u = layer.units;
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        let row = &layer.weights[i * u..(i + 1) * u];
        for (zo, &w) in z.iter_mut().zip(row) {
            *zo += xi * w;
        }
    }
}

pub fn forward<T: Scalar>(model: &NetworkModel<T>, x: &SparseBinaryVector) -> Result<Vec<T>> {
    model.forward(x)
}

/// Argmax label (ties to the lowest class) and the raw output scores.
pub fn predict_network<T: Scalar>(model: &NetworkModel<T>, x: &SparseBinaryVector) -> Result<Prediction> {
    model.predict(x)
}

impl<T: Scalar> Classifier for NetworkModel<T> {
    fn n_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.units)
    }

    fn dimension(&self) -> usize {
        self.input_dimension()
    }

    fn scores(&self, x: &SparseBinaryVector) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.into_iter().map(Scalar::as_f64).collect())
    }
}
