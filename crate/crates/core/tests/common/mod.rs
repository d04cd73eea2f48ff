//! Independent reference computations shared by the integration tests and
//! the acceptance run. Nothing here calls the code path it checks.

#![allow(dead_code)]

use quill::baselines::NaiveBayesModel;
use quill::eval::{confusion, precision_recall_f1};
use quill::neuralnet::{init_network, Activation, Input, NetworkModel, NetworkSpec};
use quill::{QualityLabel, Sample, SparseBinaryVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Entries smaller than this are compared on an absolute scale.
pub const GRAD_FLOOR: f64 = 1e-6;
/// ReLU pre-activations closer to zero than this make the loss non-smooth
/// inside the finite-difference stencil.
pub const KINK_MARGIN: f64 = 1e-3;

fn act(a: Activation, z: &[f64]) -> Vec<f64> {
    match a {
        Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
        Activation::Sigmoid => z.iter().map(|&v| 1.0 / (1.0 + (-v).exp())).collect(),
        Activation::Identity => z.to_vec(),
        Activation::Softmax => {
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        }
    }
}

/// Textbook forward pass; returns every layer's pre-activations and the output.
pub fn reference_forward(model: &NetworkModel<f64>, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a = x.to_vec();
    let mut pres = Vec::new();
    for layer in &model.layers {
        let z: Vec<f64> = (0..layer.units)
            .map(|o| layer.bias[o] + (0..layer.inputs).map(|i| layer.weight(o, i) * a[i]).sum::<f64>())
            .collect();
        a = act(layer.activation, &z);
        pres.push(z);
    }
    (pres, a)
}

/// Renormalize, clip to `[1e-7, 1 - 1e-7]`, negative log of the label's share.
pub fn reference_loss(scores: &[f64], label: usize) -> f64 {
    let total: f64 = scores.iter().sum::<f64>().max(1e-7);
    let p = (scores[label] / total).clamp(1e-7, 1.0 - 1e-7);
    -p.ln()
}

#[derive(Debug, Default)]
pub struct GradientReport {
    pub configs: usize,
    pub sigmoid_outputs: usize,
    pub softmax_outputs: usize,
    pub entries: usize,
    pub rejected: usize,
    pub max_relative_error: f64,
    pub max_forward_error: f64,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < GRAD_TOLERANCE && self.max_forward_error < 1e-12
    }
}

/// Random small network with random biases, an input and a label.
fn draw_config(rng: &mut ChaCha8Rng, output: Activation) -> (NetworkModel<f64>, Vec<f64>, usize) {
    let input_dimension = rng.gen_range(1..=10);
    let n_layers = rng.gen_range(1..=3);
    let mut units: Vec<usize> = (1..n_layers).map(|_| rng.gen_range(1..=6)).collect();
    units.push(3);
    let hidden = [Activation::Relu, Activation::Sigmoid, Activation::Identity][rng.gen_range(0..3)];
    let spec = NetworkSpec {
        input_dimension,
        layer_units: units,
        hidden_activation: hidden,
        output_activation: output,
        seed: rng.gen(),
    };
    let mut model = init_network::<f64>(&spec).unwrap();
    for layer in &mut model.layers {
        for b in &mut layer.bias {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    let x: Vec<f64> = if rng.gen_bool(0.5) {
        (0..input_dimension).map(|_| rng.gen_range(-1.0..1.0)).collect()
    } else {
        (0..input_dimension).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect()
    };
    (model, x, rng.gen_range(0..3))
}

fn smooth_at(model: &NetworkModel<f64>, x: &[f64], label: usize) -> bool {
    let (pres, out) = reference_forward(model, x);
    let kink = model
        .layers
        .iter()
        .zip(&pres)
        .any(|(l, z)| l.activation == Activation::Relu && z.iter().any(|v| v.abs() < KINK_MARGIN));
    let total: f64 = out.iter().sum();
    let p = out[label] / total;
    !kink && total > 1e-3 && p > 1e-5 && p < 1.0 - 1e-5
}

fn param(m: &mut NetworkModel<f64>, layer: usize, is_bias: bool, k: usize) -> &mut f64 {
    if is_bias {
        &mut m.layers[layer].bias[k]
    } else {
        &mut m.layers[layer].weights[k]
    }
}

/// Analytic gradients against central differences for `configs` accepted
/// random networks, alternating Sigmoid and Softmax outputs.
pub fn gradient_check(configs: usize, seed: u64) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradientReport::default();
    while report.configs < configs {
        let output = if report.configs % 2 == 0 {
            Activation::Sigmoid
        } else {
            Activation::Softmax
        };
        let (model, x, label) = draw_config(&mut rng, output);
        if !smooth_at(&model, &x, label) {
            report.rejected += 1;
            continue;
        }
        let (_, reference) = reference_forward(&model, &x);
        let produced = model.forward(Input::Dense(&x[..])).unwrap();
        for (a, b) in produced.iter().zip(&reference) {
            report.max_forward_error = report.max_forward_error.max((a - b).abs());
        }

        let grads = model.backward(Input::Dense(&x[..]), label).unwrap();
        let loss_at = |m: &NetworkModel<f64>| reference_loss(&reference_forward(m, &x).1, label);
        let mut probe = model.clone();
        for l in 0..model.layers.len() {
            for (is_bias, analytic) in [(false, &grads.layers[l].weights), (true, &grads.layers[l].bias)] {
                for k in 0..analytic.len() {
                    let original = *param(&mut probe, l, is_bias, k);
                    *param(&mut probe, l, is_bias, k) = original + FD_STEP;
                    let up = loss_at(&probe);
                    *param(&mut probe, l, is_bias, k) = original - FD_STEP;
                    let down = loss_at(&probe);
                    *param(&mut probe, l, is_bias, k) = original;
                    let numeric = (up - down) / (2.0 * FD_STEP);
                    let a = analytic[k];
                    let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_FLOOR);
                    report.max_relative_error = report.max_relative_error.max(rel);
                    report.entries += 1;
                }
            }
        }
        report.configs += 1;
        match output {
            Activation::Sigmoid => report.sigmoid_outputs += 1,
            _ => report.softmax_outputs += 1,
        }
    }
    report
}

/// Direct Bernoulli naive Bayes posterior from raw counts, in probability space.
pub fn bayes_formula(docs: &[(u8, usize)], n_classes: usize, n_features: usize, alpha: f64, query: u8) -> Vec<f64> {
    let n = docs.len() as f64;
    let joint: Vec<f64> = (0..n_classes)
        .map(|c| {
            let in_class: Vec<u8> = docs.iter().filter(|d| d.1 == c).map(|d| d.0).collect();
            let nc = in_class.len() as f64;
            let mut p = nc / n;
            for i in 0..n_features {
                let with = in_class.iter().filter(|&&m| m >> i & 1 == 1).count() as f64;
                let theta = (with + alpha) / (nc + 2.0 * alpha);
                p *= if query >> i & 1 == 1 { theta } else { 1.0 - theta };
            }
            p
        })
        .collect();
    let z: f64 = joint.iter().sum();
    joint.into_iter().map(|j| j / z).collect()
}

fn mask_vector(mask: u8, dimension: usize) -> SparseBinaryVector {
    let idx = (0..dimension as u32).filter(|&i| mask >> i & 1 == 1).collect();
    SparseBinaryVector::new(idx, dimension).unwrap()
}

/// Advances a non-decreasing index tuple; false after the last one.
fn next_multiset(picks: &mut [usize], kinds: usize) -> bool {
    for i in (0..picks.len()).rev() {
        if picks[i] + 1 < kinds {
            let v = picks[i] + 1;
            picks[i..].fill(v);
            return true;
        }
    }
    false
}

#[derive(Debug, Default)]
pub struct NaiveBayesReport {
    pub corpora: usize,
    pub comparisons: usize,
    pub max_error: f64,
}

/// Every multiset of 1 to 4 labelled documents over 3 binary features with
/// 2 or 3 classes, all 8 query vectors each.
pub fn naive_bayes_exhaustive() -> NaiveBayesReport {
    const FEATURES: usize = 3;
    let mut report = NaiveBayesReport::default();
    for n_classes in 2..=3 {
        let kinds: Vec<(u8, usize)> = (0..1u8 << FEATURES)
            .flat_map(|m| (0..n_classes).map(move |c| (m, c)))
            .collect();
        for size in 1..=4 {
            let mut picks = vec![0usize; size];
            loop {
                let docs: Vec<(u8, usize)> = picks.iter().map(|&k| kinds[k]).collect();
                let samples: Vec<Sample> = docs
                    .iter()
                    .map(|&(m, c)| Sample::new(mask_vector(m, FEATURES), c))
                    .collect();
                let model = NaiveBayesModel::fit(&samples, n_classes, 1.0).unwrap();
                for q in 0..1u8 << FEATURES {
                    let got = model.posterior(&mask_vector(q, FEATURES)).unwrap();
                    let want = bayes_formula(&docs, n_classes, FEATURES, 1.0, q);
                    for (g, w) in got.iter().zip(&want) {
                        report.max_error = report.max_error.max((g - w).abs());
                    }
                    report.comparisons += 1;
                }
                report.corpora += 1;

                if !next_multiset(&mut picks, kinds.len()) {
                    break;
                }
            }
        }
    }
    report
}

#[derive(Debug, Default)]
pub struct MetricReport {
    pub pairs: usize,
    pub accuracy_exact: bool,
    pub binary_exact: bool,
    pub max_macro_error: f64,
}

/// Brute-force counting over random prediction/truth sequences.
pub fn metric_identities(pairs: usize, seed: u64) -> MetricReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MetricReport {
        pairs,
        accuracy_exact: true,
        binary_exact: true,
        max_macro_error: 0.0,
    };
    let label = |i: usize| QualityLabel::from_index(i).unwrap();
    for _ in 0..pairs {
        let n = rng.gen_range(1..=300);
        // skewed draws so some classes go missing from time to time
        let bias = rng.gen_range(0.0..1.0);
        let draw = |rng: &mut ChaCha8Rng| {
            if rng.gen_bool(bias) {
                0
            } else {
                rng.gen_range(0..3)
            }
        };
        let p: Vec<usize> = (0..n).map(|_| draw(&mut rng)).collect();
        let t: Vec<usize> = (0..n).map(|_| draw(&mut rng)).collect();
        let preds: Vec<QualityLabel> = p.iter().map(|&i| label(i)).collect();
        let truths: Vec<QualityLabel> = t.iter().map(|&i| label(i)).collect();

        let cm = confusion(&preds, &truths).unwrap();
        let report_ = precision_recall_f1(&cm).unwrap();
        let matches = p.iter().zip(&t).filter(|(a, b)| a == b).count();
        if quill::eval::accuracy(&cm).unwrap() != matches as f64 / n as f64 {
            report.accuracy_exact = false;
        }

        let (mut mp, mut mr, mut mf) = (0.0, 0.0, 0.0);
        for c in 0..3 {
            let tp = (0..n).filter(|&k| p[k] == c && t[k] == c).count();
            let fp = (0..n).filter(|&k| p[k] == c && t[k] != c).count();
            let fn_ = (0..n).filter(|&k| p[k] != c && t[k] == c).count();
            let tn = n - tp - fp - fn_;
            let prec = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let rec = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
            let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
            mp += prec / 3.0;
            mr += rec / 3.0;
            mf += f1 / 3.0;

            let b = cm.one_vs_rest(c);
            let direct = (tp + tn) as f64 / (tp + fp + tn + fn_) as f64;
            if (b.tp, b.fp, b.tn, b.fn_) != (tp as u64, fp as u64, tn as u64, fn_ as u64) || b.accuracy() != direct {
                report.binary_exact = false;
            }
        }
        for (got, want) in [
            (report_.macro_precision, mp),
            (report_.macro_recall, mr),
            (report_.macro_f1, mf),
        ] {
            report.max_macro_error = report.max_macro_error.max((got - want).abs());
        }
    }
    report
}

pub mod props;
