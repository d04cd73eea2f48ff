//! Dense feed-forward networks over sparse binary inputs.
//!
//! Each layer computes `y = phi(W x + b)`. The first layer's product is a
//! gather-sum of weight rows at the active input indices, so a 200k-word
//! vocabulary costs only the number of words in the document.

mod network;
mod train;

pub use network::{
    count_params, forward, init_network, loss, loss_gradient, predict_network, Activation, DenseLayer, Gradients,
    Input, LayerGradient, NetworkModel, NetworkSpec, CLIP_EPSILON,
};
pub use train::{train, train_with_validation, EpochTrace, Optimizer, TrainConfig};

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

/// Floating-point type a network computes in.
pub trait Scalar:
    num_traits::Float + Sum + AddAssign + SubAssign + MulAssign + Default + Debug + Send + Sync + 'static
{
    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}
