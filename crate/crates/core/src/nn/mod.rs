//! Small dense models with hand-written backward passes.

mod adam;
mod appnp;
mod checkpoint;
mod gradcheck;
mod loss;
mod mlp;
mod sage;

pub use adam::{AdamConfig, AdamState};
pub use appnp::{AppnpModel, AppnpTape};
pub use checkpoint::{Checkpoint, ModelKind};
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::{
    cross_entropy, kl_divergence, loss_cross_entropy, loss_kl, softmax_backward, softmax_rows, KlDirection,
};
pub use mlp::{Linear, MlpModel, MlpTape};
pub use sage::{SageLayer, SageModel, SageTape};

use ndarray::{Array1, Array2, ArrayD, ArrayViewD, ArrayViewMutD};
use rand::Rng;

use crate::scalar::Scalar;

/// Gradients, one tensor per entry of [`Parameters::tensors`].
pub type Grads<T> = Vec<ArrayD<T>>;

/// Uniform access to a model's trainable tensors, in a fixed order.
pub trait Parameters<T> {
    fn tensors(&self) -> Vec<ArrayViewD<'_, T>>;
    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>>;

    fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Glorot-uniform weights `U(−a, a)`, `a = √(6 / (fan_in + fan_out))`.
pub(crate) fn glorot<T: Scalar, R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Array2<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || T::lit(rng.random_range(-limit..=limit)))
}

/// Inverted-dropout mask: entries are `0` or `1 / (1 − rate)`.
pub(crate) fn dropout_mask<T: Scalar, R: Rng + ?Sized>(shape: (usize, usize), rate: f64, rng: &mut R) -> Array2<T> {
    let keep = T::lit(1.0 / (1.0 - rate));
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < rate { T::zero() } else { keep })
}

pub(crate) fn relu_inplace<T: Scalar>(m: &mut Array2<T>) {
    m.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
}

/// Zeroes `grad` wherever the forward pre-activation was not positive.
pub(crate) fn relu_backward<T: Scalar>(grad: &mut Array2<T>, pre: &Array2<T>) {
    ndarray::Zip::from(grad).and(pre).for_each(|g, &z| {
        if z <= T::zero() {
            *g = T::zero();
        }
    });
}

pub(crate) fn add_bias<T: Scalar>(m: &mut Array2<T>, bias: &Array1<T>) {
    for mut row in m.outer_iter_mut() {
        row += bias;
    }
}
