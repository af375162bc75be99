use ndarray::{Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;

use super::{add_bias, dropout_mask, glorot, relu_backward, relu_inplace, Grads, Parameters};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Affine map `x ↦ x·W + b` with `W` stored as `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn new<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        Linear { weight: glorot(fan_in, fan_out, rng), bias: Array1::zeros(fan_out) }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Linear { weight: Array2::zeros((fan_in, fan_out)), bias: Array1::zeros(fan_out) }
    }

    pub fn apply(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        let mut z = x.dot(&self.weight);
        add_bias(&mut z, &self.bias);
        z
    }
}

/// Multilayer perceptron: rectifier between layers, raw logits at the output,
/// dropout on hidden activations in training mode.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    layers: Vec<Linear<T>>,
    dropout: f64,
}

/// Intermediate values kept by [`MlpModel::forward_train`] for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpTape<T> {
    inputs: Vec<Array2<T>>,
    pre: Vec<Array2<T>>,
    masks: Vec<Option<Array2<T>>>,
}

impl<T: Scalar> MlpModel<T> {
    /// `dims = [input, hidden…, output]`.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], dropout: f64, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidParameter("an MLP needs at least input and output dims".into()));
        }
        let layers = dims.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        Self::from_layers(layers, dropout)
    }

    pub fn from_layers(layers: Vec<Linear<T>>, dropout: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("an MLP needs at least one layer".into()));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidParameter(format!("dropout {dropout} outside [0, 1)")));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weight.ncols() != l.bias.len() {
                return Err(Error::Dimension(format!("layer {k}: weight and bias disagree")));
            }
        }
        for (k, w) in layers.windows(2).enumerate() {
            if w[0].weight.ncols() != w[1].weight.nrows() {
                return Err(Error::Dimension(format!(
                    "layer {k} outputs {} but layer {} expects {}",
                    w[0].weight.ncols(),
                    k + 1,
                    w[1].weight.nrows()
                )));
            }
        }
        Ok(MlpModel { layers, dropout })
    }

    pub fn layers(&self) -> &[Linear<T>] {
        &self.layers
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weight.ncols()
    }

    /// Deterministic forward pass (dropout off).
    pub fn forward(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        self.check_input(x)?;
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            h = layer.apply(h.view());
            if l < last {
                relu_inplace(&mut h);
            }
        }
        Ok(h)
    }

    /// Forward pass recording a tape. Dropout is applied only when `rng` is given.
    pub fn forward_train<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<'_, T>,
        mut rng: Option<&mut R>,
    ) -> Result<(Array2<T>, MlpTape<T>)> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut tape = MlpTape { inputs: Vec::new(), pre: Vec::new(), masks: Vec::new() };
        let mut h = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(h.view());
            tape.inputs.push(h);
            if l == last {
                return Ok((z, tape));
            }
            let mut a = z.clone();
            relu_inplace(&mut a);
            let mask = match rng.as_deref_mut() {
                Some(r) if self.dropout > 0.0 => {
                    let m = dropout_mask(a.dim(), self.dropout, r);
                    a *= &m;
                    Some(m)
                }
                _ => None,
            };
            tape.pre.push(z);
            tape.masks.push(mask);
            h = a;
        }
        unreachable!("loop returns at the output layer")
    }

    /// Parameter gradients for upstream gradient `grad_out` (w.r.t. the logits),
    /// together with the gradient w.r.t. the input features.
    pub fn backward(&self, tape: &MlpTape<T>, grad_out: ArrayView2<'_, T>) -> (Grads<T>, Array2<T>) {
        let mut grads = vec![None; self.layers.len() * 2];
        let mut g = grad_out.to_owned();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &tape.inputs[l];
            grads[2 * l] = Some(input.t().dot(&g).into_dyn());
            grads[2 * l + 1] = Some(g.sum_axis(Axis(0)).into_dyn());
            let mut gin = g.dot(&layer.weight.t());
            if l > 0 {
                if let Some(mask) = &tape.masks[l - 1] {
                    gin *= mask;
                }
                relu_backward(&mut gin, &tape.pre[l - 1]);
            }
            g = gin;
        }
        (grads.into_iter().map(Option::unwrap).collect(), g)
    }

    fn check_input(&self, x: ArrayView2<'_, T>) -> Result<()> {
        if x.ncols() == self.input_dim() {
            Ok(())
        } else {
            Err(Error::Dimension(format!("input has {} features, model expects {}", x.ncols(), self.input_dim())))
        }
    }
}

impl<T: Scalar> Parameters<T> for MlpModel<T> {
    fn tensors(&self) -> Vec<ArrayViewD<'_, T>> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.view().into_dyn(), l.bias.view().into_dyn()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.view_mut().into_dyn(), l.bias.view_mut().into_dyn()])
            .collect()
    }
}
