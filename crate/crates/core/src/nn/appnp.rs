use ndarray::{Array2, ArrayView2, ArrayViewD, ArrayViewMutD};
use rand::Rng;

use super::{Grads, MlpModel, MlpTape, Parameters};
use crate::error::{Error, Result};
use crate::graph::NormAdj;
use crate::scalar::Scalar;

/// MLP predictor followed by `K` teleporting propagation steps
/// `Z ← γ Ã Z + (1 − γ) Z₀` on its logits.
#[derive(Debug, Clone, PartialEq)]
pub struct AppnpModel<T> {
    base: MlpModel<T>,
    gamma: f64,
    iterations: usize,
}

#[derive(Debug, Clone)]
pub struct AppnpTape<T> {
    base: MlpTape<T>,
}

impl<T: Scalar> AppnpModel<T> {
    pub fn new(base: MlpModel<T>, gamma: f64, iterations: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("APPNP strength {gamma} outside (0, 1)")));
        }
        if iterations == 0 {
            return Err(Error::InvalidParameter("APPNP needs at least one iteration".into()));
        }
        Ok(AppnpModel { base, gamma, iterations })
    }

    pub fn base(&self) -> &MlpModel<T> {
        &self.base
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn forward(&self, x: ArrayView2<'_, T>, adj: &NormAdj<T>) -> Result<Array2<T>> {
        Ok(self.forward_train::<rand_chacha::ChaCha8Rng>(x, adj, None)?.0)
    }

    pub fn forward_train<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<'_, T>,
        adj: &NormAdj<T>,
        rng: Option<&mut R>,
    ) -> Result<(Array2<T>, AppnpTape<T>)> {
        let (z0, base) = self.base.forward_train(x, rng)?;
        let z = self.propagate(&z0, adj)?;
        Ok((z, AppnpTape { base }))
    }

    fn propagate(&self, z0: &Array2<T>, adj: &NormAdj<T>) -> Result<Array2<T>> {
        let g = T::lit(self.gamma);
        let restart = T::lit(1.0 - self.gamma);
        let mut z = z0.clone();
        for _ in 0..self.iterations {
            let mut next = adj.spmm(z.view())?;
            next.mapv_inplace(|v| v * g);
            next.scaled_add(restart, z0);
            z = next;
        }
        Ok(z)
    }

    /// Gradients of the base predictor's parameters. The propagation matrix is
    /// symmetric, so the adjoint recursion reuses it unchanged.
    pub fn backward(&self, tape: &AppnpTape<T>, adj: &NormAdj<T>, grad_out: ArrayView2<'_, T>) -> Result<Grads<T>> {
        let g = T::lit(self.gamma);
        let restart = T::lit(1.0 - self.gamma);
        let mut acc = Array2::zeros(grad_out.dim());
        let mut grad = grad_out.to_owned();
        for _ in 0..self.iterations {
            acc.scaled_add(restart, &grad);
            grad = adj.spmm(grad.view())?;
            grad.mapv_inplace(|v| v * g);
        }
        acc += &grad;
        Ok(self.base.backward(&tape.base, acc.view()).0)
    }
}

impl<T: Scalar> Parameters<T> for AppnpModel<T> {
    fn tensors(&self) -> Vec<ArrayViewD<'_, T>> {
        self.base.tensors()
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>> {
        self.base.tensors_mut()
    }
}
