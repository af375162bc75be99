use ndarray::{ArrayD, Zip};
use serde::{Deserialize, Serialize};

use super::{Grads, Parameters};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled decay: each step also subtracts `lr · weight_decay · θ`.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-2, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 5e-4 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.weight_decay >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid Adam settings {self:?}")))
        }
    }
}

/// Moment estimates for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    config: AdamConfig,
    m: Vec<ArrayD<T>>,
    v: Vec<ArrayD<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<P: Parameters<T> + ?Sized>(config: AdamConfig, params: &P) -> Result<Self> {
        config.validate()?;
        let m: Vec<_> = params.tensors().iter().map(|t| ArrayD::zeros(t.raw_dim())).collect();
        Ok(AdamState { config, v: m.clone(), m, step: 0 })
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// One bias-corrected update of `params` in place.
    pub fn step<P: Parameters<T> + ?Sized>(&mut self, params: &mut P, grads: &Grads<T>) -> Result<()> {
        let mut tensors = params.tensors_mut();
        if tensors.len() != grads.len() || tensors.len() != self.m.len() {
            return Err(Error::Dimension(format!(
                "{} parameter tensors, {} gradients, {} moment slots",
                tensors.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for (k, (t, g)) in tensors.iter().zip(grads).enumerate() {
            if t.shape() != g.shape() || t.shape() != self.m[k].shape() {
                return Err(Error::Dimension(format!(
                    "tensor {k}: parameter {:?}, gradient {:?}",
                    t.shape(),
                    g.shape()
                )));
            }
        }
        self.step += 1;
        let c = self.config;
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let bias1 = T::one() - T::lit(c.beta1.powi(self.step as i32));
        let bias2 = T::one() - T::lit(c.beta2.powi(self.step as i32));
        let lr = T::lit(c.lr);
        let decay = T::lit(c.lr * c.weight_decay);
        let eps = T::lit(c.eps);
        for ((t, g), (m, v)) in tensors.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            Zip::from(t).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p = *p - decay * *p - lr * m_hat / (v_hat.sqrt() + eps);
            });
        }
        Ok(())
    }
}
