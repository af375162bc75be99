use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{AppnpModel, Linear, MlpModel, Parameters, SageLayer, SageModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Sage,
    Appnp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// JSON model container. Values are stored as `f64`, which holds `f32`
/// parameters exactly, and serialized with shortest round-trip formatting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub kind: ModelKind,
    pub dropout: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    fn capture<T: Scalar, P: Parameters<T>>(kind: ModelKind, dropout: f64, model: &P) -> Self {
        let tensors = model
            .tensors()
            .iter()
            .map(|t| Tensor { shape: t.shape().to_vec(), values: t.iter().map(|v| v.as_f64()).collect() })
            .collect();
        Checkpoint { version: CHECKPOINT_VERSION, kind, dropout, gamma: None, iterations: None, tensors }
    }

    pub fn from_mlp<T: Scalar>(model: &MlpModel<T>) -> Self {
        Self::capture(ModelKind::Mlp, model.dropout(), model)
    }

    pub fn from_sage<T: Scalar>(model: &SageModel<T>) -> Self {
        Self::capture(ModelKind::Sage, model.dropout(), model)
    }

    pub fn from_appnp<T: Scalar>(model: &AppnpModel<T>) -> Self {
        let mut c = Self::capture(ModelKind::Appnp, model.base().dropout(), model);
        c.gamma = Some(model.gamma());
        c.iterations = Some(model.iterations());
        c
    }

    pub fn to_mlp<T: Scalar>(&self) -> Result<MlpModel<T>> {
        self.expect(ModelKind::Mlp)?;
        self.mlp_layers()
    }

    pub fn to_sage<T: Scalar>(&self) -> Result<SageModel<T>> {
        self.expect(ModelKind::Sage)?;
        if self.tensors.len() != 6 {
            return Err(self.malformed("a sage checkpoint holds six tensors"));
        }
        let layer = |k: usize| -> Result<SageLayer<T>> {
            Ok(SageLayer {
                w_self: self.matrix(3 * k)?,
                w_neigh: self.matrix(3 * k + 1)?,
                bias: self.vector(3 * k + 2)?,
            })
        };
        SageModel::from_layers([layer(0)?, layer(1)?], self.dropout)
    }

    pub fn to_appnp<T: Scalar>(&self) -> Result<AppnpModel<T>> {
        self.expect(ModelKind::Appnp)?;
        let (Some(gamma), Some(iterations)) = (self.gamma, self.iterations) else {
            return Err(self.malformed("APPNP checkpoint lacks gamma or iterations"));
        };
        AppnpModel::new(self.mlp_layers()?, gamma, iterations)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::format(path, format!("unsupported checkpoint version {}", c.version)));
        }
        Ok(c)
    }

    fn mlp_layers<T: Scalar>(&self) -> Result<MlpModel<T>> {
        if self.tensors.is_empty() || self.tensors.len() % 2 != 0 {
            return Err(self.malformed("MLP tensors come in weight/bias pairs"));
        }
        let layers = (0..self.tensors.len() / 2)
            .map(|k| Ok(Linear { weight: self.matrix(2 * k)?, bias: self.vector(2 * k + 1)? }))
            .collect::<Result<Vec<_>>>()?;
        MlpModel::from_layers(layers, self.dropout)
    }

    fn expect(&self, kind: ModelKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("checkpoint holds {:?}, not {:?}", self.kind, kind)))
        }
    }

    fn matrix<T: Scalar>(&self, k: usize) -> Result<Array2<T>> {
        let t = &self.tensors[k];
        let [r, c] = t.shape[..] else {
            return Err(self.malformed("expected a matrix"));
        };
        Array2::from_shape_vec((r, c), t.values.iter().map(|&v| T::lit(v)).collect())
            .map_err(|e| self.malformed(&e.to_string()))
    }

    fn vector<T: Scalar>(&self, k: usize) -> Result<Array1<T>> {
        let t = &self.tensors[k];
        if t.shape.len() != 1 || t.shape[0] != t.values.len() {
            return Err(self.malformed("expected a vector"));
        }
        Ok(t.values.iter().map(|&v| T::lit(v)).collect())
    }

    fn malformed(&self, why: &str) -> Error {
        Error::InvalidParameter(format!("malformed checkpoint: {why}"))
    }
}
