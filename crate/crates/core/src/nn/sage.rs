use ndarray::{Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;

use super::{add_bias, dropout_mask, glorot, relu_backward, relu_inplace, Grads, Parameters};
use crate::error::{Error, Result};
use crate::graph::{Csr, Graph};
use crate::scalar::Scalar;

/// One mean-aggregation layer: `h W_self + mean_{N(i)}(h) W_neigh + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SageLayer<T> {
    pub w_self: Array2<T>,
    pub w_neigh: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> SageLayer<T> {
    pub fn new<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        SageLayer {
            w_self: glorot(fan_in, fan_out, rng),
            w_neigh: glorot(fan_in, fan_out, rng),
            bias: Array1::zeros(fan_out),
        }
    }

    fn apply(&self, h: ArrayView2<'_, T>, neigh: ArrayView2<'_, T>) -> Array2<T> {
        let mut z = h.dot(&self.w_self) + neigh.dot(&self.w_neigh);
        add_bias(&mut z, &self.bias);
        z
    }

    fn check(&self) -> Result<()> {
        if self.w_self.dim() != self.w_neigh.dim() || self.w_self.ncols() != self.bias.len() {
            return Err(Error::Dimension("sage layer weights disagree in shape".into()));
        }
        Ok(())
    }
}

/// Two-layer GraphSAGE with full-neighborhood mean aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct SageModel<T> {
    layers: [SageLayer<T>; 2],
    dropout: f64,
}

#[derive(Debug, Clone)]
pub struct SageTape<T> {
    x: Array2<T>,
    agg_x: Array2<T>,
    pre: Array2<T>,
    hidden: Array2<T>,
    agg_hidden: Array2<T>,
    mask: Option<Array2<T>>,
}

impl<T: Scalar> SageModel<T> {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, output: usize, dropout: f64, rng: &mut R) -> Result<Self> {
        let first = SageLayer::new(input, hidden, rng);
        let second = SageLayer::new(hidden, output, rng);
        Self::from_layers([first, second], dropout)
    }

    pub fn from_layers(layers: [SageLayer<T>; 2], dropout: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidParameter(format!("dropout {dropout} outside [0, 1)")));
        }
        layers[0].check()?;
        layers[1].check()?;
        if layers[0].w_self.ncols() != layers[1].w_self.nrows() {
            return Err(Error::Dimension("sage layers do not chain".into()));
        }
        Ok(SageModel { layers, dropout })
    }

    pub fn layers(&self) -> &[SageLayer<T>; 2] {
        &self.layers
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w_self.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[1].w_self.ncols()
    }

    /// Deterministic logits on `graph` using its own features.
    pub fn forward(&self, graph: &Graph<T>) -> Result<Array2<T>> {
        let agg = graph.mean_aggregator();
        Ok(self.forward_train::<rand_chacha::ChaCha8Rng>(graph.features().view(), &agg, None)?.0)
    }

    /// Forward pass with an explicit aggregator; dropout only when `rng` is given.
    pub fn forward_train<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<'_, T>,
        agg: &Csr<T>,
        rng: Option<&mut R>,
    ) -> Result<(Array2<T>, SageTape<T>)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has {} features, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let agg_x = agg.spmm(x)?;
        let pre = self.layers[0].apply(x, agg_x.view());
        let mut hidden = pre.clone();
        relu_inplace(&mut hidden);
        let mask = match rng {
            Some(r) if self.dropout > 0.0 => {
                let m = dropout_mask(hidden.dim(), self.dropout, r);
                hidden *= &m;
                Some(m)
            }
            _ => None,
        };
        let agg_hidden = agg.spmm(hidden.view())?;
        let logits = self.layers[1].apply(hidden.view(), agg_hidden.view());
        let tape = SageTape { x: x.to_owned(), agg_x, pre, hidden, agg_hidden, mask };
        Ok((logits, tape))
    }

    /// Parameter gradients in [`Parameters::tensors`] order.
    pub fn backward(&self, tape: &SageTape<T>, agg: &Csr<T>, grad_out: ArrayView2<'_, T>) -> Result<Grads<T>> {
        let l1 = &self.layers[1];
        let g2 = grad_out;
        let dw_self1 = tape.hidden.t().dot(&g2);
        let dw_neigh1 = tape.agg_hidden.t().dot(&g2);
        let db1 = g2.sum_axis(Axis(0));
        let via_neigh = g2.dot(&l1.w_neigh.t());
        let mut g1 = g2.dot(&l1.w_self.t()) + agg.spmm_transpose(via_neigh.view())?;
        if let Some(mask) = &tape.mask {
            g1 *= mask;
        }
        relu_backward(&mut g1, &tape.pre);
        let dw_self0 = tape.x.t().dot(&g1);
        let dw_neigh0 = tape.agg_x.t().dot(&g1);
        let db0 = g1.sum_axis(Axis(0));
        Ok(vec![
            dw_self0.into_dyn(),
            dw_neigh0.into_dyn(),
            db0.into_dyn(),
            dw_self1.into_dyn(),
            dw_neigh1.into_dyn(),
            db1.into_dyn(),
        ])
    }
}

impl<T: Scalar> Parameters<T> for SageModel<T> {
    fn tensors(&self) -> Vec<ArrayViewD<'_, T>> {
        self.layers
            .iter()
            .flat_map(|l| [l.w_self.view().into_dyn(), l.w_neigh.view().into_dyn(), l.bias.view().into_dyn()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [l.w_self.view_mut().into_dyn(), l.w_neigh.view_mut().into_dyn(), l.bias.view_mut().into_dyn()]
            })
            .collect()
    }
}
