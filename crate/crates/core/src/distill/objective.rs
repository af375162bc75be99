use ndarray::{Array2, ArrayView2};

use super::LossVariant;
use crate::error::Result;
use crate::graph::NormAdj;
use crate::nn::{kl_divergence, loss_cross_entropy, softmax_backward, softmax_rows, KlDirection};
use crate::prob::ProbMatrix;
use crate::propagation::{apply_inverse, clamp_renormalize};
use crate::scalar::Scalar;

/// The student's training objective as a function of its logits:
/// `(1 − α)·KL + α·CE`, each a mean over its own rows.
#[derive(Debug, Clone, Copy)]
pub struct StudentObjective<'a, T> {
    pub variant: LossVariant,
    /// Already prepared for `Plain`/`Pnd`/`PndFix`; the raw teacher otherwise.
    pub target: &'a ProbMatrix<T>,
    pub adj: &'a NormAdj<T>,
    pub labels: &'a [usize],
    pub gamma: f64,
    pub alpha: f64,
    pub floor: f64,
    pub temperature: f64,
    pub direction: KlDirection,
}

impl<T: Scalar> StudentObjective<'_, T> {
    /// The distribution compared against the target, for every node.
    pub fn student_view(&self, logits: ArrayView2<'_, T>) -> Result<ProbMatrix<T>> {
        let probs = self.probs(logits)?;
        match self.operator(probs.view())? {
            Some(raw) => Ok(clamp_renormalize(raw.view(), self.floor)),
            None => Ok(probs),
        }
    }

    /// Loss value and gradient w.r.t. `logits`. Divergence rows are `kd_rows`,
    /// cross-entropy rows are `ce_rows`; an empty `ce_rows` drops that term.
    pub fn loss_and_grad(
        &self,
        logits: ArrayView2<'_, T>,
        kd_rows: &[usize],
        ce_rows: &[usize],
    ) -> Result<(T, Array2<T>)> {
        let alpha = T::lit(self.alpha);
        let mut total = T::zero();
        let mut grad = Array2::zeros(logits.dim());
        if self.alpha < 1.0 {
            let (kl, g) = self.divergence(logits, kd_rows)?;
            total += (T::one() - alpha) * kl;
            grad.scaled_add(T::one() - alpha, &g);
        }
        if self.alpha > 0.0 && !ce_rows.is_empty() {
            let (ce, g) = loss_cross_entropy(logits, self.labels, ce_rows)?;
            total += alpha * ce;
            grad.scaled_add(alpha, &g);
        }
        Ok((total, grad))
    }

    fn probs(&self, logits: ArrayView2<'_, T>) -> Result<ProbMatrix<T>> {
        if self.temperature == 1.0 {
            softmax_rows(logits)
        } else {
            let t = T::lit(self.temperature);
            softmax_rows(logits.mapv(|v| v / t).view())
        }
    }

    /// Student-side operator; `None` when the student is compared directly.
    fn operator(&self, m: ArrayView2<'_, T>) -> Result<Option<Array2<T>>> {
        match self.variant {
            LossVariant::Invkd => apply_inverse(m, self.adj, self.gamma).map(Some),
            LossVariant::Conv => self.adj.spmm(m).map(Some),
            _ => Ok(None),
        }
    }

    fn divergence(&self, logits: ArrayView2<'_, T>, rows: &[usize]) -> Result<(T, Array2<T>)> {
        let probs = self.probs(logits)?;
        let grad_probs = match self.operator(probs.view())? {
            None => {
                let (kl, g) = kl_divergence(self.target.view(), probs.view(), rows, self.direction)?;
                return Ok((kl, self.finish(&probs, g)));
            }
            Some(raw) => raw,
        };
        let q = clamp_renormalize(grad_probs.view(), self.floor);
        let (kl, g_q) = kl_divergence(self.target.view(), q.view(), rows, self.direction)?;
        let g_raw = renormalize_backward(grad_probs.view(), q.view(), g_q.view(), self.floor, rows);
        // Both operators are symmetric, so the adjoint is the operator itself.
        let g_probs = self.operator(g_raw.view())?.expect("operator variant");
        Ok((kl, self.finish(&probs, g_probs)))
    }

    fn finish(&self, probs: &ProbMatrix<T>, g: Array2<T>) -> Array2<T> {
        let mut out = softmax_backward(probs.view(), g.view());
        if self.temperature != 1.0 {
            let t = T::lit(self.temperature);
            out.mapv_inplace(|v| v / t);
        }
        out
    }
}

/// Gradient through `Q = max(M, floor) / rowsum(max(M, floor))`; clamped
/// entries receive none. Only `rows` can carry upstream gradient.
fn renormalize_backward<T: Scalar>(
    raw: ArrayView2<'_, T>,
    q: ArrayView2<'_, T>,
    g: ArrayView2<'_, T>,
    floor: f64,
    rows: &[usize],
) -> Array2<T> {
    let f = T::lit(floor);
    let mut out = Array2::zeros(raw.dim());
    for &i in rows {
        let sum = raw.row(i).iter().fold(T::zero(), |acc, &v| acc + if v > f { v } else { f });
        let dot = g.row(i).iter().zip(q.row(i)).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        for c in 0..raw.ncols() {
            if raw[[i, c]] > f {
                out[[i, c]] = (g[[i, c]] - dot) / sum;
            }
        }
    }
    out
}
