use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::ProbMatrix;
use crate::scalar::Scalar;

/// Which argument of the divergence is the distribution being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    /// `Σ target · ln(target / pred)`; gradient equals soft-label cross-entropy.
    #[default]
    TargetToPred,
    /// `Σ pred · ln(pred / target)`; target entries are floored before the log.
    PredToTarget,
}

const TARGET_FLOOR: f64 = 1e-8;

/// Row-wise softmax with row-max subtraction.
pub fn softmax_rows<T: Scalar>(logits: ArrayView2<'_, T>) -> Result<ProbMatrix<T>> {
    if let Some(v) = logits.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("logit {v}")));
    }
    let mut out = logits.to_owned();
    for mut row in out.outer_iter_mut() {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: T = row.iter().copied().sum();
        row.mapv_inplace(|v| v / sum);
    }
    Ok(ProbMatrix::from_normalized(out))
}

/// Pulls a gradient w.r.t. softmax probabilities back to the logits:
/// `S ⊙ (G − rowsum(G ⊙ S))`.
pub fn softmax_backward<T: Scalar>(probs: ArrayView2<'_, T>, grad: ArrayView2<'_, T>) -> Array2<T> {
    let mut out = Array2::zeros(probs.dim());
    Zip::from(out.rows_mut()).and(probs.rows()).and(grad.rows()).for_each(|mut o, s, g| {
        let dot = s.iter().zip(g.iter()).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        Zip::from(&mut o).and(&s).and(&g).for_each(|o, &s, &g| *o = s * (g - dot));
    });
    out
}

pub(crate) fn check_idx(idx: &[usize], num_rows: usize, what: &'static str) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::EmptySet(what));
    }
    match idx.iter().find(|&&i| i >= num_rows) {
        Some(&i) => Err(Error::NodeOutOfRange { index: i, num_nodes: num_rows }),
        None => Ok(()),
    }
}

fn check_labels(labels: &[usize], num_rows: usize, num_classes: usize, idx: &[usize]) -> Result<()> {
    if labels.len() != num_rows {
        return Err(Error::Dimension(format!("{} labels for {num_rows} rows", labels.len())));
    }
    for &i in idx {
        if labels[i] >= num_classes {
            return Err(Error::LabelOutOfRange { node: i, label: labels[i], num_classes });
        }
    }
    Ok(())
}

/// Mean over `idx` of `−ln P[i, y_i]`.
pub fn cross_entropy<T: Scalar>(probs: &ProbMatrix<T>, labels: &[usize], idx: &[usize]) -> Result<T> {
    check_idx(idx, probs.nrows(), "cross-entropy rows")?;
    check_labels(labels, probs.nrows(), probs.ncols(), idx)?;
    let p = probs.view();
    let total = idx.iter().fold(T::zero(), |acc, &i| acc - p[[i, labels[i]]].ln());
    Ok(total / T::lit(idx.len() as f64))
}

/// Cross-entropy of `softmax(logits)` with its gradient w.r.t. the logits.
/// Rows outside `idx` receive zero gradient.
pub fn loss_cross_entropy<T: Scalar>(
    logits: ArrayView2<'_, T>,
    labels: &[usize],
    idx: &[usize],
) -> Result<(T, Array2<T>)> {
    let probs = softmax_rows(logits)?;
    let loss = cross_entropy(&probs, labels, idx)?;
    let scale = T::one() / T::lit(idx.len() as f64);
    let p = probs.view();
    let mut grad = Array2::zeros(logits.dim());
    for &i in idx {
        let mut row = grad.row_mut(i);
        row.scaled_add(scale, &p.row(i));
        row[labels[i]] -= scale;
    }
    Ok((loss, grad))
}

/// Mean over `idx` of the row-wise divergence between `target` and `pred`,
/// with the gradient w.r.t. the entries of `pred`.
///
/// Fails when a `pred` entry that enters a logarithm is not positive and finite.
pub fn kl_divergence<T: Scalar>(
    target: ArrayView2<'_, T>,
    pred: ArrayView2<'_, T>,
    idx: &[usize],
    direction: KlDirection,
) -> Result<(T, Array2<T>)> {
    if target.dim() != pred.dim() {
        return Err(Error::Dimension(format!("target {:?} vs pred {:?}", target.dim(), pred.dim())));
    }
    check_idx(idx, pred.nrows(), "divergence rows")?;
    let scale = T::one() / T::lit(idx.len() as f64);
    let floor = T::lit(TARGET_FLOOR);
    let mut grad = Array2::zeros(pred.dim());
    let mut total = T::zero();
    for &i in idx {
        for c in 0..pred.ncols() {
            let t = target[[i, c]];
            let q = pred[[i, c]];
            match direction {
                KlDirection::TargetToPred => {
                    if t > T::zero() {
                        if !(q > T::zero() && q.is_finite()) {
                            return Err(Error::NotProbability(format!("prediction {q} at row {i}, class {c}")));
                        }
                        total += t * (t / q).ln();
                        grad[[i, c]] = -scale * t / q;
                    }
                }
                KlDirection::PredToTarget => {
                    if !(q >= T::zero() && q.is_finite()) {
                        return Err(Error::NotProbability(format!("prediction {q} at row {i}, class {c}")));
                    }
                    let t = t.max(floor);
                    if q > T::zero() {
                        let log_ratio = (q / t).ln();
                        total += q * log_ratio;
                        grad[[i, c]] = scale * (log_ratio + T::one());
                    } else {
                        grad[[i, c]] = scale * (T::one() - t.ln());
                    }
                }
            }
        }
    }
    Ok((total * scale, grad))
}

/// Divergence between `target` and `softmax(logits)` with the gradient
/// w.r.t. the logits.
pub fn loss_kl<T: Scalar>(
    target: &ProbMatrix<T>,
    logits: ArrayView2<'_, T>,
    idx: &[usize],
    direction: KlDirection,
) -> Result<(T, Array2<T>)> {
    let probs = softmax_rows(logits)?;
    let (loss, g) = kl_divergence(target.view(), probs.view(), idx, direction)?;
    Ok((loss, softmax_backward(probs.view(), g.view())))
}
