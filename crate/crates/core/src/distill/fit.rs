use rand_chacha::ChaCha8Rng;

use super::{EpochRecord, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::nn::{AdamState, Parameters};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

/// Random streams handed to one epoch of training.
pub(crate) struct EpochRngs {
    pub dropout: ChaCha8Rng,
    pub batches: ChaCha8Rng,
}

/// Runs epochs until `max_epochs` or until validation accuracy has not
/// improved for `patience` epochs, returning the best-scoring parameters.
///
/// `epoch` performs the optimizer updates of one epoch and returns the mean
/// training loss; `evaluate` returns validation accuracy and the smoothness
/// of the model's probabilities.
pub(crate) fn fit<T, M, E, V>(mut model: M, cfg: &TrainConfig, mut epoch: E, mut evaluate: V) -> Result<(M, TrainReport)>
where
    T: Scalar,
    M: Parameters<T> + Clone,
    E: FnMut(&mut M, &mut AdamState<T>, &mut EpochRngs) -> Result<f64>,
    V: FnMut(&M) -> Result<(f64, f64)>,
{
    cfg.validate()?;
    let mut adam = AdamState::new(cfg.adam, &model)?;
    let mut rngs =
        EpochRngs { dropout: stream_rng(cfg.seed, Stream::Dropout), batches: stream_rng(cfg.seed, Stream::Batches) };
    let mut report = TrainReport { best_val_acc: f64::NEG_INFINITY, ..TrainReport::default() };
    let mut best = model.clone();
    for e in 0..cfg.max_epochs {
        let loss = epoch(&mut model, &mut adam, &mut rngs)?;
        if !loss.is_finite() {
            return Err(Error::NanLoss { epoch: e });
        }
        let (val_acc, laplacian_quadratic) = evaluate(&model)?;
        report.records.push(EpochRecord { epoch: e, train_loss: loss, val_acc, laplacian_quadratic });
        if val_acc > report.best_val_acc {
            report.best_val_acc = val_acc;
            report.best_epoch = e;
            best = model.clone();
        } else if e - report.best_epoch >= cfg.patience {
            report.stopped_early = true;
            break;
        }
    }
    Ok((best, report))
}
