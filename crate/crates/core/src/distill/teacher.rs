use ndarray::Array2;
use rand::seq::SliceRandom;

use super::fit::fit;
use super::{accuracy, TeacherArch, TeacherConfig, TrainConfig, TrainReport};
use crate::data::SplitSpec;
use crate::error::{Error, Result};
use crate::graph::{laplacian_quadratic, normalize_adjacency, normalize_adjacency_with, Graph, SelfLoops};
use crate::nn::{loss_cross_entropy, softmax_rows, AppnpModel, Checkpoint, MlpModel, SageModel};
use crate::prob::ProbMatrix;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum TeacherModel<T> {
    Sage(SageModel<T>),
    Appnp { model: AppnpModel<T>, self_loops: SelfLoops },
}

impl<T: Scalar> TeacherModel<T> {
    /// Logits for every node of `graph`, dropout off.
    pub fn forward(&self, graph: &Graph<T>) -> Result<Array2<T>> {
        match self {
            TeacherModel::Sage(m) => m.forward(graph),
            TeacherModel::Appnp { model, self_loops } => {
                model.forward(graph.features().view(), &normalize_adjacency_with(graph, *self_loops))
            }
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        match self {
            TeacherModel::Sage(m) => Checkpoint::from_sage(m),
            TeacherModel::Appnp { model, .. } => Checkpoint::from_appnp(model),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Teacher<T> {
    pub model: TeacherModel<T>,
    /// Softmax of the selected model's logits on every node.
    pub probs: ProbMatrix<T>,
    pub report: TrainReport,
}

/// Cross-entropy training on the training nodes with early stopping on
/// validation accuracy.
pub fn train_teacher<T: Scalar>(graph: &Graph<T>, split: &SplitSpec, cfg: &TeacherConfig) -> Result<Teacher<T>> {
    split.validate(graph.num_nodes())?;
    if split.val.is_empty() {
        return Err(Error::EmptySet("validation nodes"));
    }
    let mut init = stream_rng(cfg.train.seed, Stream::Init);
    let (d, k) = (graph.feature_dim(), graph.num_classes());
    let smooth_adj = normalize_adjacency(graph);
    let x = graph.features().view();
    let labels = graph.labels();
    let score = |logits: Array2<T>| -> Result<(f64, f64)> {
        let probs = softmax_rows(logits.view())?;
        let acc = accuracy(logits.view(), labels, &split.val)?;
        Ok((acc, laplacian_quadratic(&smooth_adj, probs.view())?.as_f64()))
    };
    let model = match cfg.arch {
        TeacherArch::Sage => {
            let agg = graph.mean_aggregator();
            let model = SageModel::new(d, cfg.hidden, k, cfg.train.dropout, &mut init)?;
            let (best, report) = fit(
                model,
                &cfg.train,
                |m, adam, rngs| {
                    let mut total = 0.0;
                    let batches = batches(&split.train, &cfg.train, &mut rngs.batches);
                    for rows in &batches {
                        let (logits, tape) = m.forward_train(x, &agg, Some(&mut rngs.dropout))?;
                        let (loss, g) = loss_cross_entropy(logits.view(), labels, rows)?;
                        let grads = m.backward(&tape, &agg, g.view())?;
                        adam.step(m, &grads)?;
                        total += loss.as_f64();
                    }
                    Ok(total / batches.len() as f64)
                },
                |m| score(m.forward_train::<rand_chacha::ChaCha8Rng>(x, &agg, None)?.0),
            )?;
            (TeacherModel::Sage(best), report)
        }
        TeacherArch::Appnp => {
            let self_loops = if cfg.self_loops { SelfLoops::Include } else { SelfLoops::Exclude };
            let adj = normalize_adjacency_with(graph, self_loops);
            let base = MlpModel::new(&[d, cfg.hidden, k], cfg.train.dropout, &mut init)?;
            let model = AppnpModel::new(base, cfg.appnp_gamma, cfg.appnp_iterations)?;
            let (best, report) = fit(
                model,
                &cfg.train,
                |m, adam, rngs| {
                    let mut total = 0.0;
                    let batches = batches(&split.train, &cfg.train, &mut rngs.batches);
                    for rows in &batches {
                        let (logits, tape) = m.forward_train(x, &adj, Some(&mut rngs.dropout))?;
                        let (loss, g) = loss_cross_entropy(logits.view(), labels, rows)?;
                        let grads = m.backward(&tape, &adj, g.view())?;
                        adam.step(m, &grads)?;
                        total += loss.as_f64();
                    }
                    Ok(total / batches.len() as f64)
                },
                |m| score(m.forward(x, &adj)?),
            )?;
            (TeacherModel::Appnp { model: best, self_loops }, report)
        }
    };
    let (model, report) = model;
    let probs = softmax_rows(model.forward(graph)?.view())?;
    Ok(Teacher { model, probs, report })
}

/// Row subsets for one epoch: the whole set, or shuffled chunks.
pub(crate) fn batches<R: rand::Rng + ?Sized>(rows: &[usize], cfg: &TrainConfig, rng: &mut R) -> Vec<Vec<usize>> {
    match cfg.batch_size {
        Some(b) if b < rows.len() => {
            let mut order = rows.to_vec();
            order.shuffle(rng);
            order.chunks(b).map(|c| c.to_vec()).collect()
        }
        _ => vec![rows.to_vec()],
    }
}

