use std::collections::HashSet;

use super::fit::fit;
use super::teacher::batches;
use super::{accuracy, DistillConfig, LossVariant, StudentObjective, TrainReport};
use crate::data::SplitSpec;
use crate::error::{Error, Result};
use crate::graph::{laplacian_quadratic, normalize_adjacency, Graph, NormAdj};
use crate::nn::{softmax_rows, MlpModel};
use crate::prob::ProbMatrix;
use crate::propagation::{propagate_recursive, propagate_recursive_fix};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Student<T> {
    pub model: MlpModel<T>,
    pub report: TrainReport,
}

/// Target distribution for the teacher-side variants: the teacher itself,
/// its lazy propagation, or the propagation with training rows pinned.
pub fn prepare_target<T: Scalar>(
    teacher: &ProbMatrix<T>,
    adj: &NormAdj<T>,
    cfg: &DistillConfig,
    split: &SplitSpec,
) -> Result<ProbMatrix<T>> {
    match cfg.loss {
        LossVariant::Plain => Ok(teacher.clone()),
        LossVariant::Pnd => propagate_recursive(teacher, adj, cfg.gamma, cfg.steps),
        LossVariant::PndFix => propagate_recursive_fix(teacher, adj, cfg.gamma, cfg.steps, &split.train),
        v => Err(Error::InvalidParameter(format!(
            "{} transforms the student, not the target",
            v.name()
        ))),
    }
}

/// Trains an MLP on node features to match the teacher under `cfg.loss`.
///
/// Divergence rows are all nodes, or in production mode all nodes outside
/// `split.ind`; the cross-entropy term uses the training nodes.
pub fn distill_student<T: Scalar>(
    graph: &Graph<T>,
    teacher: &ProbMatrix<T>,
    split: &SplitSpec,
    cfg: &DistillConfig,
) -> Result<Student<T>> {
    cfg.validate()?;
    let n = graph.num_nodes();
    split.validate(n)?;
    if split.val.is_empty() {
        return Err(Error::EmptySet("validation nodes"));
    }
    if teacher.nrows() != n || teacher.ncols() != graph.num_classes() {
        return Err(Error::Dimension(format!(
            "teacher is {}×{}, graph has {n} nodes and {} classes",
            teacher.nrows(),
            teacher.ncols(),
            graph.num_classes()
        )));
    }
    let adj = normalize_adjacency(graph);
    let target = if cfg.loss.transforms_student() { teacher.clone() } else { prepare_target(teacher, &adj, cfg, split)? };
    let kd_rows = if split.is_production() { split.observed(n) } else { (0..n).collect() };
    let objective = StudentObjective {
        variant: cfg.loss,
        target: &target,
        adj: &adj,
        labels: graph.labels(),
        gamma: cfg.gamma,
        alpha: cfg.alpha,
        floor: cfg.floor,
        temperature: cfg.temperature,
        direction: cfg.kl_direction,
    };
    let mut dims = vec![graph.feature_dim()];
    dims.extend_from_slice(&cfg.hidden);
    dims.push(graph.num_classes());
    let model = MlpModel::new(&dims, cfg.train.dropout, &mut stream_rng(cfg.train.seed, Stream::Init))?;
    let x = graph.features().view();
    let train_set: HashSet<usize> = split.train.iter().copied().collect();

    let (model, report) = fit(
        model,
        &cfg.train,
        |m, adam, rngs| {
            let batches = batches(&kd_rows, &cfg.train, &mut rngs.batches);
            let mut total = 0.0;
            for rows in &batches {
                let ce_rows: Vec<usize> = if batches.len() == 1 {
                    split.train.clone()
                } else {
                    rows.iter().copied().filter(|i| train_set.contains(i)).collect()
                };
                let (logits, tape) = m.forward_train(x, Some(&mut rngs.dropout))?;
                let (loss, g) = objective.loss_and_grad(logits.view(), rows, &ce_rows)?;
                let (grads, _) = m.backward(&tape, g.view());
                adam.step(m, &grads)?;
                total += loss.as_f64();
            }
            Ok(total / batches.len() as f64)
        },
        |m| {
            let logits = m.forward(x)?;
            let probs = softmax_rows(logits.view())?;
            let acc = accuracy(logits.view(), graph.labels(), &split.val)?;
            Ok((acc, laplacian_quadratic(&adj, probs.view())?.as_f64()))
        },
    )?;
    Ok(Student { model, report })
}
