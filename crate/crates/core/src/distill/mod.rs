//! Teacher training, student distillation and evaluation.

mod config;
mod fit;
mod objective;
mod report;
mod scenario;
mod student;
mod teacher;

pub use config::{DistillConfig, LossVariant, TeacherArch, TeacherConfig, TrainConfig};
pub use objective::StudentObjective;
pub use report::{EpochRecord, TrainReport};
pub use scenario::{evaluate_student, prepare_scenario, production_eval, Scenario, ScenarioData, StudentScores};
pub use student::{distill_student, prepare_target, Student};
pub use teacher::{train_teacher, Teacher, TeacherModel};

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::nn::MlpModel;
use crate::prob::argmax_rows;
use crate::scalar::Scalar;

/// Fraction of `idx` whose row-wise argmax (lowest index on ties) equals the label.
pub fn accuracy<T: Scalar>(scores: ArrayView2<'_, T>, labels: &[usize], idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::EmptySet("evaluation nodes"));
    }
    if let Some(&index) = idx.iter().find(|&&i| i >= scores.nrows() || i >= labels.len()) {
        return Err(Error::NodeOutOfRange { index, num_nodes: scores.nrows() });
    }
    let pred = argmax_rows(scores);
    let hits = idx.iter().filter(|&&i| pred[i] == labels[i]).count();
    Ok(hits as f64 / idx.len() as f64)
}

/// Accuracy of an MLP on feature rows alone; no graph is involved.
pub fn evaluate<T: Scalar>(model: &MlpModel<T>, x: ArrayView2<'_, T>, labels: &[usize], idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::EmptySet("evaluation nodes"));
    }
    let rows = x.select(ndarray::Axis(0), idx);
    let logits = model.forward(rows.view())?;
    let local: Vec<usize> = (0..idx.len()).collect();
    let picked: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
    accuracy(logits.view(), &picked, &local)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Linear;
    use ndarray::{array, Array1, Array2};

    #[test]
    fn accuracy_examples() {
        let scores = array![[1.0, 0.0], [0.0, 1.0], [0.3, 0.3], [0.9, 0.1], [0.2, 0.8]];
        let labels = [0, 1, 1, 1, 1];
        // hand count: rows 0, 1, 4 correct; row 2 ties to class 0; row 3 wrong
        assert_eq!(accuracy(scores.view(), &labels, &[0, 1, 2, 3, 4]).unwrap(), 0.6);
        assert_eq!(accuracy(scores.view(), &labels, &[0, 1]).unwrap(), 1.0);
        assert!(accuracy(scores.view(), &labels, &[]).is_err());
    }

    #[test]
    fn constant_model_scores_one_half() {
        let model = MlpModel::from_layers(vec![Linear { weight: Array2::zeros((2, 2)), bias: Array1::zeros(2) }], 0.0)
            .unwrap();
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]];
        assert_eq!(evaluate(&model, x.view(), &[0, 1, 0, 1], &[0, 1, 2, 3]).unwrap(), 0.5);
    }
}
