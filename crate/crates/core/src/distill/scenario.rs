use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::evaluate;
use crate::data::{make_production_split, SplitSpec};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::MlpModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Transductive,
    Production,
}

/// What training is allowed to see.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData<T> {
    /// In production mode: edges to unseen nodes removed and their feature
    /// rows zeroed, so nothing about them can leak into training.
    pub train_graph: Graph<T>,
    pub split: SplitSpec,
}

pub fn prepare_scenario<T: Scalar>(
    graph: &Graph<T>,
    split: &SplitSpec,
    scenario: Scenario,
    ind_fraction: f64,
    seed: u64,
) -> Result<ScenarioData<T>> {
    match scenario {
        Scenario::Transductive => Ok(ScenarioData { train_graph: graph.clone(), split: split.clone() }),
        Scenario::Production => {
            let (cut, split) = make_production_split(graph, split, ind_fraction, seed)?;
            let mut x = cut.features().clone();
            for &i in &split.ind {
                x.row_mut(i).fill(T::zero());
            }
            Ok(ScenarioData { train_graph: cut.with_features(x)?, split })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentScores {
    /// Accuracy on the test nodes, or on the observed test nodes in production mode.
    pub transductive: f64,
    pub inductive: Option<f64>,
    pub production: Option<f64>,
}

/// Scores a student from feature rows alone. `features` must hold the true
/// features of every node, including unseen ones.
pub fn evaluate_student<T: Scalar>(
    model: &MlpModel<T>,
    features: ArrayView2<'_, T>,
    labels: &[usize],
    split: &SplitSpec,
) -> Result<StudentScores> {
    if split.is_production() {
        let tran = evaluate(model, features, labels, &split.obs)?;
        let ind = evaluate(model, features, labels, &split.ind)?;
        Ok(StudentScores { transductive: tran, inductive: Some(ind), production: Some(production_eval(tran, ind)?) })
    } else {
        Ok(StudentScores { transductive: evaluate(model, features, labels, &split.test)?, inductive: None, production: None })
    }
}

/// `0.8 · transductive + 0.2 · inductive`, evaluated as
/// `ind + 0.8 · (tran − ind)` so equal inputs come back unchanged.
pub fn production_eval(tran_acc: f64, ind_acc: f64) -> Result<f64> {
    for v in [tran_acc, ind_acc] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("accuracy {v} outside [0, 1]")));
        }
    }
    Ok(ind_acc + 0.8 * (tran_acc - ind_acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn production_score() {
        assert_eq!(production_eval(0.8, 0.7).unwrap(), 0.78);
        assert_eq!(production_eval(0.6, 0.6).unwrap(), 0.6);
        assert_eq!(production_eval(1.0, 0.0).unwrap(), 0.8);
        assert!(production_eval(1.2, 0.0).is_err());
    }
}
