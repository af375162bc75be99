//! Dataset loading, index splits and synthetic graph generators.

mod chains;
mod homophily;

pub use chains::{gen_chains, ChainsConfig, ChainsData};
pub use homophily::{gen_homophily_regular, HomophilyConfig};

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{load_bundle, Graph};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

/// Reads a graph bundle directory (see [`crate::graph::load_bundle`]).
pub fn load_dataset<T: Scalar>(dir: impl AsRef<Path>) -> Result<Graph<T>> {
    load_bundle(dir)
}

/// Node index sets. `obs` and `ind` partition `test` in production mode and
/// are empty otherwise. All lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    #[serde(default)]
    pub obs: Vec<usize>,
    #[serde(default)]
    pub ind: Vec<usize>,
}

impl SplitSpec {
    pub fn is_production(&self) -> bool {
        !self.ind.is_empty()
    }

    /// Nodes whose features and edges are visible during training.
    pub fn observed(&self, num_nodes: usize) -> Vec<usize> {
        let ind: BTreeSet<_> = self.ind.iter().copied().collect();
        (0..num_nodes).filter(|i| !ind.contains(i)).collect()
    }

    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for set in [&self.train, &self.val, &self.test] {
            for &i in set {
                if i >= num_nodes {
                    return Err(Error::NodeOutOfRange { index: i, num_nodes });
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::OverlappingSets(i));
                }
            }
        }
        if self.train.is_empty() {
            return Err(Error::EmptySet("training nodes"));
        }
        if self.is_production() || !self.obs.is_empty() {
            let mut joined: Vec<usize> = self.obs.iter().chain(&self.ind).copied().collect();
            joined.sort_unstable();
            let mut test = self.test.clone();
            test.sort_unstable();
            if joined != test {
                return Err(Error::InvalidParameter("observed and inductive sets must partition the test set".into()));
            }
        }
        Ok(())
    }
}

/// Per class, draws `per_class_train` training and `per_class_val`
/// validation nodes uniformly without replacement; the rest are test nodes.
pub fn make_split<T: Scalar>(
    graph: &Graph<T>,
    per_class_train: usize,
    per_class_val: usize,
    seed: u64,
) -> Result<SplitSpec> {
    let mut rng = stream_rng(seed, Stream::Split);
    let mut split = SplitSpec::default();
    let need = per_class_train + per_class_val;
    for class in 0..graph.num_classes() {
        let mut members: Vec<usize> = (0..graph.num_nodes()).filter(|&i| graph.labels()[i] == class).collect();
        if members.len() < need {
            return Err(Error::ClassTooSmall { class, available: members.len(), required: need });
        }
        members.shuffle(&mut rng);
        split.train.extend_from_slice(&members[..per_class_train]);
        split.val.extend_from_slice(&members[per_class_train..need]);
        split.test.extend_from_slice(&members[need..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Holds out `ind_fraction` of the test nodes as unseen nodes and removes
/// every edge joining them to the rest of the graph.
pub fn make_production_split<T: Scalar>(
    graph: &Graph<T>,
    split: &SplitSpec,
    ind_fraction: f64,
    seed: u64,
) -> Result<(Graph<T>, SplitSpec)> {
    if !(ind_fraction > 0.0 && ind_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("inductive fraction {ind_fraction} outside (0, 1)")));
    }
    split.validate(graph.num_nodes())?;
    if split.is_production() {
        return Err(Error::InvalidParameter("split is already in production mode".into()));
    }
    let count = (ind_fraction * split.test.len() as f64).round() as usize;
    if count == 0 || count >= split.test.len() {
        return Err(Error::InvalidParameter(format!(
            "inductive fraction {ind_fraction} of {} test nodes leaves an empty side",
            split.test.len()
        )));
    }
    let mut rng = stream_rng(seed, Stream::Holdout);
    let mut test = split.test.clone();
    test.shuffle(&mut rng);
    let mut ind = test[..count].to_vec();
    let mut obs = test[count..].to_vec();
    ind.sort_unstable();
    obs.sort_unstable();
    let out = SplitSpec { obs, ind, ..split.clone() };
    let observed = out.observed(graph.num_nodes());
    let cut = graph.remove_cross_edges(&observed, &out.ind)?;
    Ok((cut, out))
}
