use ndarray::Array2;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SplitSpec;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

/// Disjoint paths whose first node carries the class as a one-hot feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainsConfig {
    pub num_chains: usize,
    pub length: usize,
    pub num_classes: usize,
    /// Extra feature columns of i.i.d. Gaussian noise on every node. With the
    /// default of zero, all non-base rows are exactly zero.
    pub noise_dims: usize,
    pub noise_scale: f64,
}

impl Default for ChainsConfig {
    fn default() -> Self {
        ChainsConfig { num_chains: 30, length: 8, num_classes: 10, noise_dims: 0, noise_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainsData<T> {
    pub graph: Graph<T>,
    /// Train = base nodes, validation = the hop-1 node of each chain,
    /// test = everything else.
    pub split: SplitSpec,
    /// Nodes more than two hops from their chain's base node.
    pub far_nodes: Vec<usize>,
    /// Hop distance from the base node, per node.
    pub hops: Vec<usize>,
}

pub fn gen_chains<T: Scalar>(config: &ChainsConfig, seed: u64) -> Result<ChainsData<T>> {
    let &ChainsConfig { num_chains, length, num_classes, noise_dims, noise_scale } = config;
    if num_classes == 0 || num_chains == 0 || num_chains % num_classes != 0 {
        return Err(Error::InvalidParameter(format!(
            "{num_chains} chains cannot be split evenly over {num_classes} classes"
        )));
    }
    if length < 2 {
        return Err(Error::InvalidParameter("chains need at least two nodes".into()));
    }
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise scale {noise_scale}")));
    }
    let n = num_chains * length;
    let mut features = Array2::zeros((n, num_classes + noise_dims));
    let mut labels = Vec::with_capacity(n);
    let mut hops = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(num_chains * (length - 1));
    let mut split = SplitSpec::default();
    let mut far_nodes = Vec::new();
    for chain in 0..num_chains {
        let class = chain % num_classes;
        let base = chain * length;
        features[[base, class]] = T::one();
        for hop in 0..length {
            let node = base + hop;
            labels.push(class);
            hops.push(hop);
            if hop > 0 {
                edges.push((node - 1, node));
            }
            match hop {
                0 => split.train.push(node),
                1 => split.val.push(node),
                _ => split.test.push(node),
            }
            if hop > 2 {
                far_nodes.push(node);
            }
        }
    }
    if noise_dims > 0 {
        let normal = Normal::new(0.0, noise_scale).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = stream_rng(seed, Stream::Features);
        for i in 0..n {
            for k in 0..noise_dims {
                features[[i, num_classes + k]] = T::lit(normal.sample(&mut rng));
            }
        }
    }
    let (graph, _) = Graph::build(n, &edges, features, labels, num_classes)?;
    Ok(ChainsData { graph, split, far_nodes, hops })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_chain() {
        let cfg = ChainsConfig { num_chains: 1, length: 3, num_classes: 1, ..ChainsConfig::default() };
        let d = gen_chains::<f64>(&cfg, 0).unwrap();
        assert_eq!(d.graph.num_nodes(), 3);
        assert_eq!(d.graph.num_edges(), 2);
        assert_eq!(d.graph.features().row(0).to_vec(), vec![1.0]);
        assert!(d.far_nodes.is_empty());
    }

    #[test]
    fn default_counts_and_features() {
        let d = gen_chains::<f64>(&ChainsConfig::default(), 0).unwrap();
        assert_eq!(d.graph.num_nodes(), 240);
        assert_eq!(d.graph.num_edges(), 210);
        assert_eq!(d.far_nodes.len(), 30 * 5);
        assert_eq!(d.split.train.len(), 30);
        d.split.validate(240).unwrap();
        for i in 0..240 {
            let row = d.graph.features().row(i);
            if d.hops[i] == 0 {
                let mut onehot = vec![0.0; 10];
                onehot[d.graph.labels()[i]] = 1.0;
                assert_eq!(row.to_vec(), onehot);
            } else {
                assert!(row.iter().all(|&v| v == 0.0));
            }
            assert_eq!(d.graph.labels()[i], d.graph.labels()[i - d.hops[i]]);
        }
    }

    #[test]
    fn noise_block_leaves_class_block_exact() {
        let cfg = ChainsConfig { noise_dims: 4, noise_scale: 0.5, ..ChainsConfig::default() };
        let d = gen_chains::<f64>(&cfg, 7).unwrap();
        assert_eq!(d.graph.feature_dim(), 14);
        for i in 0..240 {
            let class_block = d.graph.features().row(i).slice(ndarray::s![..10]).to_vec();
            assert_eq!(class_block.iter().sum::<f64>(), if d.hops[i] == 0 { 1.0 } else { 0.0 });
        }
        assert_eq!(d, gen_chains::<f64>(&cfg, 7).unwrap());
    }

    #[test]
    fn divisibility_is_checked() {
        let cfg = ChainsConfig { num_chains: 7, num_classes: 3, ..ChainsConfig::default() };
        assert!(gen_chains::<f64>(&cfg, 0).is_err());
    }
}
