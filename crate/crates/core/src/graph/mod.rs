//! Immutable undirected graph with node features and labels, plus the
//! normalized sparse adjacency built from it.

mod bundle;
mod csr;

pub use bundle::{load_bundle, save_bundle, BundleMeta};
pub use csr::{laplacian_quadratic, normalize_adjacency, normalize_adjacency_with, spmm, Csr, NormAdj, SelfLoops};

use std::collections::{BTreeSet, HashSet};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of input edges discarded while building a [`Graph`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub duplicates: usize,
    pub self_loops: usize,
}

impl BuildReport {
    pub fn dropped(&self) -> usize {
        self.duplicates + self.self_loops
    }
}

/// Undirected, unweighted graph. Edges are stored once as `(min, max)` pairs in
/// ascending order; self-loops are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T> {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    features: Array2<T>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl<T: Scalar> Graph<T> {
    /// Validates the inputs, drops duplicate edges and self-loops, and builds the
    /// neighbor index.
    pub fn build(
        num_nodes: usize,
        edges: &[(usize, usize)],
        features: Array2<T>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<(Self, BuildReport)> {
        if features.nrows() != num_nodes {
            return Err(Error::Dimension(format!(
                "features have {} rows for {num_nodes} nodes",
                features.nrows()
            )));
        }
        if labels.len() != num_nodes {
            return Err(Error::Dimension(format!(
                "{} labels for {num_nodes} nodes",
                labels.len()
            )));
        }
        if let Some((node, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::LabelOutOfRange { node, label, num_classes });
        }

        let mut report = BuildReport::default();
        let mut unique = BTreeSet::new();
        for &(u, v) in edges {
            for index in [u, v] {
                if index >= num_nodes {
                    return Err(Error::NodeOutOfRange { index, num_nodes });
                }
            }
            if u == v {
                report.self_loops += 1;
                continue;
            }
            if !unique.insert((u.min(v), u.max(v))) {
                report.duplicates += 1;
            }
        }
        if report.dropped() > 0 {
            log::warn!(
                "dropped {} duplicate edges and {} self-loops",
                report.duplicates,
                report.self_loops
            );
        }
        let graph = Self::from_canonical(num_nodes, unique.into_iter().collect(), features, labels, num_classes);
        Ok((graph, report))
    }

    fn from_canonical(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        features: Array2<T>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Self {
        let mut degree = vec![0usize; num_nodes];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..num_nodes].to_vec();
        let mut neighbors = vec![0usize; edges.len() * 2];
        // edges are sorted, so each neighbor list comes out ascending
        for &(u, v) in &edges {
            neighbors[cursor[u]] = v;
            cursor[u] += 1;
        }
        for &(u, v) in &edges {
            neighbors[cursor[v]] = u;
            cursor[v] += 1;
        }
        for i in 0..num_nodes {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Graph { num_nodes, edges, offsets, neighbors, features, labels, num_classes }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Canonical `(min, max)` edge list in ascending order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Array2<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|i| self.degree(i)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Fraction of edges whose endpoints share a label.
    pub fn edge_homophily(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        let same = self.edges.iter().filter(|&&(u, v)| self.labels[u] == self.labels[v]).count();
        same as f64 / self.edges.len() as f64
    }

    /// Row-normalized adjacency `D^{-1} A`; rows of isolated nodes are empty.
    pub fn mean_aggregator(&self) -> Csr<T> {
        let mut values = Vec::with_capacity(self.neighbors.len());
        for i in 0..self.num_nodes {
            let d = self.degree(i);
            if d > 0 {
                let w = T::one() / T::lit(d as f64);
                values.extend(std::iter::repeat_n(w, d));
            }
        }
        Csr::from_parts(self.num_nodes, self.num_nodes, self.offsets.clone(), self.neighbors.clone(), values)
            .expect("graph adjacency is a valid CSR pattern")
    }

    /// Copy of the graph without any edge joining `set_a` to `set_b`.
    pub fn remove_cross_edges(&self, set_a: &[usize], set_b: &[usize]) -> Result<Self> {
        let a = self.index_set(set_a)?;
        let b = self.index_set(set_b)?;
        if let Some(&shared) = a.intersection(&b).min() {
            return Err(Error::OverlappingSets(shared));
        }
        let crosses = |u: usize, v: usize| (a.contains(&u) && b.contains(&v)) || (a.contains(&v) && b.contains(&u));
        let edges: Vec<_> = self.edges.iter().copied().filter(|&(u, v)| !crosses(u, v)).collect();
        Ok(Self::from_canonical(
            self.num_nodes,
            edges,
            self.features.clone(),
            self.labels.clone(),
            self.num_classes,
        ))
    }

    /// Same topology and labels with replaced node features.
    pub fn with_features(&self, features: Array2<T>) -> Result<Self> {
        if features.nrows() != self.num_nodes {
            return Err(Error::Dimension(format!(
                "features have {} rows for {} nodes",
                features.nrows(),
                self.num_nodes
            )));
        }
        let mut g = self.clone();
        g.features = features;
        Ok(g)
    }

    fn index_set(&self, idx: &[usize]) -> Result<HashSet<usize>> {
        idx.iter()
            .map(|&i| {
                if i < self.num_nodes {
                    Ok(i)
                } else {
                    Err(Error::NodeOutOfRange { index: i, num_nodes: self.num_nodes })
                }
            })
            .collect()
    }
}
