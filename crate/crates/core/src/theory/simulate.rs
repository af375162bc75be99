use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{correction_interval, TheoryParams};
use crate::data::{gen_homophily_regular, HomophilyConfig};
use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, Graph};
use crate::prob::ProbMatrix;
use crate::propagation::propagate_recursive;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub node: usize,
    /// Row of the node after one propagation step.
    pub row: Vec<f64>,
    pub corrected: bool,
}

/// Builds the regular homophily graph for `tp` and runs one trial on it.
pub fn simulate_correction(num_nodes: usize, tp: &TheoryParams, seed: u64) -> Result<Trial> {
    let cfg = HomophilyConfig {
        num_nodes,
        degree: tp.degree,
        homophily: tp.h,
        num_classes: tp.num_classes,
        feature_dim: 1,
        signal: 0.0,
        ..HomophilyConfig::default()
    };
    let graph = gen_homophily_regular::<f64>(&cfg, seed)?;
    simulate_on_graph(&graph, tp, seed)
}

/// Synthetic teacher rows on `graph`: confidence `p` on the true class, a
/// random `round(ε(|V|−1))` of the other nodes moved to a uniformly drawn
/// wrong class, and the first class-0 node given mass `q` on class 0. Reports
/// whether that node's argmax is class 0 after one lazy propagation step.
pub fn simulate_on_graph(graph: &Graph<f64>, tp: &TheoryParams, seed: u64) -> Result<Trial> {
    tp.validate()?;
    let k = graph.num_classes();
    if k != tp.num_classes {
        return Err(Error::InvalidParameter(format!("graph has {k} classes, parameters {}", tp.num_classes)));
    }
    let n = graph.num_nodes();
    let node = graph
        .labels()
        .iter()
        .position(|&y| y == 0)
        .ok_or(Error::EmptySet("class-0 nodes"))?;
    let mut rng = stream_rng(seed, Stream::Simulation);
    let mut predicted = graph.labels().to_vec();
    let wrong = (tp.epsilon * (n - 1) as f64).round() as usize;
    let others: Vec<usize> = (0..n).filter(|&i| i != node).collect();
    for pick in sample(&mut rng, others.len(), wrong) {
        let i = others[pick];
        let shift = rng.random_range(1..k);
        predicted[i] = (predicted[i] + shift) % k;
    }
    let rest = (1.0 - tp.p) / (k - 1) as f64;
    let mut p = Array2::from_elem((n, k), rest);
    for (i, &c) in predicted.iter().enumerate() {
        p[[i, c]] = tp.p;
    }
    p.row_mut(node).fill((1.0 - tp.q) / (k - 1) as f64);
    p[[node, 0]] = tp.q;
    let out = propagate_recursive(&ProbMatrix::new(p)?, &normalize_adjacency(graph), tp.gamma, 1)?;
    let row = out.as_array().row(node).to_vec();
    let corrected = out.argmax()[node] == 0;
    Ok(Trial { node, row, corrected })
}

/// Settings for locating the empirical correction threshold in `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrontierGrid {
    pub num_classes: usize,
    pub num_nodes: usize,
    pub degree: usize,
    pub h: Vec<f64>,
    pub p: Vec<f64>,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// `q` is scanned at `k/(q_steps·|Y|)`.
    pub q_steps: usize,
    pub seeds: Vec<u64>,
}

impl Default for FrontierGrid {
    fn default() -> Self {
        FrontierGrid {
            num_classes: 3,
            num_nodes: 600,
            degree: 40,
            h: vec![0.8, 0.9, 1.0],
            p: vec![0.8, 0.95],
            gamma: vec![0.3, 0.5],
            epsilon: vec![0.0, 0.05, 0.1],
            q_steps: 20,
            seeds: (0..9).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierCell {
    pub h: f64,
    pub p: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Smallest scanned `q` from which a majority of seeds is corrected at
    /// every larger scanned `q`; `1/|Y|` if none.
    pub frontier: f64,
    pub q_lo: f64,
    pub cell_width: f64,
}

impl FrontierCell {
    /// Grid index of the empirical frontier versus the first grid point at or
    /// above the interval's lower end.
    pub fn cell_offset(&self) -> i64 {
        let predicted = (self.q_lo / self.cell_width - 1e-9).ceil() as i64;
        let observed = (self.frontier / self.cell_width).round() as i64;
        observed - predicted
    }

    pub fn within_one_cell(&self) -> bool {
        self.cell_offset().abs() <= 1
    }
}

pub fn frontier_scan(grid: &FrontierGrid) -> Result<Vec<FrontierCell>> {
    if grid.seeds.is_empty() || grid.q_steps == 0 {
        return Err(Error::InvalidParameter("frontier scan needs seeds and q steps".into()));
    }
    let y = grid.num_classes;
    let width = 1.0 / (grid.q_steps * y) as f64;
    let qs: Vec<f64> = (0..grid.q_steps).map(|k| k as f64 * width).collect();
    let mut cells = Vec::new();
    for &h in &grid.h {
        let graphs = grid
            .seeds
            .iter()
            .map(|&s| {
                let cfg = HomophilyConfig {
                    num_nodes: grid.num_nodes,
                    degree: grid.degree,
                    homophily: h,
                    num_classes: y,
                    feature_dim: 1,
                    signal: 0.0,
                    ..HomophilyConfig::default()
                };
                gen_homophily_regular::<f64>(&cfg, s)
            })
            .collect::<Result<Vec<_>>>()?;
        for &p in &grid.p {
            for &gamma in &grid.gamma {
                for &epsilon in &grid.epsilon {
                    let mut majority = Vec::with_capacity(qs.len());
                    for &q in &qs {
                        let tp = TheoryParams { num_classes: y, h, p, q, gamma, epsilon, degree: grid.degree };
                        let mut votes = 0;
                        for (g, &s) in graphs.iter().zip(&grid.seeds) {
                            votes += usize::from(simulate_on_graph(g, &tp, s)?.corrected);
                        }
                        majority.push(2 * votes > grid.seeds.len());
                    }
                    let first = majority.iter().rposition(|&c| !c).map_or(0, |k| k + 1);
                    let frontier = if first == qs.len() { 1.0 / y as f64 } else { qs[first] };
                    let q_lo = correction_interval(y, h, p, gamma, epsilon)?.lo;
                    cells.push(FrontierCell { h, p, gamma, epsilon, frontier, q_lo, cell_width: width });
                }
            }
        }
    }
    Ok(cells)
}
