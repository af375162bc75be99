use std::collections::HashMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

/// Regular graph where every node has exactly `round(h·d)` same-class
/// neighbors, with the remaining edges spread over the other classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomophilyConfig {
    pub num_nodes: usize,
    pub degree: usize,
    pub homophily: f64,
    pub num_classes: usize,
    /// Width of the class-conditional Gaussian features.
    pub feature_dim: usize,
    /// Scale of the class means relative to unit per-node noise.
    pub signal: f64,
    /// Swap attempts allowed for repairing loops and multi-edges.
    pub max_swaps: usize,
}

impl Default for HomophilyConfig {
    fn default() -> Self {
        HomophilyConfig {
            num_nodes: 2000,
            degree: 10,
            homophily: 0.8,
            num_classes: 5,
            feature_dim: 32,
            signal: 0.3,
            max_swaps: 1_000_000,
        }
    }
}

impl HomophilyConfig {
    pub fn same_class_degree(&self) -> usize {
        (self.homophily * self.degree as f64).round() as usize
    }
}

pub fn gen_homophily_regular<T: Scalar>(config: &HomophilyConfig, seed: u64) -> Result<Graph<T>> {
    let HomophilyConfig { num_nodes: n, degree: d, homophily: h, num_classes: k, .. } = *config;
    if k < 2 || n == 0 || n % k != 0 {
        return Err(Error::InvalidParameter(format!("{n} nodes cannot form {k} equal classes")));
    }
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::InvalidParameter(format!("homophily {h} outside [0, 1]")));
    }
    let per_class = n / k;
    let same = config.same_class_degree();
    let cross = d - same;
    if same >= per_class || (per_class * same) % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "no {same}-regular same-class block on {per_class} nodes"
        )));
    }
    if (per_class * cross) % (k - 1) != 0 || per_class * cross / (k - 1) > per_class * per_class {
        return Err(Error::InvalidParameter(format!(
            "{cross} cross-class edges per node cannot be spread evenly over {} classes of {per_class}",
            k - 1
        )));
    }

    let mut rng = stream_rng(seed, Stream::Generator);
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(&mut rng);
    let mut members = vec![Vec::with_capacity(per_class); k];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }

    let mut edges = Vec::with_capacity(n * d / 2);
    for class in &members {
        let mut stubs: Vec<usize> = class.iter().flat_map(|&v| std::iter::repeat_n(v, same)).collect();
        stubs.shuffle(&mut rng);
        let mut block: Vec<_> = stubs.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        repair(&mut block, config.max_swaps, &mut rng)?;
        edges.extend(block);
    }

    // Each node hands out its cross stubs round-robin over the other classes,
    // with one counter running through the whole class so every target class
    // receives the same number of stubs.
    let mut outgoing: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (c, class) in members.iter().enumerate() {
        let mut order = class.clone();
        order.shuffle(&mut rng);
        let mut slot = 0usize;
        for &v in &order {
            for _ in 0..cross {
                let offset = slot % (k - 1);
                let target = if offset < c { offset } else { offset + 1 };
                outgoing.entry((c, target)).or_default().push(v);
                slot += 1;
            }
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            let (Some(mut left), Some(mut right)) = (outgoing.remove(&(a, b)), outgoing.remove(&(b, a))) else {
                continue;
            };
            left.shuffle(&mut rng);
            right.shuffle(&mut rng);
            let mut block: Vec<_> = left.into_iter().zip(right).collect();
            repair(&mut block, config.max_swaps, &mut rng)?;
            edges.extend(block);
        }
    }

    let features = class_features(config, &labels, seed)?;
    let (graph, report) = Graph::build(n, &edges, features, labels, k)?;
    if report.dropped() != 0 {
        return Err(Error::Generator("repair left a loop or multi-edge".into()));
    }
    Ok(graph)
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Removes self-loops and parallel edges by swapping endpoints between edge
/// pairs, `(a, b), (c, d) → (a, d), (c, b)`. Degrees are preserved, as is the
/// side of each endpoint when the list is bipartite.
fn repair<R: Rng + ?Sized>(edges: &mut [(usize, usize)], budget: usize, rng: &mut R) -> Result<()> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for &(u, v) in edges.iter() {
        *count.entry(key(u, v)).or_default() += 1;
    }
    let bad = |e: (usize, usize), count: &HashMap<(usize, usize), usize>| e.0 == e.1 || count[&key(e.0, e.1)] > 1;
    let mut attempts = 0;
    loop {
        let pending: Vec<usize> = (0..edges.len()).filter(|&i| bad(edges[i], &count)).collect();
        if pending.is_empty() {
            return Ok(());
        }
        for i in pending {
            if !bad(edges[i], &count) {
                continue;
            }
            loop {
                attempts += 1;
                if attempts > budget {
                    return Err(Error::Generator(format!("could not remove multi-edges within {budget} swaps")));
                }
                let j = rng.random_range(0..edges.len());
                let ((a, b), (c, d)) = (edges[i], edges[j]);
                let (e1, e2) = ((a, d), (c, b));
                if i == j || e1.0 == e1.1 || e2.0 == e2.1 || key(e1.0, e1.1) == key(e2.0, e2.1) {
                    continue;
                }
                if count.get(&key(e1.0, e1.1)).is_some_and(|&n| n > 0)
                    || count.get(&key(e2.0, e2.1)).is_some_and(|&n| n > 0)
                {
                    continue;
                }
                for e in [(a, b), (c, d)] {
                    *count.get_mut(&key(e.0, e.1)).unwrap() -= 1;
                }
                for e in [e1, e2] {
                    *count.entry(key(e.0, e.1)).or_default() += 1;
                }
                edges[i] = e1;
                edges[j] = e2;
                break;
            }
        }
    }
}

/// `x_i = signal · μ_{y_i} + z_i` with standard normal means and noise.
fn class_features<T: Scalar>(config: &HomophilyConfig, labels: &[usize], seed: u64) -> Result<Array2<T>> {
    if !(config.signal >= 0.0 && config.signal.is_finite()) {
        return Err(Error::InvalidParameter(format!("feature signal {}", config.signal)));
    }
    let mut rng = stream_rng(seed, Stream::Features);
    let dim = config.feature_dim;
    let means = Array2::<f64>::from_shape_simple_fn((config.num_classes, dim), || rng.sample(StandardNormal));
    let mut x = Array2::zeros((labels.len(), dim));
    for (i, &y) in labels.iter().enumerate() {
        for c in 0..dim {
            let noise: f64 = rng.sample(StandardNormal);
            x[[i, c]] = T::lit(config.signal * means[[y, c]] + noise);
        }
    }
    Ok(x)
}
