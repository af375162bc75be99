//! Random inputs and dense reference implementations shared by the
//! integration tests. The references work from the raw edge list with plain
//! loops and never call the library's sparse kernels.
#![allow(dead_code)]

use ndarray::Array2;
use propdistill::{Graph, ProbMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi style graph on `n` nodes with edge probability `p`.
pub fn random_graph(n: usize, p: f64, classes: usize, rng: &mut ChaCha8Rng) -> Graph<f64> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let features = Array2::from_shape_simple_fn((n, 3), || rng.random_range(-1.0..1.0));
    Graph::build(n, &edges, features, labels, classes).unwrap().0
}

pub fn random_probs(n: usize, k: usize, rng: &mut ChaCha8Rng) -> ProbMatrix<f64> {
    let mut m = Array2::from_shape_simple_fn((n, k), || rng.random_range(0.01..1.0));
    for mut row in m.outer_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    ProbMatrix::new(m).unwrap()
}

/// `D^{-1/2} A D^{-1/2}` from the edge list.
pub fn dense_norm_adj(g: &Graph<f64>) -> Array2<f64> {
    let n = g.num_nodes();
    let mut a = Array2::zeros((n, n));
    for &(u, v) in g.edges() {
        a[[u, v]] = 1.0;
        a[[v, u]] = 1.0;
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    for i in 0..n {
        for j in 0..n {
            if a[[i, j]] != 0.0 {
                a[[i, j]] /= (deg[i] * deg[j]).sqrt();
            }
        }
    }
    a
}

pub fn matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (n, m, k) = (a.nrows(), a.ncols(), b.ncols());
    assert_eq!(m, b.nrows());
    let mut out = Array2::zeros((n, k));
    for i in 0..n {
        for j in 0..k {
            let mut s = 0.0;
            for l in 0..m {
                s += a[[i, l]] * b[[l, j]];
            }
            out[[i, j]] = s;
        }
    }
    out
}

/// Divides rows by their sums; zero-sum rows are taken from `fallback`.
pub fn renormalize(mut m: Array2<f64>, fallback: &Array2<f64>) -> Array2<f64> {
    for i in 0..m.nrows() {
        let s: f64 = m.row(i).sum();
        if s > 0.0 {
            m.row_mut(i).mapv_inplace(|v| v / s);
        } else {
            m.row_mut(i).assign(&fallback.row(i));
        }
    }
    m
}

/// One lazy step per iteration with optional row pinning, dense.
pub fn lazy_oracle(a: &Array2<f64>, p: &Array2<f64>, gamma: f64, steps: usize, fixed: &[usize]) -> Array2<f64> {
    let mut cur = p.clone();
    for _ in 0..steps {
        let mut next = matmul(a, &cur) * gamma + &cur * (1.0 - gamma);
        for &j in fixed {
            next.row_mut(j).assign(&p.row(j));
        }
        cur = next;
    }
    renormalize(cur, p)
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
