mod common;

use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use propdistill::data::{gen_homophily_regular, HomophilyConfig};
use propdistill::graph::{laplacian_quadratic, normalize_adjacency, spmm};
use propdistill::propagation::{
    clamp_renormalize, conv_operator, inverse_operator, lazy_walk, ppr_exact, propagate_recursive,
    propagate_recursive_fix,
};
use propdistill::ProbMatrix;

fn graph_and_probs(seed: u64, max_n: usize) -> (propdistill::Graph<f64>, ProbMatrix<f64>) {
    let mut r = rng(seed);
    let n = 2 + (seed as usize * 7919) % (max_n - 1);
    let p = [0.05, 0.1, 0.3][seed as usize % 3];
    let g = random_graph(n, p, 3, &mut r);
    let probs = random_probs(n, 3, &mut r);
    (g, probs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spmm_matches_dense(seed in 0u64..10_000) {
        let (g, p) = graph_and_probs(seed, 50);
        let got = spmm(&normalize_adjacency(&g), p.view()).unwrap();
        let want = matmul(&dense_norm_adj(&g), p.as_array());
        prop_assert!(max_abs_diff(&got, &want) < 1e-12);
    }

    #[test]
    fn recursive_matches_dense(seed in 0u64..10_000, gamma in 0.05f64..1.0, steps in 1usize..12) {
        let (g, p) = graph_and_probs(seed, 50);
        let got = propagate_recursive(&p, &normalize_adjacency(&g), gamma, steps).unwrap();
        let want = lazy_oracle(&dense_norm_adj(&g), p.as_array(), gamma, steps, &[]);
        prop_assert!(max_abs_diff(got.as_array(), &want) < 1e-10);
    }

    #[test]
    fn recursive_fix_matches_dense(seed in 0u64..10_000, gamma in 0.05f64..1.0, steps in 1usize..12) {
        let (g, p) = graph_and_probs(seed, 50);
        let fixed: Vec<usize> = (0..g.num_nodes()).step_by(3).collect();
        let got = propagate_recursive_fix(&p, &normalize_adjacency(&g), gamma, steps, &fixed).unwrap();
        let want = lazy_oracle(&dense_norm_adj(&g), p.as_array(), gamma, steps, &fixed);
        prop_assert!(max_abs_diff(got.as_array(), &want) < 1e-10);
        for &j in &fixed {
            prop_assert_eq!(got.as_array().row(j), p.as_array().row(j));
        }
    }

    #[test]
    fn inverse_and_conv_match_dense(seed in 0u64..10_000, gamma in 0.0f64..1.0) {
        let (g, p) = graph_and_probs(seed, 50);
        let adj = normalize_adjacency(&g);
        let a = dense_norm_adj(&g);
        let ap = matmul(&a, p.as_array());
        let inv = p.as_array() * 2.0 - &ap * gamma;
        prop_assert!(max_abs_diff(&inverse_operator(&p, &adj, gamma).unwrap(), &inv) < 1e-12);
        prop_assert!(max_abs_diff(&conv_operator(&p, &adj).unwrap(), &ap) < 1e-12);
    }

    #[test]
    fn clamp_renormalize_is_stochastic(seed in 0u64..10_000, gamma in 0.0f64..1.0) {
        let (g, p) = graph_and_probs(seed, 50);
        let raw = inverse_operator(&p, &normalize_adjacency(&g), gamma).unwrap();
        let q = clamp_renormalize(raw.view(), 1e-8);
        for row in q.as_array().outer_iter() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn laplacian_quadratic_is_nonnegative(seed in 0u64..10_000) {
        let (g, p) = graph_and_probs(seed, 50);
        let adj = normalize_adjacency(&g);
        prop_assert!(laplacian_quadratic(&adj, p.view()).unwrap() >= -1e-12);
        // Dense oracle: sum over edges of ‖f_u/√d_u − f_v/√d_v‖², plus ‖f_i‖² on isolated nodes.
        let d = g.degrees();
        let f = p.as_array();
        let mut want = 0.0;
        for &(u, v) in g.edges() {
            for c in 0..f.ncols() {
                let diff = f[[u, c]] / (d[u] as f64).sqrt() - f[[v, c]] / (d[v] as f64).sqrt();
                want += diff * diff;
            }
        }
        for i in 0..g.num_nodes() {
            if d[i] == 0 {
                want += f.row(i).dot(&f.row(i));
            }
        }
        let got = laplacian_quadratic(&adj, p.view()).unwrap();
        prop_assert!((got - want).abs() < 1e-10 * want.max(1.0));
    }

    #[test]
    fn remove_cross_edges_is_idempotent(seed in 0u64..10_000) {
        let (g, _) = graph_and_probs(seed, 50);
        let n = g.num_nodes();
        let a: Vec<usize> = (0..n).filter(|i| i % 3 == 0).collect();
        let b: Vec<usize> = (0..n).filter(|i| i % 3 == 1).collect();
        let once = g.remove_cross_edges(&a, &b).unwrap();
        let twice = once.remove_cross_edges(&a, &b).unwrap();
        prop_assert_eq!(once.edges(), twice.edges());
        for &(u, v) in once.edges() {
            prop_assert!(!(a.contains(&u) && b.contains(&v)) && !(a.contains(&v) && b.contains(&u)));
        }
    }
}

#[test]
fn sqrt_degree_vector_is_in_laplacian_kernel() {
    let mut r = rng(3);
    let g = random_graph(30, 0.2, 2, &mut r);
    let f = Array2::from_shape_fn((30, 1), |(i, _)| (g.degree(i) as f64).sqrt());
    assert!(laplacian_quadratic(&normalize_adjacency(&g), f.view()).unwrap().abs() < 1e-12);
}

/// Double-precision floor added to the series tail bound; `2·0.5^201` alone is
/// far below what a dense solve can resolve.
const SOLVE_ROUNDING: f64 = 1e-12;

#[test]
fn ppr_matches_neumann_series() {
    for seed in 0..20u64 {
        let mut r = rng(100 + seed);
        let g = random_graph(20, 0.2, 2, &mut r);
        let h = random_probs(20, 2, &mut r).into_inner();
        let a = dense_norm_adj(&g);
        for gamma in [0.5, 0.9] {
            let k = 200;
            let mut term = h.clone();
            let mut sum = h.clone();
            for _ in 0..k {
                term = matmul(&a, &term) * gamma;
                sum += &term;
            }
            sum *= 1.0 - gamma;
            let exact = ppr_exact(h.view(), &normalize_adjacency(&g), gamma).unwrap();
            let bound = 2.0 * gamma.powi(k as i32 + 1) + SOLVE_ROUNDING;
            assert!(max_abs_diff(&exact, &sum) <= bound, "seed {seed} γ {gamma}");
        }
    }
}

#[test]
fn regular_graph_conserves_row_sums() {
    let cfg = HomophilyConfig { num_nodes: 60, degree: 4, num_classes: 3, feature_dim: 1, ..Default::default() };
    let g = gen_homophily_regular::<f64>(&cfg, 1).unwrap();
    let adj = normalize_adjacency(&g);
    let p = random_probs(60, 3, &mut rng(4));
    let mut worst = 0.0f64;
    lazy_walk(&p, &adj, 0.7, 30, &[], |_, m| {
        for row in m.outer_iter() {
            worst = worst.max((row.sum() - 1.0).abs());
        }
    })
    .unwrap();
    assert!(worst < 1e-12, "row sums drifted by {worst}");
}

#[test]
fn fixed_rows_pinned_at_every_step() {
    let mut r = rng(5);
    let g = random_graph(25, 0.2, 2, &mut r);
    let p = random_probs(25, 2, &mut r);
    let fixed = [0, 4, 9, 24];
    let mut steps = 0;
    lazy_walk(&p, &normalize_adjacency(&g), 0.9, 15, &fixed, |_, m| {
        steps += 1;
        for &j in &fixed {
            assert_eq!(m.row(j), p.as_array().row(j));
        }
    })
    .unwrap();
    assert_eq!(steps, 15);
}
