use ndarray::Array2;
use propdistill::data::{gen_homophily_regular, HomophilyConfig};
use propdistill::distill::{LossVariant, StudentObjective};
use propdistill::graph::normalize_adjacency;
use propdistill::nn::{
    grad_check, loss_cross_entropy, softmax_rows, AppnpModel, KlDirection, MlpModel, SageModel,
};
use propdistill::propagation::propagate_recursive;
use propdistill::{Graph, ProbMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;

fn small_graph(seed: u64) -> Graph<f64> {
    let cfg = HomophilyConfig {
        num_nodes: 16,
        degree: 3,
        homophily: 2.0 / 3.0,
        num_classes: 2,
        feature_dim: 5,
        signal: 1.0,
        ..HomophilyConfig::default()
    };
    gen_homophily_regular(&cfg, seed).unwrap()
}

fn random_probs(n: usize, k: usize, seed: u64) -> ProbMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logits = Array2::from_shape_simple_fn((n, k), || rand::Rng::random_range(&mut rng, -2.0..2.0));
    softmax_rows(logits.view()).unwrap()
}

#[test]
fn mlp_cross_entropy() {
    let g = small_graph(0);
    let x = g.features().view();
    let idx: Vec<usize> = (0..8).collect();
    let mut model = MlpModel::<f64>::new(&[5, 7, 2], 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let (logits, tape) = model.forward_train::<ChaCha8Rng>(x, None).unwrap();
    let (_, g_out) = loss_cross_entropy(logits.view(), g.labels(), &idx).unwrap();
    let (grads, _) = model.backward(&tape, g_out.view());
    let report = grad_check(&mut model, &grads, 200, 0, |m| {
        loss_cross_entropy(m.forward(x).unwrap().view(), g.labels(), &idx).unwrap().0
    });
    assert!(report.max_rel_error < TOL, "{report:?}");
}

#[test]
fn mlp_student_objective_every_variant() {
    let g = small_graph(2);
    let adj = normalize_adjacency(&g);
    let x = g.features().view();
    let teacher = random_probs(16, 2, 3);
    let pnd = propagate_recursive(&teacher, &adj, 0.7, 4).unwrap();
    let rows: Vec<usize> = (0..16).collect();
    let ce: Vec<usize> = vec![0, 5, 9];
    for variant in LossVariant::ALL {
        for direction in [KlDirection::TargetToPred, KlDirection::PredToTarget] {
            let target = if variant == LossVariant::Pnd { &pnd } else { &teacher };
            let obj = StudentObjective {
                variant,
                target,
                adj: &adj,
                labels: g.labels(),
                gamma: 0.7,
                alpha: 0.3,
                floor: 1e-8,
                temperature: 1.5,
                direction,
            };
            let mut model = MlpModel::<f64>::new(&[5, 6, 2], 0.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
            let (logits, tape) = model.forward_train::<ChaCha8Rng>(x, None).unwrap();
            let (_, g_out) = obj.loss_and_grad(logits.view(), &rows, &ce).unwrap();
            let (grads, _) = model.backward(&tape, g_out.view());
            let report = grad_check(&mut model, &grads, 200, 1, |m| {
                obj.loss_and_grad(m.forward(x).unwrap().view(), &rows, &ce).unwrap().0
            });
            assert!(report.max_rel_error < TOL, "{variant:?} {direction:?} {report:?}");
        }
    }
}

#[test]
fn sage_cross_entropy() {
    let g = small_graph(5);
    let agg = g.mean_aggregator();
    let x = g.features().view();
    let idx: Vec<usize> = (0..16).step_by(2).collect();
    let mut model = SageModel::<f64>::new(5, 6, 2, 0.0, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    let (logits, tape) = model.forward_train::<ChaCha8Rng>(x, &agg, None).unwrap();
    let (_, g_out) = loss_cross_entropy(logits.view(), g.labels(), &idx).unwrap();
    let grads = model.backward(&tape, &agg, g_out.view()).unwrap();
    let report = grad_check(&mut model, &grads, 300, 2, |m| {
        loss_cross_entropy(m.forward(&g).unwrap().view(), g.labels(), &idx).unwrap().0
    });
    assert!(report.max_rel_error < TOL, "{report:?}");
}

#[test]
fn appnp_cross_entropy() {
    let g = small_graph(7);
    let adj = normalize_adjacency(&g);
    let x = g.features().view();
    let idx: Vec<usize> = (0..10).collect();
    let base = MlpModel::<f64>::new(&[5, 6, 2], 0.0, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let mut model = AppnpModel::new(base, 0.8, 5).unwrap();
    let (logits, tape) = model.forward_train::<ChaCha8Rng>(x, &adj, None).unwrap();
    let (_, g_out) = loss_cross_entropy(logits.view(), g.labels(), &idx).unwrap();
    let grads = model.backward(&tape, &adj, g_out.view()).unwrap();
    let report = grad_check(&mut model, &grads, 200, 3, |m| {
        loss_cross_entropy(m.forward(x, &adj).unwrap().view(), g.labels(), &idx).unwrap().0
    });
    assert!(report.max_rel_error < TOL, "{report:?}");
}
