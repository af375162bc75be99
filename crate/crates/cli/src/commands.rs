use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use propdistill::data::{gen_chains, gen_homophily_regular, load_dataset, make_split, SplitSpec};
use propdistill::distill::{
    accuracy, distill_student, evaluate, evaluate_student, prepare_scenario, train_teacher, DistillConfig, LossVariant,
    Scenario, ScenarioData, StudentScores, Teacher,
};
use propdistill::graph::{normalize_adjacency, save_bundle};
use propdistill::nn::Checkpoint;
use propdistill::propagation::{
    clamp_renormalize, propagate_recursive, propagate_recursive_fix, solve_shifted, DENSE_SOLVE_THRESHOLD,
};
use propdistill::theory::{beta_exact_in, epsilon_scan, frontier_scan, verify_theorem, verify_theorem_with};
use propdistill::{Graph64, ProbMatrix, ProbMatrix64};

use crate::config::RunConfig;
use crate::io::{base_split, mean_std, read_json, read_matrix, write_json, write_matrix, write_text};

#[derive(Debug, Serialize)]
struct GenSummary {
    num_nodes: usize,
    num_edges: usize,
    num_classes: usize,
    feature_dim: usize,
    edge_homophily: f64,
    min_degree: usize,
    max_degree: usize,
}

fn gen_summary(g: &Graph64) -> GenSummary {
    let d = g.degrees();
    GenSummary {
        num_nodes: g.num_nodes(),
        num_edges: g.num_edges(),
        num_classes: g.num_classes(),
        feature_dim: g.feature_dim(),
        edge_homophily: g.edge_homophily(),
        min_degree: d.iter().copied().min().unwrap_or(0),
        max_degree: d.iter().copied().max().unwrap_or(0),
    }
}

pub fn gen_chains_bundle(cfg: &RunConfig) -> Result<()> {
    let data = gen_chains::<f64>(&cfg.chains, cfg.seed)?;
    save_bundle(&data.graph, &cfg.out)?;
    write_json(&cfg.out.join("split.json"), &data.split)?;
    write_json(&cfg.out.join("hops.json"), &data.hops)?;
    write_json(&cfg.out.join("generator.json"), &gen_summary(&data.graph))?;
    info!("wrote {} chain nodes to {}", data.graph.num_nodes(), cfg.out.display());
    Ok(())
}

pub fn gen_homophily_bundle(cfg: &RunConfig) -> Result<()> {
    let g = gen_homophily_regular::<f64>(&cfg.homophily, cfg.seed)?;
    save_bundle(&g, &cfg.out)?;
    let summary = gen_summary(&g);
    info!("wrote {} nodes, edge homophily {:.4}, to {}", summary.num_nodes, summary.edge_homophily, cfg.out.display());
    write_json(&cfg.out.join("generator.json"), &summary)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TeacherSummary {
    pub arch: String,
    pub seed: u64,
    pub scenario: Scenario,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    /// On the test nodes, or the observed test nodes in production mode.
    pub test_accuracy: f64,
}

fn load_graph(cfg: &RunConfig) -> Result<Graph64> {
    let dir = cfg.dataset()?;
    load_dataset(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

fn scenario_data(graph: &Graph64, cfg: &RunConfig) -> Result<ScenarioData<f64>> {
    let split = base_split(graph, cfg)?;
    Ok(prepare_scenario(graph, &split, cfg.scenario, cfg.ind_fraction, cfg.seed)?)
}

fn transductive_test(split: &SplitSpec) -> &[usize] {
    if split.is_production() {
        &split.obs
    } else {
        &split.test
    }
}

fn fit_teacher(data: &ScenarioData<f64>, cfg: &RunConfig) -> Result<(Teacher<f64>, TeacherSummary)> {
    let t = train_teacher(&data.train_graph, &data.split, &cfg.teacher)?;
    let labels = data.train_graph.labels();
    let acc = |idx: &[usize]| accuracy(t.probs.view(), labels, idx);
    let summary = TeacherSummary {
        arch: format!("{:?}", cfg.teacher.arch).to_lowercase(),
        seed: cfg.seed,
        scenario: cfg.scenario,
        epochs_run: t.report.epochs_run(),
        best_epoch: t.report.best_epoch,
        train_accuracy: acc(&data.split.train)?,
        val_accuracy: acc(&data.split.val)?,
        test_accuracy: acc(transductive_test(&data.split))?,
    };
    Ok((t, summary))
}

pub fn train_teacher_cmd(cfg: &RunConfig) -> Result<()> {
    let graph = load_graph(cfg)?;
    let data = scenario_data(&graph, cfg)?;
    let (t, summary) = fit_teacher(&data, cfg)?;
    t.model.checkpoint().save(cfg.out.join("teacher.json"))?;
    write_matrix(&cfg.out.join("teacher_probs.csv"), t.probs.view())?;
    write_json(&cfg.out.join("split.json"), &data.split)?;
    t.report.write_jsonl(cfg.out.join("train_log.jsonl"))?;
    write_json(&cfg.out.join("report.json"), &summary)?;
    println!("teacher test accuracy {:.4} (best epoch {})", summary.test_accuracy, summary.best_epoch);
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DistillSummary {
    pub loss: LossVariant,
    pub gamma: f64,
    pub steps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub scenario: Scenario,
    pub scores: StudentScores,
    pub val_accuracy: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub laplacian_quadratic: f64,
    pub teacher_test_accuracy: f64,
}

/// Teacher probabilities for distillation: read from a `train-teacher` run
/// when one is configured, trained in place otherwise.
fn teacher_for(data: &ScenarioData<f64>, cfg: &RunConfig) -> Result<(ProbMatrix64, TeacherSummary)> {
    let Some(dir) = &cfg.teacher_run else {
        info!("no teacher run given, training one");
        let (t, summary) = fit_teacher(data, cfg)?;
        return Ok((t.probs, summary));
    };
    let summary: TeacherSummary = read_json(&dir.join("report.json"))?;
    if summary.scenario != cfg.scenario {
        bail!(
            "teacher run {} was trained for the {} scenario, distillation asks for {}",
            dir.display(),
            format!("{:?}", summary.scenario).to_lowercase(),
            format!("{:?}", cfg.scenario).to_lowercase()
        );
    }
    let split: SplitSpec = read_json(&dir.join("split.json"))?;
    if split != data.split {
        bail!("teacher run {} used a different split (check seed and ind_fraction)", dir.display());
    }
    let probs = ProbMatrix::new(read_matrix(&dir.join("teacher_probs.csv"))?)?;
    Ok((probs, summary))
}

pub fn distill_cmd(cfg: &RunConfig) -> Result<()> {
    let graph = load_graph(cfg)?;
    let data = scenario_data(&graph, cfg)?;
    let (teacher, tsum) = teacher_for(&data, cfg)?;
    let s = distill_student(&data.train_graph, &teacher, &data.split, &cfg.distill)?;
    let scores = evaluate_student(&s.model, graph.features().view(), graph.labels(), &data.split)?;
    let best = s.report.best_record().context("empty training report")?;
    let summary = DistillSummary {
        loss: cfg.distill.loss,
        gamma: cfg.distill.gamma,
        steps: cfg.distill.steps,
        alpha: cfg.distill.alpha,
        seed: cfg.seed,
        scenario: cfg.scenario,
        scores,
        val_accuracy: s.report.best_val_acc,
        best_epoch: s.report.best_epoch,
        epochs_run: s.report.epochs_run(),
        laplacian_quadratic: best.laplacian_quadratic,
        teacher_test_accuracy: tsum.test_accuracy,
    };
    Checkpoint::from_mlp(&s.model).save(cfg.out.join("student.json"))?;
    write_json(&cfg.out.join("split.json"), &data.split)?;
    s.report.write_jsonl(cfg.out.join("train_log.jsonl"))?;
    write_json(&cfg.out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string(&summary.scores)?);
    Ok(())
}

pub fn eval_cmd(cfg: &RunConfig) -> Result<()> {
    let dir = cfg.student_run.as_deref().context("no student run given (use --student-run)")?;
    let model = Checkpoint::load(dir.join("student.json"))?.to_mlp::<f64>()?;
    let split: SplitSpec = read_json(&dir.join("split.json"))?;
    let graph = load_graph(cfg)?;
    split.validate(graph.num_nodes())?;
    let scores = evaluate_student(&model, graph.features().view(), graph.labels(), &split)?;
    write_json(&cfg.out.join("eval.json"), &scores)?;
    println!("{}", serde_json::to_string(&scores)?);
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
struct SweepCell {
    loss: LossVariant,
    gamma: f64,
    steps: usize,
}

/// Worker count from `PROPDISTILL_THREADS`, or rayon's default.
fn sweep_threads() -> Result<usize> {
    match std::env::var("PROPDISTILL_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("PROPDISTILL_THREADS={v:?}"))?;
            ensure!(n > 0, "PROPDISTILL_THREADS must be positive");
            Ok(n)
        }
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

/// One (graph, split, teacher) per seed: the configured dataset, or the
/// homophily generator seeded with the run seed.
fn sweep_inputs(cfg: &RunConfig, seed: u64) -> Result<(Graph64, ScenarioData<f64>, ProbMatrix64)> {
    let mut cfg = RunConfig { seed, ..cfg.clone() };
    cfg.teacher.train.seed = seed;
    let graph = match &cfg.dataset {
        Some(_) => load_graph(&cfg)?,
        None => gen_homophily_regular(&cfg.homophily, seed)?,
    };
    let split = match &cfg.dataset {
        Some(_) => base_split(&graph, &cfg)?,
        None => make_split(&graph, cfg.split.train_per_class, cfg.split.val_per_class, seed)?,
    };
    let data = prepare_scenario(&graph, &split, cfg.scenario, cfg.ind_fraction, seed)?;
    let (teacher, _) = fit_teacher(&data, &cfg)?;
    Ok((graph, data, teacher.probs))
}

pub fn sweep_cmd(cfg: &RunConfig) -> Result<()> {
    let sw = &cfg.sweep;
    let mut cells = Vec::new();
    for &loss in &sw.losses {
        for &gamma in &sw.gammas {
            for &steps in &sw.steps {
                cells.push(SweepCell { loss, gamma, steps });
            }
        }
    }
    ensure!(!cells.is_empty() && !sw.seeds.is_empty(), "empty sweep grid");
    let threads = sweep_threads()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    info!("{} cells × {} seeds on {threads} threads", cells.len(), sw.seeds.len());

    let inputs: Vec<_> = pool.install(|| sw.seeds.par_iter().map(|&s| sweep_inputs(cfg, s)).collect::<Result<_>>())?;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..sw.seeds.len()).map(move |s| (c, s))).collect();
    let results: Vec<(f64, f64)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, s)| {
                let cell = cells[c];
                let (graph, data, teacher) = &inputs[s];
                let mut dc = DistillConfig { loss: cell.loss, gamma: cell.gamma, steps: cell.steps, ..cfg.distill.clone() };
                dc.train.seed = sw.seeds[s];
                let student = distill_student(&data.train_graph, teacher, &data.split, &dc)?;
                let scores = evaluate_student(&student.model, graph.features().view(), graph.labels(), &data.split)?;
                let lapq = student.report.best_record().map_or(f64::NAN, |r| r.laplacian_quadratic);
                Ok((scores.production.unwrap_or(scores.transductive), lapq))
            })
            .collect::<Result<_>>()
    })?;

    let mut runs = String::from("loss,gamma,steps,seed,accuracy,laplacian_quadratic\n");
    let mut summary = String::from("loss,gamma,steps,num_seeds,mean_accuracy,std_accuracy,mean_laplacian_quadratic\n");
    for (c, cell) in cells.iter().enumerate() {
        let rows = &results[c * sw.seeds.len()..(c + 1) * sw.seeds.len()];
        for (s, (acc, lapq)) in rows.iter().enumerate() {
            runs.push_str(&format!("{},{},{},{},{acc},{lapq}\n", cell.loss.name(), cell.gamma, cell.steps, sw.seeds[s]));
        }
        let accs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let lapqs: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let (mean, std) = mean_std(&accs);
        summary.push_str(&format!(
            "{},{},{},{},{mean},{std},{}\n",
            cell.loss.name(),
            cell.gamma,
            cell.steps,
            accs.len(),
            mean_std(&lapqs).0
        ));
    }
    write_text(&cfg.out.join("sweep_runs.csv"), &runs)?;
    write_text(&cfg.out.join("sweep.csv"), &summary)?;
    print!("{summary}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct TheoremSummary {
    cells: usize,
    agreement_rate: f64,
    large_class_agreement: f64,
    band_violations: usize,
    passed: bool,
}

pub fn verify_theorem_cmd(cfg: &RunConfig, scan: bool, frontier: bool, corrupt: bool) -> Result<bool> {
    let report = if corrupt {
        // Negative control: the verdict with the correction condition inverted.
        verify_theorem_with(&cfg.theory, |tp| {
            let (b, bw) = beta_exact_in::<f64>(tp);
            b < bw
        })?
    } else {
        verify_theorem(&cfg.theory)?
    };
    write_text(&cfg.out.join("theorem.csv"), &report.to_csv())?;
    let summary = TheoremSummary {
        cells: report.rows.len(),
        agreement_rate: report.agreement_rate,
        large_class_agreement: report.large_class_agreement,
        band_violations: report.band_violations,
        passed: report.passed(),
    };
    write_json(&cfg.out.join("theorem.json"), &summary)?;
    println!(
        "{} cells, agreement {:.4}, large-class agreement {:.4}, {} band violations",
        summary.cells, summary.agreement_rate, summary.large_class_agreement, summary.band_violations
    );
    let mut passed = summary.passed;
    if scan {
        let s = epsilon_scan(&cfg.theory, cfg.epsilon_steps)?;
        write_json(&cfg.out.join("epsilon_scan.json"), &s)?;
        println!(
            "epsilon scan: {}/{} lines monotone ({} skipped), bound increasing: {}",
            s.monotone_lines, s.lines, s.skipped_lines, s.bound_increasing
        );
        passed &= s.passed();
    }
    if frontier {
        let cells = frontier_scan(&cfg.frontier)?;
        let mut csv = String::from("h,p,gamma,epsilon,frontier,q_lo,cell_width,cell_offset\n");
        for c in &cells {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.h,
                c.p,
                c.gamma,
                c.epsilon,
                c.frontier,
                c.q_lo,
                c.cell_width,
                c.cell_offset()
            ));
        }
        write_text(&cfg.out.join("frontier.csv"), &csv)?;
        let within = cells.iter().filter(|c| c.within_one_cell()).count();
        println!("frontier within one grid cell: {within}/{}", cells.len());
        passed &= within == cells.len();
    }
    Ok(passed)
}

#[derive(Debug, Serialize)]
struct MethodResult {
    loss: LossVariant,
    far_accuracy: f64,
    test_accuracy: f64,
}

#[derive(Debug, Serialize)]
struct MatrixDump {
    file: String,
    row_stochastic: bool,
}

#[derive(Debug, Serialize)]
struct CaseStudy {
    seed: u64,
    gamma: f64,
    steps: usize,
    far_nodes: usize,
    teacher_near_accuracy: f64,
    teacher_far_accuracy: f64,
    methods: Vec<MethodResult>,
    matrices: BTreeMap<String, MatrixDump>,
}

fn row_stochastic(m: &ProbMatrix64) -> bool {
    m.as_array().outer_iter().all(|r| (r.sum() - 1.0).abs() < 1e-9 && r.iter().all(|&v| v >= 0.0))
}

fn chains_input(cfg: &RunConfig) -> Result<(Graph64, SplitSpec, Vec<usize>)> {
    match &cfg.dataset {
        Some(dir) => {
            let graph = load_graph(cfg)?;
            let split: SplitSpec = read_json(&dir.join("split.json"))?;
            let hops: Vec<usize> = read_json(&dir.join("hops.json"))?;
            ensure!(hops.len() == graph.num_nodes(), "hops.json does not match the graph");
            Ok((graph, split, hops))
        }
        None => {
            let data = gen_chains(&cfg.chains, cfg.seed)?;
            Ok((data.graph, data.split, data.hops))
        }
    }
}

pub fn chains_case_study_cmd(cfg: &RunConfig) -> Result<bool> {
    let (graph, split, hops) = chains_input(cfg)?;
    let far: Vec<usize> = (0..graph.num_nodes()).filter(|&i| hops[i] > 2).collect();
    let near: Vec<usize> = (0..graph.num_nodes()).filter(|&i| hops[i] <= 2).collect();
    ensure!(!far.is_empty(), "chains are too short to have nodes beyond two hops");
    let data = ScenarioData { train_graph: graph.clone(), split: split.clone() };
    let (teacher, _) = fit_teacher(&data, cfg)?;
    let adj = normalize_adjacency(&graph);
    let (gamma, steps) = (cfg.distill.gamma, cfg.distill.steps);

    let inverse = solve_shifted(&adj, 2.0, gamma, teacher.probs.view(), DENSE_SOLVE_THRESHOLD)?;
    let views = [
        ("teacher", teacher.probs.clone()),
        ("inverse", clamp_renormalize(inverse.view(), cfg.distill.floor)),
        ("pnd", propagate_recursive(&teacher.probs, &adj, gamma, steps)?),
        ("pnd_fix", propagate_recursive_fix(&teacher.probs, &adj, gamma, steps, &split.train)?),
    ];
    let mut matrices = BTreeMap::new();
    for (name, m) in &views {
        let file = format!("{name}.csv");
        write_matrix(&cfg.out.join(&file), m.view())?;
        matrices.insert(name.to_string(), MatrixDump { file, row_stochastic: row_stochastic(m) });
    }

    let mut methods = Vec::new();
    for loss in [LossVariant::Plain, LossVariant::Invkd, LossVariant::Pnd, LossVariant::PndFix] {
        let dc = DistillConfig { loss, ..cfg.distill.clone() };
        let s = distill_student(&graph, &teacher.probs, &split, &dc)?;
        let x = graph.features().view();
        methods.push(MethodResult {
            loss,
            far_accuracy: evaluate(&s.model, x, graph.labels(), &far)?,
            test_accuracy: evaluate(&s.model, x, graph.labels(), &split.test)?,
        });
    }
    let study = CaseStudy {
        seed: cfg.seed,
        gamma,
        steps,
        far_nodes: far.len(),
        teacher_near_accuracy: accuracy(teacher.probs.view(), graph.labels(), &near)?,
        teacher_far_accuracy: accuracy(teacher.probs.view(), graph.labels(), &far)?,
        methods,
        matrices,
    };
    write_json(&cfg.out.join("case_study.json"), &study)?;
    for m in &study.methods {
        println!("{:8} far-node accuracy {:.4}", m.loss.name(), m.far_accuracy);
    }
    Ok(study.matrices.values().all(|m| m.row_stochastic))
}

pub fn ensure_out_is_not_input(cfg: &RunConfig) -> Result<()> {
    for input in [&cfg.dataset, &cfg.teacher_run, &cfg.student_run].into_iter().flatten() {
        if same_dir(input, &cfg.out) {
            bail!("output directory {} is also an input", cfg.out.display());
        }
    }
    Ok(())
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}
