mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "propdistill", version, about = "Distil graph networks into feature-only MLPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset bundle
    GenData {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Train the graph teacher and save its class probabilities
    TrainTeacher {
        #[command(flatten)]
        common: Overrides,
    },
    /// Train a student MLP against a teacher
    Distill {
        #[command(flatten)]
        common: Overrides,
        /// Directory written by train-teacher; a teacher is trained in place when absent
        #[arg(long)]
        teacher_run: Option<PathBuf>,
    },
    /// Grid of losses × γ × T × seeds, written as CSV
    Sweep {
        #[command(flatten)]
        common: Overrides,
    },
    /// Check the one-step correction condition over a parameter grid
    VerifyTheorem {
        #[command(flatten)]
        common: Overrides,
        /// Also check that the correction interval narrows as the error ratio grows
        #[arg(long)]
        epsilon_scan: bool,
        /// Also locate the empirical correction threshold by simulation
        #[arg(long)]
        frontier: bool,
        #[arg(long, hide = true)]
        corrupt_formula: bool,
    },
    /// Teacher, propagated targets and far-node accuracy on disjoint chains
    ChainsCaseStudy {
        #[command(flatten)]
        common: Overrides,
    },
    /// Score a saved student on a dataset
    Eval {
        #[command(flatten)]
        common: Overrides,
        /// Directory written by distill
        #[arg(long)]
        student_run: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// Disjoint paths labelled only at their first node
    Chains(ChainsArgs),
    /// Regular graph with a fixed share of same-class neighbours
    Homophily(HomophilyArgs),
}

#[derive(Debug, Args)]
struct ChainsArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    noise_dims: Option<usize>,
}

#[derive(Debug, Args)]
struct HomophilyArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    signal: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Resolves the configuration, records it, runs the command. `Ok(false)`
/// means the command ran but one of its checks failed.
fn run(command: Command) -> Result<bool> {
    let prepare = |cfg: RunConfig| -> Result<RunConfig> {
        commands::ensure_out_is_not_input(&cfg)?;
        cfg.persist()?;
        Ok(cfg)
    };
    match command {
        Command::GenData { kind: GenKind::Chains(a) } => {
            let mut cfg = a.common.resolve()?;
            set(&mut cfg.chains.num_chains, a.chains);
            set(&mut cfg.chains.length, a.length);
            set(&mut cfg.chains.num_classes, a.classes);
            set(&mut cfg.chains.noise_dims, a.noise_dims);
            commands::gen_chains_bundle(&prepare(cfg)?)?;
        }
        Command::GenData { kind: GenKind::Homophily(a) } => {
            let mut cfg = a.common.resolve()?;
            let h = &mut cfg.homophily;
            set(&mut h.num_nodes, a.n);
            set(&mut h.degree, a.d);
            set(&mut h.homophily, a.h);
            set(&mut h.num_classes, a.classes);
            set(&mut h.feature_dim, a.feature_dim);
            set(&mut h.signal, a.signal);
            commands::gen_homophily_bundle(&prepare(cfg)?)?;
        }
        Command::TrainTeacher { common } => commands::train_teacher_cmd(&prepare(common.resolve()?)?)?,
        Command::Distill { common, teacher_run } => {
            let mut cfg = common.resolve()?;
            if teacher_run.is_some() {
                cfg.teacher_run = teacher_run;
            }
            commands::distill_cmd(&prepare(cfg)?)?;
        }
        Command::Sweep { common } => commands::sweep_cmd(&prepare(common.resolve()?)?)?,
        Command::VerifyTheorem { common, epsilon_scan, frontier, corrupt_formula } => {
            let cfg = prepare(common.resolve()?)?;
            return commands::verify_theorem_cmd(&cfg, epsilon_scan, frontier, corrupt_formula);
        }
        Command::ChainsCaseStudy { common } => return commands::chains_case_study_cmd(&prepare(common.resolve()?)?),
        Command::Eval { common, student_run } => {
            let mut cfg = common.resolve()?;
            if student_run.is_some() {
                cfg.student_run = student_run;
            }
            commands::eval_cmd(&prepare(cfg)?)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("checks failed; see the output directory");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
