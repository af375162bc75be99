use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use propdistill::data::{ChainsConfig, HomophilyConfig};
use propdistill::distill::{DistillConfig, LossVariant, Scenario, TeacherArch, TeacherConfig};
use propdistill::theory::{FrontierGrid, TheoryGrid};

/// Per-class node counts used when a dataset ships no `split.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub train_per_class: usize,
    pub val_per_class: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_per_class: 20, val_per_class: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub losses: Vec<LossVariant>,
    pub gammas: Vec<f64>,
    pub steps: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            losses: vec![LossVariant::Pnd],
            gammas: vec![0.1, 0.9],
            steps: vec![1, 10, 50],
            seeds: (0..5).collect(),
        }
    }
}

/// Everything a command reads. Loaded from TOML, then overridden by
/// `PROPDISTILL_*` variables, then by flags; the result is written to the
/// output directory as `config.toml`.
///
/// `seed` drives the split, the generators and both training runs; it
/// replaces `teacher.train.seed` and `distill.train.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Dataset bundle directory.
    pub dataset: Option<PathBuf>,
    /// Output directory of an earlier `train-teacher` run.
    pub teacher_run: Option<PathBuf>,
    /// Output directory of an earlier `distill` run.
    pub student_run: Option<PathBuf>,
    pub scenario: Scenario,
    /// Share of test nodes held out as unseen in production mode.
    pub ind_fraction: f64,
    pub epsilon_steps: usize,
    pub split: SplitConfig,
    pub teacher: TeacherConfig,
    pub distill: DistillConfig,
    pub sweep: SweepConfig,
    pub homophily: HomophilyConfig,
    pub chains: ChainsConfig,
    pub theory: TheoryGrid,
    pub frontier: FrontierGrid,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            dataset: None,
            teacher_run: None,
            student_run: None,
            scenario: Scenario::Transductive,
            ind_fraction: 0.2,
            epsilon_steps: 100,
            split: SplitConfig::default(),
            teacher: TeacherConfig::default(),
            distill: DistillConfig::default(),
            sweep: SweepConfig::default(),
            homophily: HomophilyConfig::default(),
            chains: ChainsConfig { noise_dims: 16, ..ChainsConfig::default() },
            theory: TheoryGrid::default(),
            frontier: FrontierGrid::default(),
        }
    }
}

/// Parses `pnd-fix`, `pnd_fix`, `Production`, ... into a snake_case enum.
pub fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    let name = s.trim().to_ascii_lowercase().replace('-', "_");
    serde_json::from_value(serde_json::Value::String(name)).map_err(|_| format!("unknown value {s:?}"))
}

/// Flags shared by every command. Each one falls back to its environment
/// variable, so flags beat the environment, which beats the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file
    #[arg(long, env = "PROPDISTILL_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "PROPDISTILL_SEED")]
    pub seed: Option<u64>,
    /// plain, invkd, pnd, pnd-fix or conv
    #[arg(long, env = "PROPDISTILL_LOSS", value_parser = parse_name::<LossVariant>)]
    pub loss: Option<LossVariant>,
    #[arg(long, env = "PROPDISTILL_GAMMA")]
    pub gamma: Option<f64>,
    #[arg(long, env = "PROPDISTILL_STEPS")]
    pub steps: Option<usize>,
    #[arg(long, env = "PROPDISTILL_ALPHA")]
    pub alpha: Option<f64>,
    /// transductive or production
    #[arg(long, env = "PROPDISTILL_SCENARIO", value_parser = parse_name::<Scenario>)]
    pub scenario: Option<Scenario>,
    /// sage or appnp
    #[arg(long, env = "PROPDISTILL_TEACHER", value_parser = parse_name::<TeacherArch>)]
    pub teacher: Option<TeacherArch>,
    #[arg(long, env = "PROPDISTILL_DATASET")]
    pub dataset: Option<PathBuf>,
    #[arg(long, env = "PROPDISTILL_OUT")]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.loss {
            cfg.distill.loss = v;
        }
        if let Some(v) = self.gamma {
            cfg.distill.gamma = v;
        }
        if let Some(v) = self.steps {
            cfg.distill.steps = v;
        }
        if let Some(v) = self.alpha {
            cfg.distill.alpha = v;
        }
        if let Some(v) = self.scenario {
            cfg.scenario = v;
        }
        if let Some(v) = self.teacher {
            cfg.teacher.arch = v;
        }
        if let Some(v) = &self.dataset {
            cfg.dataset = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        cfg.teacher.train.seed = cfg.seed;
        cfg.distill.train.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.teacher.train.validate()?;
        self.distill.validate()?;
        if !(self.ind_fraction > 0.0 && self.ind_fraction < 1.0) {
            bail!("ind_fraction {} outside (0, 1)", self.ind_fraction);
        }
        Ok(())
    }

    /// Creates the output directory and writes the resolved configuration.
    pub fn persist(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join("config.toml");
        std::fs::write(&path, toml::to_string(self)?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset.as_deref().context("no dataset given (use --dataset or the `dataset` key)")
    }
}
