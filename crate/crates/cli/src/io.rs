use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::{Array2, ArrayView2};
use serde::de::DeserializeOwned;
use serde::Serialize;

use propdistill::data::{make_split, SplitSpec};
use propdistill::Graph64;

use crate::config::RunConfig;

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

pub fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Dense matrix as headerless CSV, one row per node, shortest round-trip reals.
pub fn write_matrix(path: &Path, m: ArrayView2<'_, f64>) -> Result<()> {
    let mut out = String::with_capacity(m.len() * 20);
    for row in m.outer_iter() {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (ln, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let before = values.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("{}: line {}: bad number {field:?}", path.display(), ln + 1))?;
            values.push(v);
        }
        let width = values.len() - before;
        if *cols.get_or_insert(width) != width {
            bail!("{}: line {} has {width} columns", path.display(), ln + 1);
        }
        rows += 1;
    }
    Ok(Array2::from_shape_vec((rows, cols.unwrap_or(0)), values)?)
}

/// The dataset's own `split.json` if it has one, else a per-class random split.
pub fn base_split(graph: &Graph64, cfg: &RunConfig) -> Result<SplitSpec> {
    let path = cfg.dataset()?.join("split.json");
    let split = if path.exists() {
        read_json(&path)?
    } else {
        make_split(graph, cfg.split.train_per_class, cfg.split.val_per_class, cfg.seed)?
    };
    split.validate(graph.num_nodes())?;
    Ok(split)
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
