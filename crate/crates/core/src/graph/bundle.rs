//! Dataset directory format:
//!
//! ```text
//! edges.tsv     u<TAB>v per line, zero-based, undirected
//! features.csv  one comma-separated row of reals per node
//! labels.csv    one class index per line
//! meta.json     {"num_nodes", "num_classes", "feature_dim", optional "num_edges"}
//! ```
//!
//! Reals are written in shortest round-trip form, so save/load is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMeta {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_edges: Option<usize>,
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| Error::io(path, e))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn parse_field<V: std::str::FromStr>(path: &Path, line: usize, text: &str) -> Result<V> {
    text.trim()
        .parse()
        .map_err(|_| Error::format(path, format!("line {}: cannot parse {text:?}", line + 1)))
}

pub fn load_bundle<T: Scalar>(dir: impl AsRef<Path>) -> Result<Graph<T>> {
    let dir = dir.as_ref();
    let meta: BundleMeta = serde_json::from_str(&read(dir, "meta.json")?)
        .map_err(|e| Error::format(dir.join("meta.json"), e.to_string()))?;

    let edges_path = dir.join("edges.tsv");
    let mut edges = Vec::new();
    for (ln, line) in read(dir, "edges.tsv")?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(u), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::format(&edges_path, format!("line {}: expected two tab-separated ids", ln + 1)));
        };
        edges.push((parse_field(&edges_path, ln, u)?, parse_field(&edges_path, ln, v)?));
    }

    let features_path = dir.join("features.csv");
    let mut values = Vec::with_capacity(meta.num_nodes * meta.feature_dim);
    let mut rows = 0;
    for (ln, line) in read(dir, "features.csv")?.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            values.push(parse_field::<T>(&features_path, ln, field)?);
        }
        if values.len() - before != meta.feature_dim {
            return Err(Error::format(
                &features_path,
                format!("line {}: {} values, meta says {}", ln + 1, values.len() - before, meta.feature_dim),
            ));
        }
        rows += 1;
    }
    if rows != meta.num_nodes {
        return Err(Error::format(&features_path, format!("{rows} rows, meta says {} nodes", meta.num_nodes)));
    }
    let features = Array2::from_shape_vec((rows, meta.feature_dim), values)
        .map_err(|e| Error::format(&features_path, e.to_string()))?;

    let labels_path = dir.join("labels.csv");
    let labels = read(dir, "labels.csv")?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(ln, l)| parse_field(&labels_path, ln, l))
        .collect::<Result<Vec<usize>>>()?;
    if labels.len() != meta.num_nodes {
        return Err(Error::format(
            &labels_path,
            format!("{} labels, meta says {} nodes", labels.len(), meta.num_nodes),
        ));
    }

    let (graph, report) = Graph::build(meta.num_nodes, &edges, features, labels, meta.num_classes)?;
    if report.dropped() > 0 {
        log::warn!("{}: {} edges dropped while loading", dir.display(), report.dropped());
    }
    if let Some(expected) = meta.num_edges {
        if graph.num_edges() != expected {
            return Err(Error::format(
                edges_path,
                format!("{} undirected edges, meta says {expected}", graph.num_edges()),
            ));
        }
    }
    Ok(graph)
}

pub fn save_bundle<T: Scalar>(graph: &Graph<T>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut edges = String::with_capacity(graph.num_edges() * 12);
    for &(u, v) in graph.edges() {
        writeln!(edges, "{u}\t{v}").unwrap();
    }
    write(dir, "edges.tsv", &edges)?;

    let mut features = String::new();
    for row in graph.features().outer_iter() {
        for (k, x) in row.iter().enumerate() {
            if k > 0 {
                features.push(',');
            }
            write!(features, "{x}").unwrap();
        }
        features.push('\n');
    }
    write(dir, "features.csv", &features)?;

    let mut labels = String::new();
    for l in graph.labels() {
        writeln!(labels, "{l}").unwrap();
    }
    write(dir, "labels.csv", &labels)?;

    let meta = BundleMeta {
        num_nodes: graph.num_nodes(),
        num_classes: graph.num_classes(),
        feature_dim: graph.feature_dim(),
        num_edges: Some(graph.num_edges()),
    };
    write(dir, "meta.json", &serde_json::to_string_pretty(&meta)?)
}
