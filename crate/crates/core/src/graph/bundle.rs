//! On-disk dataset bundle:
//!
//! ```text
//! meta.json     {"name", "num_nodes", "num_features", "num_classes"}
//! edges.csv     header "src,dst"; one undirected edge per line, src < dst
//! features.bin  little-endian f32, row-major N×F, no header
//! labels.csv    header "node,label"
//! splits.json   {"train": [..], "val": [..], "test": [..]}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Splits};
use crate::error::{GltError, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    name: String,
    num_nodes: usize,
    num_features: usize,
    num_classes: usize,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| GltError::io(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| GltError::io(path, e))
}

/// Parses a two-column integer CSV with the given header.
fn read_pairs(path: &Path, header: &str) -> Result<Vec<(usize, usize)>> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == header => {}
        other => {
            return Err(GltError::Bundle(format!(
                "{}: expected header {header:?}, found {other:?}",
                path.display()
            )))
        }
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse = |s: Option<&str>| -> Result<usize> {
            s.and_then(|s| s.trim().parse().ok()).ok_or_else(|| {
                GltError::Bundle(format!(
                    "{}:{}: malformed row {line:?}",
                    path.display(),
                    lineno + 2
                ))
            })
        };
        let mut cols = line.split(',');
        let a = parse(cols.next())?;
        let b = parse(cols.next())?;
        if cols.next().is_some() {
            return Err(GltError::Bundle(format!(
                "{}:{}: too many columns",
                path.display(),
                lineno + 2
            )));
        }
        out.push((a, b));
    }
    Ok(out)
}

pub fn load_bundle(dir: &Path) -> Result<Dataset> {
    let meta: Meta = serde_json::from_str(&read_text(&dir.join("meta.json"))?)?;

    let edges_path = dir.join("edges.csv");
    let edges = read_pairs(&edges_path, "src,dst")?;
    if let Some(&(a, _)) = edges.iter().find(|(a, b)| a == b) {
        return Err(GltError::Bundle(format!(
            "{}: self-loop {a},{a} rejected",
            edges_path.display()
        )));
    }

    let feat_path = dir.join("features.bin");
    let raw = fs::read(&feat_path).map_err(|e| GltError::io(&feat_path, e))?;
    let expected = meta.num_nodes * meta.num_features * 4;
    if raw.len() != expected {
        return Err(GltError::Bundle(format!(
            "{}: {} bytes, meta implies {expected}",
            feat_path.display(),
            raw.len()
        )));
    }
    let features = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();

    let labels_path = dir.join("labels.csv");
    let rows = read_pairs(&labels_path, "node,label")?;
    if rows.len() != meta.num_nodes {
        return Err(GltError::Bundle(format!(
            "{}: {} rows for {} nodes",
            labels_path.display(),
            rows.len(),
            meta.num_nodes
        )));
    }
    let mut labels = vec![usize::MAX; meta.num_nodes];
    for (node, label) in rows {
        if node >= meta.num_nodes || labels[node] != usize::MAX {
            return Err(GltError::Bundle(format!(
                "{}: bad or repeated node {node}",
                labels_path.display()
            )));
        }
        labels[node] = label;
    }

    let splits: Splits = serde_json::from_str(&read_text(&dir.join("splits.json"))?)?;

    Dataset::new(
        meta.name,
        meta.num_nodes,
        meta.num_features,
        meta.num_classes,
        edges,
        features,
        labels,
        splits,
    )
}

pub fn save_bundle(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GltError::io(dir, e))?;
    let meta = Meta {
        name: dataset.name().to_string(),
        num_nodes: dataset.num_nodes(),
        num_features: dataset.num_features(),
        num_classes: dataset.num_classes(),
    };
    write(&dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;

    let mut edges = String::from("src,dst\n");
    for &(i, j) in dataset.edges() {
        edges.push_str(&format!("{i},{j}\n"));
    }
    write(&dir.join("edges.csv"), edges)?;

    let bytes: Vec<u8> = dataset
        .features()
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect();
    write(&dir.join("features.bin"), bytes)?;

    let mut labels = String::from("node,label\n");
    for (i, l) in dataset.labels().iter().enumerate() {
        labels.push_str(&format!("{i},{l}\n"));
    }
    write(&dir.join("labels.csv"), labels)?;

    write(
        &dir.join("splits.json"),
        serde_json::to_string(dataset.splits())?,
    )
}
