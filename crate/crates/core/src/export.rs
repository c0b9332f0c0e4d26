//! The explorer bundle: one JSON document holding every dataset's edges and
//! per-node metrics, plus the author metadata the explorer lays out by.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::corpus::AuthorTable;
use crate::dataset::{ReferenceSet, Variant};
use crate::error::{Error, Result};
use crate::graph::{build_graph, MetricsReport};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleAuthor {
    pub author_id: String,
    pub display_name: String,
    pub birth_year: i32,
    pub death_year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleEdge {
    pub citing: String,
    pub cited: String,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub in_total: u64,
    pub out_total: u64,
    pub in_degree: usize,
    pub out_degree: usize,
    pub betweenness: f64,
    pub community: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleDataset {
    pub dataset_id: String,
    pub label: String,
    pub nodes: Vec<String>,
    pub edges: Vec<BundleEdge>,
    pub per_node: BTreeMap<String, NodeEntry>,
    pub reciprocity: Option<f64>,
    pub modularity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub generated_at: String,
    pub tool_version: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorerBundle {
    pub authors: Vec<BundleAuthor>,
    pub datasets: Vec<BundleDataset>,
    pub meta: BundleMeta,
}

impl ExplorerBundle {
    pub fn dataset(&self, dataset_id: &str) -> Option<&BundleDataset> {
        self.datasets.iter().find(|d| d.dataset_id == dataset_id)
    }
}

/// Assemble the bundle. Datasets keep the order given.
pub fn export_bundle(
    variants: &[(Variant, &ReferenceSet, &MetricsReport)],
    authors: &AuthorTable,
    meta: BundleMeta,
) -> Result<ExplorerBundle> {
    if variants.is_empty() {
        return Err(Error::Precondition("no datasets to export".into()));
    }
    let mut seen = BTreeSet::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut datasets = Vec::with_capacity(variants.len());
    for (variant, refs, report) in variants {
        let id = variant.dataset_id();
        if !seen.insert(id.clone()) {
            return Err(Error::Integrity(format!("dataset `{id}` exported twice")));
        }
        let g = build_graph(refs)?;
        let report_ids: Vec<&str> = report.nodes.iter().map(|n| n.author_id.as_str()).collect();
        let graph_ids: Vec<&str> = g.nodes().iter().map(String::as_str).collect();
        if report_ids != graph_ids {
            return Err(Error::Integrity(format!(
                "metrics for `{id}` do not match its reference set"
            )));
        }
        for n in g.nodes() {
            if !authors.contains(n) {
                return Err(Error::Integrity(format!(
                    "dataset `{id}` references unknown author `{n}`"
                )));
            }
            used.insert(n.clone());
        }
        let edges = g
            .edges()
            .map(|(i, j, w)| BundleEdge {
                citing: g.nodes()[i].clone(),
                cited: g.nodes()[j].clone(),
                weight: w,
            })
            .collect();
        let per_node = report
            .nodes
            .iter()
            .map(|n| {
                (
                    n.author_id.clone(),
                    NodeEntry {
                        in_total: n.in_total,
                        out_total: n.out_total,
                        in_degree: n.in_degree,
                        out_degree: n.out_degree,
                        betweenness: n.betweenness,
                        community: n.community,
                    },
                )
            })
            .collect();
        datasets.push(BundleDataset {
            dataset_id: id,
            label: variant.label(),
            nodes: g.nodes().to_vec(),
            edges,
            per_node,
            reciprocity: report.reciprocity,
            modularity: report.modularity,
        });
    }
    let authors = authors
        .authors
        .iter()
        .filter(|a| used.contains(&a.author_id))
        .map(|a| BundleAuthor {
            author_id: a.author_id.clone(),
            display_name: a.display_name.clone(),
            birth_year: a.birth_year,
            death_year: a.death_year,
        })
        .collect();
    Ok(ExplorerBundle {
        authors,
        datasets,
        meta,
    })
}

pub fn bundle_to_json(bundle: &ExplorerBundle) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec(bundle)?;
    out.push(b'\n');
    Ok(out)
}

pub fn bundle_from_json(bytes: &[u8]) -> Result<ExplorerBundle> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Write `path` and a gzip copy at `path.gz`.
pub fn write_bundle(path: &Path, bundle: &ExplorerBundle) -> Result<()> {
    let json = bundle_to_json(bundle)?;
    std::fs::write(path, &json).map_err(|e| Error::io(path, e))?;
    let gz_path = path.with_extension("json.gz");
    // Default header has mtime 0, so the archive is reproducible.
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&json).map_err(|e| Error::io(&gz_path, e))?;
    let gz = enc.finish().map_err(|e| Error::io(&gz_path, e))?;
    std::fs::write(&gz_path, gz).map_err(|e| Error::io(&gz_path, e))
}

/// Read a bundle, transparently decompressing `.gz` files.
pub fn read_bundle(path: &Path) -> Result<ExplorerBundle> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut json = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut json)
            .map_err(|e| Error::io(path, e))?;
        bundle_from_json(&json)
    } else {
        bundle_from_json(&raw)
    }
}
