use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    betweenness_centrality, degree_centrality, in_totals, normalize_betweenness, out_totals,
    reciprocity, top_share, Direction, Louvain, ReferenceGraph,
};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsOptions {
    pub seed: u64,
    pub resolution: f64,
    /// Report `top-<k>` shares for the k authors with most incoming references.
    pub top_k: Vec<usize>,
    /// Named author sets whose share is reported under their name.
    pub share_sets: BTreeMap<String, BTreeSet<String>>,
    pub normalized_betweenness: bool,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            seed: 0,
            resolution: 1.0,
            top_k: vec![2, 10],
            share_sets: BTreeMap::new(),
            normalized_betweenness: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub author_id: String,
    pub in_total: u64,
    pub out_total: u64,
    pub in_degree: usize,
    pub out_degree: usize,
    pub betweenness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betweenness_normalized: Option<f64>,
    pub community: Option<usize>,
}

/// Scalars are `None` when the graph has no edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub nodes: Vec<NodeMetrics>,
    pub total_weight: u64,
    pub reciprocity: Option<f64>,
    pub modularity: Option<f64>,
    pub communities: Option<usize>,
    pub modularity_history: Vec<f64>,
    pub top_shares: BTreeMap<String, f64>,
}

impl MetricsReport {
    pub fn node(&self, author_id: &str) -> Option<&NodeMetrics> {
        self.nodes.iter().find(|n| n.author_id == author_id)
    }
}

/// Authors ranked by incoming total, descending, ties by id.
fn top_k_set(g: &ReferenceGraph, inc: &[u64], k: usize) -> BTreeSet<String> {
    let mut idx: Vec<usize> = (0..g.node_count()).collect();
    idx.sort_by(|&a, &b| {
        inc[b]
            .cmp(&inc[a])
            .then_with(|| g.nodes()[a].cmp(&g.nodes()[b]))
    });
    idx.into_iter()
        .take(k)
        .map(|i| g.nodes()[i].clone())
        .collect()
}

pub fn compute_metrics(g: &ReferenceGraph, opts: &MetricsOptions) -> Result<MetricsReport> {
    let inc = in_totals(g);
    let out = out_totals(g);
    let in_deg = degree_centrality(g, Direction::In);
    let out_deg = degree_centrality(g, Direction::Out);
    let btw = betweenness_centrality(g);
    let btw_norm = opts
        .normalized_betweenness
        .then(|| normalize_betweenness(&btw));

    let has_edges = g.edge_count() > 0;
    let (assignment, q, count, history) = if has_edges {
        let outcome = Louvain {
            seed: opts.seed,
            resolution: opts.resolution,
        }
        .run(g)?;
        let count = outcome.partition.community_count();
        (
            Some(outcome.partition.assignment),
            Some(outcome.partition.modularity),
            Some(count),
            outcome.history,
        )
    } else {
        (None, None, None, Vec::new())
    };

    let mut top_shares = BTreeMap::new();
    if has_edges {
        for &k in &opts.top_k {
            top_shares.insert(format!("top-{k}"), top_share(g, &top_k_set(g, &inc, k))?);
        }
        for (name, set) in &opts.share_sets {
            top_shares.insert(name.clone(), top_share(g, set)?);
        }
    }

    let nodes = (0..g.node_count())
        .map(|i| NodeMetrics {
            author_id: g.nodes()[i].clone(),
            in_total: inc[i],
            out_total: out[i],
            in_degree: in_deg[i],
            out_degree: out_deg[i],
            betweenness: btw[i],
            betweenness_normalized: btw_norm.as_ref().map(|b| b[i]),
            community: assignment.as_ref().map(|a| a[i]),
        })
        .collect();

    Ok(MetricsReport {
        nodes,
        total_weight: g.total_weight(),
        reciprocity: if has_edges {
            Some(reciprocity(g)?)
        } else {
            None
        },
        modularity: q,
        communities: count,
        modularity_history: history,
        top_shares,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::graph;

    #[test]
    fn conservation_and_lookup() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 0), (3, 0)]);
        let r = compute_metrics(&g, &MetricsOptions::default()).unwrap();
        let inc: u64 = r.nodes.iter().map(|n| n.in_total).sum();
        let out: u64 = r.nodes.iter().map(|n| n.out_total).sum();
        assert_eq!((inc, out, r.total_weight), (4, 4, 4));
        assert_eq!(r.node("n0").unwrap().in_degree, 2);
        assert!(r.node("nx").is_none());
    }

    #[test]
    fn top_shares_include_named_sets() {
        let g = graph(3, &[(0, 1), (2, 1), (1, 0)]);
        let opts = MetricsOptions {
            top_k: vec![1, 3],
            share_sets: [(
                "pair".to_string(),
                ["n0".to_string(), "n1".to_string()].into(),
            )]
            .into(),
            ..Default::default()
        };
        let r = compute_metrics(&g, &opts).unwrap();
        assert_eq!(r.top_shares["top-1"], 2.0 / 3.0);
        assert_eq!(r.top_shares["top-3"], 1.0);
        assert_eq!(r.top_shares["pair"], 1.0);
    }

    #[test]
    fn empty_graph_has_no_scalars() {
        let r = compute_metrics(&graph(0, &[]), &MetricsOptions::default()).unwrap();
        assert!(r.nodes.is_empty());
        assert_eq!((r.reciprocity, r.modularity), (None, None));
        assert!(r.top_shares.is_empty());
    }
}
