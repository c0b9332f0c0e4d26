//! Weighted directed reference graph and the metrics computed over it.
//!
//! `W[i][j]` counts references made by author `i` to author `j`. Degree and
//! betweenness treat every positive entry as an unweighted link; community
//! detection and modularity work on the symmetrized projection `W + Wᵀ`.

mod betweenness;
mod community;
mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::dataset::ReferenceSet;
use crate::error::{Error, Result};

pub use betweenness::{betweenness_centrality, normalize_betweenness};
pub use community::{louvain_partition, modularity, CommunityPartition, Louvain, LouvainOutcome};
pub use report::{compute_metrics, MetricsOptions, MetricsReport, NodeMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    /// Outgoing `(target, weight)` lists, sorted by target, weights > 0.
    out: Vec<Vec<(usize, u64)>>,
}

impl ReferenceGraph {
    /// Build from explicit nodes and `(citing, cited, weight)` edges.
    /// Repeated edges accumulate; zero weights are ignored.
    pub fn from_edges(nodes: Vec<String>, edges: &[(usize, usize, u64)]) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate node `{n}`")));
            }
        }
        let mut acc: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); nodes.len()];
        for &(i, j, w) in edges {
            if i >= nodes.len() || j >= nodes.len() {
                return Err(Error::Input(format!(
                    "edge {i}->{j} outside {} nodes",
                    nodes.len()
                )));
            }
            if i == j {
                return Err(Error::Integrity(format!(
                    "self-reference on `{}`",
                    nodes[i]
                )));
            }
            if w > 0 {
                *acc[i].entry(j).or_insert(0) += w;
            }
        }
        Ok(ReferenceGraph {
            nodes,
            index,
            out: acc.into_iter().map(|m| m.into_iter().collect()).collect(),
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn index_of(&self, author_id: &str) -> Option<usize> {
        self.index.get(author_id).copied()
    }

    pub fn out_edges(&self, i: usize) -> &[(usize, u64)] {
        &self.out[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> u64 {
        self.out[i]
            .binary_search_by_key(&j, |&(t, _)| t)
            .map_or(0, |k| self.out[i][k].1)
    }

    /// All edges `(citing, cited, weight)` in (citing, cited) order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, es)| es.iter().map(move |&(j, w)| (i, j, w)))
    }

    /// Number of ordered pairs with a positive weight.
    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    pub fn dense_matrix(&self) -> Vec<Vec<u64>> {
        let n = self.node_count();
        let mut m = vec![vec![0u64; n]; n];
        for (i, j, w) in self.edges() {
            m[i][j] = w;
        }
        m
    }

    /// Relabel nodes: node `i` of `self` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        if perm.len() != n
            || perm.iter().collect::<BTreeSet<_>>().len() != n
            || perm.iter().any(|&p| p >= n)
        {
            return Err(Error::Input("not a permutation".into()));
        }
        let mut nodes = vec![String::new(); n];
        for (i, &p) in perm.iter().enumerate() {
            nodes[p] = self.nodes[i].clone();
        }
        let edges: Vec<_> = self
            .edges()
            .map(|(i, j, w)| (perm[i], perm[j], w))
            .collect();
        Self::from_edges(nodes, &edges)
    }
}

/// `W[i][j]` = number of records citing `j` from `i`. Nodes are the authors
/// with at least one incident record, sorted by id.
pub fn build_graph(refs: &ReferenceSet) -> Result<ReferenceGraph> {
    let nodes: BTreeSet<&str> = refs
        .records
        .iter()
        .flat_map(|r| [r.citing_author_id.as_str(), r.cited_author_id.as_str()])
        .collect();
    let nodes: Vec<String> = nodes.into_iter().map(str::to_owned).collect();
    let index: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let edges: Vec<(usize, usize, u64)> = refs
        .records
        .iter()
        .map(|r| {
            (
                index[r.citing_author_id.as_str()],
                index[r.cited_author_id.as_str()],
                1,
            )
        })
        .collect();
    ReferenceGraph::from_edges(nodes, &edges)
}

pub fn in_totals(g: &ReferenceGraph) -> Vec<u64> {
    let mut t = vec![0u64; g.node_count()];
    for (_, j, w) in g.edges() {
        t[j] += w;
    }
    t
}

pub fn out_totals(g: &ReferenceGraph) -> Vec<u64> {
    (0..g.node_count())
        .map(|i| g.out_edges(i).iter().map(|&(_, w)| w).sum())
        .collect()
}

/// Number of distinct counterpart authors (unweighted).
pub fn degree_centrality(g: &ReferenceGraph, direction: Direction) -> Vec<usize> {
    match direction {
        Direction::Out => (0..g.node_count()).map(|i| g.out_edges(i).len()).collect(),
        Direction::In => {
            let mut d = vec![0usize; g.node_count()];
            for (_, j, _) in g.edges() {
                d[j] += 1;
            }
            d
        }
    }
}

/// Fraction of directed edges whose reverse edge also exists.
pub fn reciprocity(g: &ReferenceGraph) -> Result<f64> {
    let edges = g.edge_count();
    if edges == 0 {
        return Err(Error::UndefinedMetric(
            "reciprocity of a graph without edges".into(),
        ));
    }
    let mutual = g.edges().filter(|&(i, j, _)| g.weight(j, i) > 0).count();
    Ok(mutual as f64 / edges as f64)
}

/// Share of all references received by `targets`.
pub fn top_share(g: &ReferenceGraph, targets: &BTreeSet<String>) -> Result<f64> {
    let total = g.total_weight();
    if total == 0 {
        return Err(Error::UndefinedMetric(
            "share of a graph without edges".into(),
        ));
    }
    let inc = in_totals(g);
    let received: u64 = targets
        .iter()
        .filter_map(|t| g.index_of(t))
        .map(|i| inc[i])
        .sum();
    Ok(received as f64 / total as f64)
}

/// Dense adjacency with author ids as header row and first column.
pub fn write_dense_csv(path: &Path, g: &ReferenceGraph) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![String::new()];
    header.extend(g.nodes().iter().cloned());
    w.write_record(&header)?;
    for (i, row) in g.dense_matrix().into_iter().enumerate() {
        let mut rec = vec![g.nodes()[i].clone()];
        rec.extend(row.into_iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Sparse `citing,cited,weight` triples.
pub fn write_triples_csv(path: &Path, g: &ReferenceGraph) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["citing", "cited", "weight"])?;
    for (i, j, wt) in g.edges() {
        w.write_record([
            g.nodes()[i].as_str(),
            g.nodes()[j].as_str(),
            wt.to_string().as_str(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Variant;
    use crate::matcher::ReferenceRecord;

    fn set(pairs: &[(&str, &str)]) -> ReferenceSet {
        ReferenceSet {
            variant: Variant::Expanded,
            records: pairs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| ReferenceRecord {
                    citing_author_id: a.to_string(),
                    cited_author_id: b.to_string(),
                    text_id: "pg1".into(),
                    offset: i,
                    context: String::new(),
                })
                .collect(),
            author_universe: pairs
                .iter()
                .flat_map(|(a, b)| [a.to_string(), b.to_string()])
                .collect(),
        }
    }

    pub(crate) fn graph(n: usize, edges: &[(usize, usize)]) -> ReferenceGraph {
        let nodes = (0..n).map(|i| format!("n{i}")).collect();
        let e: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1)).collect();
        ReferenceGraph::from_edges(nodes, &e).unwrap()
    }

    #[test]
    fn empty_set_gives_empty_graph() {
        let g = build_graph(&set(&[])).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn counts_records_per_pair() {
        let g = build_graph(&set(&[("A", "B"), ("A", "B"), ("A", "B"), ("B", "A")])).unwrap();
        let (a, b) = (g.index_of("A").unwrap(), g.index_of("B").unwrap());
        assert_eq!(g.weight(a, b), 3);
        assert_eq!(g.weight(b, a), 1);
        assert_eq!(g.weight(a, a), 0);
    }

    #[test]
    fn self_reference_is_rejected() {
        assert!(matches!(
            build_graph(&set(&[("A", "A")])),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn star_degrees() {
        let g = build_graph(&set(&[("A", "P"), ("B", "P"), ("C", "P"), ("D", "P")])).unwrap();
        let p = g.index_of("P").unwrap();
        assert_eq!(degree_centrality(&g, Direction::In)[p], 4);
        assert_eq!(out_totals(&g)[p], 0);
        assert_eq!(top_share(&g, &["P".to_string()].into()).unwrap(), 1.0);
    }

    #[test]
    fn reciprocity_two_thirds() {
        let g = graph(3, &[(0, 1), (1, 0), (0, 2)]);
        assert_eq!(reciprocity(&g).unwrap(), 2.0 / 3.0);
        assert!(matches!(
            reciprocity(&graph(2, &[])),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn share_seven_of_thirty_five() {
        // 5 authors; targets {t1, t2} receive 7 of 35 references.
        let mut pairs = Vec::new();
        pairs.extend(std::iter::repeat_n(("a", "t1"), 4));
        pairs.extend(std::iter::repeat_n(("b", "t2"), 3));
        pairs.extend(std::iter::repeat_n(("t1", "a"), 20));
        pairs.extend(std::iter::repeat_n(("t2", "b"), 8));
        let g = build_graph(&set(&pairs)).unwrap();
        assert_eq!(g.total_weight(), 35);
        let s = top_share(&g, &["t1".to_string(), "t2".to_string()].into()).unwrap();
        assert_eq!(s, 0.2);
        assert!(matches!(
            top_share(&graph(2, &[]), &BTreeSet::new()),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn exports() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_graph(&set(&[("A", "B"), ("A", "B"), ("B", "C")])).unwrap();
        write_dense_csv(&dir.path().join("d.csv"), &g).unwrap();
        write_triples_csv(&dir.path().join("t.csv"), &g).unwrap();
        let dense = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
        assert_eq!(dense, ",A,B,C\nA,0,2,0\nB,0,0,1\nC,0,0,0\n");
        let triples = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(triples, "citing,cited,weight\nA,B,2\nB,C,1\n");
    }
}
