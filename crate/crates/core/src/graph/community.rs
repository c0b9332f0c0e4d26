use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ReferenceGraph;
use crate::error::{Error, Result};

/// A move must beat staying put by more than this.
const MOVE_EPSILON: f64 = 1e-12;
const MAX_PASSES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    /// Community of each node, aligned with `ReferenceGraph::nodes`.
    /// Ids are dense and numbered by first appearance in node order.
    pub assignment: Vec<usize>,
    pub modularity: f64,
}

impl CommunityPartition {
    pub fn community_count(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    pub fn by_author(&self, g: &ReferenceGraph) -> BTreeMap<String, usize> {
        g.nodes()
            .iter()
            .cloned()
            .zip(self.assignment.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LouvainOutcome {
    pub partition: CommunityPartition,
    /// Modularity of the singleton start followed by the partition after each phase.
    pub history: Vec<f64>,
}

/// Symmetrized degrees `k_i` and total `2m` of `W + Wᵀ`.
fn sym_degrees(g: &ReferenceGraph) -> (Vec<u128>, u128) {
    let mut k = vec![0u128; g.node_count()];
    for (i, j, w) in g.edges() {
        k[i] += w as u128;
        k[j] += w as u128;
    }
    let two_m = k.iter().sum();
    (k, two_m)
}

/// Newman modularity of `assignment` on `W + Wᵀ`.
///
/// `Q = Σ_c [ L_c / 2m − γ (K_c / 2m)² ]`, with `L_c` the within-community
/// symmetric weight counted over ordered pairs and `K_c` the summed degree.
/// With `γ = 1` the numerator is computed exactly in integers.
pub fn modularity(g: &ReferenceGraph, assignment: &[usize], resolution: f64) -> Result<f64> {
    if assignment.len() != g.node_count() {
        return Err(Error::Input(format!(
            "assignment covers {} of {} nodes",
            assignment.len(),
            g.node_count()
        )));
    }
    if !resolution.is_finite() || resolution <= 0.0 {
        return Err(Error::Input(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let (k, two_m) = sym_degrees(g);
    if two_m == 0 {
        return Err(Error::UndefinedMetric(
            "modularity of a graph without edges".into(),
        ));
    }
    let mut internal: BTreeMap<usize, u128> = BTreeMap::new();
    let mut degree: BTreeMap<usize, u128> = BTreeMap::new();
    for (i, j, w) in g.edges() {
        if assignment[i] == assignment[j] {
            // Both A_ij and A_ji.
            *internal.entry(assignment[i]).or_insert(0) += 2 * w as u128;
        }
    }
    for (i, &c) in assignment.iter().enumerate() {
        *degree.entry(c).or_insert(0) += k[i];
    }
    let sum_l: u128 = internal.values().sum();
    let sum_k2: u128 = degree.values().map(|d| d * d).sum();
    let denom = (two_m * two_m) as f64;
    if resolution == 1.0 {
        let num = (two_m * sum_l) as i128 - sum_k2 as i128;
        Ok(num as f64 / denom)
    } else {
        Ok(((two_m * sum_l) as f64 - resolution * sum_k2 as f64) / denom)
    }
}

/// Seeded Louvain community detection on the symmetrized graph.
#[derive(Debug, Clone, Copy)]
pub struct Louvain {
    pub seed: u64,
    pub resolution: f64,
}

impl Default for Louvain {
    fn default() -> Self {
        Louvain {
            seed: 0,
            resolution: 1.0,
        }
    }
}

pub fn louvain_partition(g: &ReferenceGraph, seed: u64) -> Result<CommunityPartition> {
    Ok(Louvain {
        seed,
        resolution: 1.0,
    }
    .run(g)?
    .partition)
}

/// One aggregation level: symmetric adjacency without self loops plus the
/// weight folded into each super-node.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
}

impl Level {
    fn from_graph(g: &ReferenceGraph) -> Self {
        let n = g.node_count();
        let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, j, w) in g.edges() {
            *acc[i].entry(j).or_insert(0.0) += w as f64;
            *acc[j].entry(i).or_insert(0.0) += w as f64;
        }
        let adj: Vec<Vec<(usize, f64)>> =
            acc.into_iter().map(|m| m.into_iter().collect()).collect();
        let degree = adj
            .iter()
            .map(|es| es.iter().map(|&(_, w)| w).sum())
            .collect();
        Level { adj, degree }
    }

    fn aggregate(&self, comm: &[usize], count: usize) -> Self {
        let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); count];
        let mut degree = vec![0.0; count];
        for (i, es) in self.adj.iter().enumerate() {
            degree[comm[i]] += self.degree[i];
            for &(j, w) in es {
                if comm[i] != comm[j] {
                    *acc[comm[i]].entry(comm[j]).or_insert(0.0) += w;
                }
            }
        }
        Level {
            adj: acc.into_iter().map(|m| m.into_iter().collect()).collect(),
            degree,
        }
    }

    /// Repeated local-move passes. Returns the community of each node and
    /// whether any node changed community.
    fn local_moves(&self, rng: &mut ChaCha8Rng, resolution: f64, two_m: f64) -> (Vec<usize>, bool) {
        let n = self.adj.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot: Vec<f64> = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut links = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any = false;
        for _ in 0..MAX_PASSES {
            let mut moved = false;
            for &i in &order {
                let ci = comm[i];
                let ki = self.degree[i];
                touched.clear();
                for &(j, w) in &self.adj[i] {
                    let c = comm[j];
                    if links[c] == 0.0 {
                        touched.push(c);
                    }
                    links[c] += w;
                }
                tot[ci] -= ki;
                let score = |c: usize, links: &[f64]| links[c] - resolution * ki * tot[c] / two_m;
                let stay = score(ci, &links);
                let mut best = ci;
                let mut best_score = stay + MOVE_EPSILON;
                touched.sort_unstable();
                for &c in &touched {
                    if c == ci {
                        continue;
                    }
                    let s = score(c, &links);
                    if s > best_score {
                        best = c;
                        best_score = s;
                    }
                }
                tot[best] += ki;
                comm[i] = best;
                if best != ci {
                    moved = true;
                }
                for &c in &touched {
                    links[c] = 0.0;
                }
            }
            if !moved {
                break;
            }
            any = true;
        }
        (comm, any)
    }
}

/// Renumber labels densely by first appearance.
fn canonical(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

impl Louvain {
    pub fn run(&self, g: &ReferenceGraph) -> Result<LouvainOutcome> {
        let n = g.node_count();
        let singletons: Vec<usize> = (0..n).collect();
        let start = modularity(g, &singletons, self.resolution)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut level = Level::from_graph(g);
        let two_m: f64 = level.degree.iter().sum();
        let mut membership = singletons;
        let mut history = vec![start];
        loop {
            let (comm, moved) = level.local_moves(&mut rng, self.resolution, two_m);
            if !moved {
                break;
            }
            let (comm, count) = canonical(&comm);
            for m in membership.iter_mut() {
                *m = comm[*m];
            }
            history.push(modularity(g, &membership, self.resolution)?);
            if count == level.adj.len() {
                break;
            }
            level = level.aggregate(&comm, count);
        }
        let (assignment, _) = canonical(&membership);
        let q = modularity(g, &assignment, self.resolution)?;
        Ok(LouvainOutcome {
            partition: CommunityPartition {
                assignment,
                modularity: q,
            },
            history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::graph;

    fn two_triangles() -> ReferenceGraph {
        graph(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)])
    }

    #[test]
    fn single_community_is_zero() {
        let g = two_triangles();
        assert_eq!(modularity(&g, &[0; 6], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn two_triangles_value() {
        // 2m = 14, each side L = 6, K = 7: Q = 2(6/14 - 1/4) = 5/14.
        let g = two_triangles();
        assert_eq!(
            modularity(&g, &[0, 0, 0, 1, 1, 1], 1.0).unwrap(),
            5.0 / 14.0
        );
    }

    #[test]
    fn errors() {
        let g = two_triangles();
        assert!(matches!(modularity(&g, &[0; 5], 1.0), Err(Error::Input(_))));
        assert!(matches!(
            modularity(&graph(3, &[]), &[0; 3], 1.0),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(louvain_partition(&graph(3, &[]), 0).is_err());
    }

    #[test]
    fn louvain_finds_triangles() {
        let g = two_triangles();
        let out = Louvain::default().run(&g).unwrap();
        assert_eq!(out.partition.assignment, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(out.partition.modularity, 5.0 / 14.0);
        assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn louvain_is_seed_deterministic() {
        let g = two_triangles();
        for seed in 0..5 {
            assert_eq!(
                louvain_partition(&g, seed).unwrap(),
                louvain_partition(&g, seed).unwrap()
            );
        }
    }

    #[test]
    fn canonical_numbering() {
        assert_eq!(canonical(&[7, 3, 7, 9]), (vec![0, 1, 0, 2], 3));
    }
}
