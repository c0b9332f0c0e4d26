//! Brute-force reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refnet_core::corpus::{AuthorRecord, MatchPolicy, TextRecord};
use refnet_core::graph::ReferenceGraph;
use refnet_core::matcher::{BoundaryRule, CapMode, ReferenceRecord, ScanConfig};

// ---------------------------------------------------------------- matcher

fn word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn standalone(chars: &[char], s: usize, e: usize, rule: BoundaryRule) -> bool {
    if s > 0 && word(chars[s - 1]) {
        return false;
    }
    match chars.get(e) {
        None => true,
        Some(&c) if word(c) => false,
        Some(&c) if apostrophe(c) => match chars.get(e + 1) {
            None => true,
            Some(&n) if !word(n) => true,
            Some('s') if rule == BoundaryRule::WordBoundaryPlusPossessive => {
                !chars.get(e + 2).is_some_and(|&c| word(c))
            }
            Some(_) => false,
        },
        Some(_) => true,
    }
}

/// Try every author's surface at every char position of the body.
pub fn naive_scan(
    text: &TextRecord,
    authors: &[AuthorRecord],
    cfg: &ScanConfig,
) -> Vec<ReferenceRecord> {
    let chars: Vec<char> = text.body.chars().collect();
    let mut hits: Vec<(usize, usize, &str)> = Vec::new();
    for a in authors {
        if a.policy == MatchPolicy::Excluded || a.author_id == text.author_id {
            continue;
        }
        let pat: Vec<char> = a.match_name.chars().collect();
        if pat.is_empty() || pat.len() > chars.len() {
            continue;
        }
        for s in 0..=chars.len() - pat.len() {
            let e = s + pat.len();
            if chars[s..e] == pat[..] && standalone(&chars, s, e, cfg.boundary_rule) {
                hits.push((s, e, &a.author_id));
            }
        }
    }
    hits.sort_by(|x, y| (x.0, x.2).cmp(&(y.0, y.2)));
    let mut used: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0;
    let mut out = Vec::new();
    for (s, e, id) in hits {
        let counter = match cfg.cap_mode {
            CapMode::PerCitedAuthor => used.entry(id).or_insert(0),
            CapMode::PerText => &mut total,
        };
        if *counter >= cfg.per_text_target_cap {
            continue;
        }
        *counter += 1;
        let before = cfg.window_size / 2;
        let after = cfg.window_size - before;
        let from = s.saturating_sub(before);
        let to = (e + after).min(chars.len());
        out.push(ReferenceRecord {
            citing_author_id: text.author_id.clone(),
            cited_author_id: id.to_string(),
            text_id: text.text_id.clone(),
            offset: s,
            context: chars[from..to].iter().collect(),
        });
    }
    out
}

// ---------------------------------------------------------------- graphs

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random digraph on `n` nodes, no self loops, weights in 1..=max_w.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, max_w: u64) -> ReferenceGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(p) {
                edges.push((i, j, rng.random_range(1..=max_w)));
            }
        }
    }
    ReferenceGraph::from_edges((0..n).map(|i| format!("a{i:02}")).collect(), &edges).unwrap()
}

pub fn graph_from(n: usize, edges: &[(usize, usize)]) -> ReferenceGraph {
    let e: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1)).collect();
    ReferenceGraph::from_edges((0..n).map(|i| format!("a{i:02}")).collect(), &e).unwrap()
}

pub fn two_triangles() -> ReferenceGraph {
    graph_from(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
}

pub fn k4() -> ReferenceGraph {
    let mut e = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                e.push((i, j));
            }
        }
    }
    graph_from(4, &e)
}

/// Every simple directed path from `s` to `t`.
fn simple_paths(m: &[Vec<u64>], s: usize, t: usize) -> Vec<Vec<usize>> {
    fn go(m: &[Vec<u64>], v: usize, t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if v == t {
            out.push(path.clone());
            return;
        }
        for w in 0..m.len() {
            if m[v][w] > 0 && !path.contains(&w) {
                path.push(w);
                go(m, w, t, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(m, s, t, &mut vec![s], &mut out);
    out
}

/// Betweenness by enumerating all simple paths and keeping the shortest.
pub fn betweenness_oracle(g: &ReferenceGraph) -> Vec<f64> {
    let m = g.dense_matrix();
    let n = m.len();
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let paths = simple_paths(&m, s, t);
            let Some(shortest) = paths.iter().map(Vec::len).min() else {
                continue;
            };
            let shortest: Vec<&Vec<usize>> = paths.iter().filter(|p| p.len() == shortest).collect();
            let sigma = shortest.len() as f64;
            for (v, bv) in b.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = shortest.iter().filter(|p| p.contains(&v)).count() as f64;
                *bv += through / sigma;
            }
        }
    }
    b
}

/// Mutual ordered pairs over all ordered pairs with an edge.
pub fn reciprocity_oracle(g: &ReferenceGraph) -> Option<f64> {
    let m = g.dense_matrix();
    let (mut mutual, mut edges) = (0u64, 0u64);
    for (i, row) in m.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if w > 0 {
                edges += 1;
                if m[j][i] > 0 {
                    mutual += 1;
                }
            }
        }
    }
    (edges > 0).then(|| mutual as f64 / edges as f64)
}

/// Direct double sum of the modularity definition on `W + Wᵀ`, exact in
/// integers until the final division.
pub fn modularity_oracle(g: &ReferenceGraph, c: &[usize]) -> Option<f64> {
    let m = g.dense_matrix();
    let n = m.len();
    let sym = |i: usize, j: usize| (m[i][j] + m[j][i]) as i128;
    let k: Vec<i128> = (0..n).map(|i| (0..n).map(|j| sym(i, j)).sum()).collect();
    let two_m: i128 = k.iter().sum();
    if two_m == 0 {
        return None;
    }
    let mut num: i128 = 0;
    for i in 0..n {
        for j in 0..n {
            if c[i] == c[j] {
                num += two_m * sym(i, j) - k[i] * k[j];
            }
        }
    }
    Some(num as f64 / (two_m * two_m) as f64)
}

/// All set partitions of `n` nodes as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max + 1 {
            if i == 0 && c > 0 {
                break;
            }
            cur.push(c);
            go(i + 1, n, if i == 0 { 0 } else { max.max(c) }, cur, out);
            cur.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    go(0, n, 0, &mut Vec::new(), &mut out);
    out
}

/// Best modularity over every partition.
pub fn exhaustive_best(g: &ReferenceGraph) -> (f64, Vec<usize>) {
    all_partitions(g.node_count())
        .into_iter()
        .filter_map(|p| modularity_oracle(g, &p).map(|q| (q, p)))
        .fold((f64::NEG_INFINITY, vec![]), |best, cand| {
            if cand.0 > best.0 {
                cand
            } else {
                best
            }
        })
}
