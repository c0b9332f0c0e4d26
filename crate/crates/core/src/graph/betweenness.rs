use rayon::prelude::*;

use super::ReferenceGraph;

const SOURCE_CHUNK: usize = 32;

/// Unweighted directed betweenness (Brandes), unnormalized.
///
/// Sources are processed in fixed chunks and the partial sums are merged in
/// chunk order, so the result does not depend on the thread count.
pub fn betweenness_centrality(g: &ReferenceGraph) -> Vec<f64> {
    let n = g.node_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut scratch = Scratch::new(n);
            for &s in chunk {
                scratch.accumulate(g, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for p in partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    total
}

/// Scale by `1 / ((n-1)(n-2))`, the number of ordered pairs excluding the node.
pub fn normalize_betweenness(raw: &[f64]) -> Vec<f64> {
    let n = raw.len();
    if n <= 2 {
        return vec![0.0; n];
    }
    let scale = 1.0 / ((n - 1) as f64 * (n - 2) as f64);
    raw.iter().map(|x| x * scale).collect()
}

struct Scratch {
    stack: Vec<usize>,
    preds: Vec<Vec<usize>>,
    sigma: Vec<f64>,
    dist: Vec<i64>,
    delta: Vec<f64>,
    queue: std::collections::VecDeque<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            stack: Vec::with_capacity(n),
            preds: vec![Vec::new(); n],
            sigma: vec![0.0; n],
            dist: vec![-1; n],
            delta: vec![0.0; n],
            queue: Default::default(),
        }
    }

    fn accumulate(&mut self, g: &ReferenceGraph, s: usize, acc: &mut [f64]) {
        for v in 0..g.node_count() {
            self.preds[v].clear();
            self.sigma[v] = 0.0;
            self.dist[v] = -1;
            self.delta[v] = 0.0;
        }
        self.stack.clear();
        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.stack.push(v);
            for &(w, _) in g.out_edges(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
        while let Some(w) = self.stack.pop() {
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}
