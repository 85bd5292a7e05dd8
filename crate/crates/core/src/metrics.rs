//! Structural metrics of the interference layer: order, diameter, Wiener
//! index, density, clustering coefficient and average betweenness.
//!
//! All path metrics use unweighted hop distances. On disconnected graphs
//! only finite distances count: the diameter is the largest finite
//! eccentricity and the Wiener index sums distances within components.

use std::collections::VecDeque;

use serde::Serialize;

use crate::graph::MultilayerGraph;

/// Undirected simple graph as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    adj: Vec<Vec<usize>>,
}

impl SimpleGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        SimpleGraph { adj }
    }

    /// Layer b over the full (pruned) vertex set.
    pub fn from_interference(g: &MultilayerGraph) -> Self {
        let edges: Vec<(usize, usize)> = g.interference().edges().iter().map(|e| e.endpoints).collect();
        Self::from_edges(g.nodes().len(), &edges)
    }

    pub fn order(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Hop distances from `source`; `None` when unreachable.
    pub fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.order()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &w in &self.adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Contribution of an isolated vertex to the clustering coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum IsolatedClustering {
    /// Its closed neighbourhood is a single vertex, vacuously complete.
    #[default]
    One,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricsOptions {
    pub isolated: IsolatedClustering,
    pub normalized_betweenness: bool,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            isolated: IsolatedClustering::One,
            normalized_betweenness: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub order: usize,
    pub diameter: usize,
    pub wiener_index: u64,
    pub density: f64,
    pub clustering_coefficient: f64,
    pub avg_betweenness: f64,
}

impl MetricsReport {
    pub const NAMES: [&'static str; 6] = [
        "order",
        "diameter",
        "wiener_index",
        "density",
        "clustering_coefficient",
        "avg_betweenness",
    ];

    pub fn compute(g: &SimpleGraph, opts: MetricsOptions) -> Self {
        let (diameter, wiener_index) = distance_summary(g);
        MetricsReport {
            order: order(g),
            diameter,
            wiener_index,
            density: density(g),
            clustering_coefficient: clustering_coefficient(g, opts.isolated),
            avg_betweenness: avg_betweenness(g, opts.normalized_betweenness),
        }
    }

    /// `(name, value)` pairs in [`Self::NAMES`] order.
    pub fn values(&self) -> [(&'static str, f64); 6] {
        [
            ("order", self.order as f64),
            ("diameter", self.diameter as f64),
            ("wiener_index", self.wiener_index as f64),
            ("density", self.density),
            ("clustering_coefficient", self.clustering_coefficient),
            ("avg_betweenness", self.avg_betweenness),
        ]
    }
}

pub fn order(g: &SimpleGraph) -> usize {
    g.order()
}

/// (diameter, Wiener index) from one BFS per vertex.
fn distance_summary(g: &SimpleGraph) -> (usize, u64) {
    let mut diameter = 0;
    let mut total = 0u64;
    for s in 0..g.order() {
        for d in g.bfs(s).into_iter().flatten() {
            diameter = diameter.max(d);
            total += d as u64;
        }
    }
    (diameter, total / 2)
}

pub fn diameter(g: &SimpleGraph) -> usize {
    distance_summary(g).0
}

pub fn wiener_index(g: &SimpleGraph) -> u64 {
    distance_summary(g).1
}

/// `2|E| / (|V|(|V|−1))`, 0 for fewer than two vertices.
pub fn density(g: &SimpleGraph) -> f64 {
    let n = g.order();
    if n < 2 {
        return 0.0;
    }
    2.0 * g.edge_count() as f64 / (n * (n - 1)) as f64
}

/// Density of each vertex's closed neighbourhood, averaged over vertices.
pub fn clustering_coefficient(g: &SimpleGraph, isolated: IsolatedClustering) -> f64 {
    let n = g.order();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = (0..n).map(|v| local_density(g, v, isolated)).sum();
    total / n as f64
}

pub fn local_density(g: &SimpleGraph, v: usize, isolated: IsolatedClustering) -> f64 {
    let neighbors = g.neighbors(v);
    let k = neighbors.len() + 1;
    if k == 1 {
        return match isolated {
            IsolatedClustering::One => 1.0,
            IsolatedClustering::Zero => 0.0,
        };
    }
    // edges from v to each neighbour, plus edges among neighbours
    let mut edges = neighbors.len();
    for (i, &a) in neighbors.iter().enumerate() {
        edges += neighbors[i + 1..].iter().filter(|&&b| g.has_edge(a, b)).count();
    }
    2.0 * edges as f64 / (k * (k - 1)) as f64
}

/// Betweenness of every vertex by Brandes accumulation over BFS DAGs.
/// Each unordered pair counts once; normalized values are divided by
/// `(n−1)(n−2)/2`.
pub fn betweenness(g: &SimpleGraph, normalized: bool) -> Vec<f64> {
    let n = g.order();
    let mut centrality = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut stack = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        sigma.fill(0.0);
        dist.fill(usize::MAX);
        delta.fill(0.0);
        preds.iter_mut().for_each(Vec::clear);
        stack.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }

    // Undirected: every pair was counted from both ends.
    let pairs = if normalized && n > 2 {
        ((n - 1) * (n - 2)) as f64 / 2.0
    } else {
        1.0
    };
    centrality.iter_mut().for_each(|c| *c = *c * 0.5 / pairs);
    centrality
}

pub fn avg_betweenness(g: &SimpleGraph, normalized: bool) -> f64 {
    let b = betweenness(g, normalized);
    if b.is_empty() {
        return 0.0;
    }
    b.iter().sum::<f64>() / b.len() as f64
}
