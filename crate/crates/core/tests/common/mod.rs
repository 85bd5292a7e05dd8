//! Brute-force oracles shared by the integration tests. Each one is
//! written from the definitions, without reusing library internals.
#![allow(dead_code, clippy::needless_range_loop)]

use channeg::evaluator::UtilityModel;
use channeg::radio::{social_welfare, Channel, Contract, RadioParams};
use channeg::scenario::{
    assign_providers, generate_scenario, prune_isolated, Layout, Node, NodeKind, Scenario, ScenarioConfig,
};
use channeg::MultilayerGraph;

pub const UNREACHABLE: usize = usize::MAX;

/// All-pairs hop distances by Floyd–Warshall.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut d = vec![vec![UNREACHABLE; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        if a != b {
            d[a][b] = 1;
            d[b][a] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] != UNREACHABLE && d[k][j] != UNREACHABLE && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        if a != b {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    }
    adj
}

pub fn oracle_diameter(n: usize, edges: &[(usize, usize)]) -> usize {
    let d = floyd_warshall(n, edges);
    d.iter()
        .flatten()
        .copied()
        .filter(|&x| x != UNREACHABLE)
        .max()
        .unwrap_or(0)
}

pub fn oracle_wiener(n: usize, edges: &[(usize, usize)]) -> u64 {
    let d = floyd_warshall(n, edges);
    let mut total = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if d[i][j] != UNREACHABLE {
                total += d[i][j] as u64;
            }
        }
    }
    total
}

pub fn oracle_density(n: usize, edges: &[(usize, usize)]) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let adj = adjacency(n, edges);
    let m = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| adj[i][j])
        .count();
    m as f64 / (n * (n - 1) / 2) as f64
}

/// Mean density of closed neighbourhoods; isolated vertices count 1.
pub fn oracle_clustering(n: usize, edges: &[(usize, usize)]) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let adj = adjacency(n, edges);
    let mut total = 0.0;
    for v in 0..n {
        let ball: Vec<usize> = (0..n).filter(|&u| u == v || adj[v][u]).collect();
        let k = ball.len();
        if k == 1 {
            total += 1.0;
            continue;
        }
        let mut m = 0;
        for a in 0..k {
            for b in a + 1..k {
                if adj[ball[a]][ball[b]] {
                    m += 1;
                }
            }
        }
        total += m as f64 / (k * (k - 1) / 2) as f64;
    }
    total / n as f64
}

/// Every shortest path from `s` to `t`, enumerated by depth-first search.
fn shortest_paths(adj: &[Vec<bool>], s: usize, t: usize, len: usize) -> Vec<Vec<usize>> {
    fn walk(adj: &[Vec<bool>], path: &mut Vec<usize>, t: usize, len: usize, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if path.len() - 1 == len {
            if last == t {
                out.push(path.clone());
            }
            return;
        }
        for next in 0..adj.len() {
            if adj[last][next] && !path.contains(&next) {
                path.push(next);
                walk(adj, path, t, len, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(adj, &mut vec![s], t, len, &mut out);
    out
}

/// Betweenness by explicit path enumeration: for each unordered pair, the
/// fraction of shortest paths through each interior vertex.
pub fn oracle_betweenness(n: usize, edges: &[(usize, usize)], normalized: bool) -> Vec<f64> {
    let adj = adjacency(n, edges);
    let d = floyd_warshall(n, edges);
    let mut c = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            if d[s][t] == UNREACHABLE || d[s][t] < 2 {
                continue;
            }
            let paths = shortest_paths(&adj, s, t, d[s][t]);
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count();
                c[v] += through as f64 / paths.len() as f64;
            }
        }
    }
    if normalized && n > 2 {
        let pairs = ((n - 1) * (n - 2) / 2) as f64;
        c.iter_mut().for_each(|x| *x /= pairs);
    }
    c
}

/// Removes one stranded node at a time until none is left.
pub fn oracle_prune(nodes: &[Node], radius: f64) -> Vec<Node> {
    let mut alive: Vec<Node> = nodes.to_vec();
    loop {
        let stranded = alive.iter().position(|n| {
            !alive
                .iter()
                .any(|o| o.kind != n.kind && n.position.distance(&o.position) < radius)
        });
        match stranded {
            Some(i) => {
                alive.remove(i);
            }
            None => return alive,
        }
    }
}

/// Best welfare over all 11^n contracts, evaluated by the reference
/// (non-incremental) route.
pub fn oracle_optimum(graph: &MultilayerGraph, params: &RadioParams) -> (Contract, f64) {
    let n = graph.n_aps();
    let total = 11usize.pow(n as u32);
    let mut best = (Contract::uniform(n, Channel::new(1).unwrap()), f64::NEG_INFINITY);
    for code in 0..total {
        let mut k = code;
        let idx: Vec<u8> = (0..n)
            .map(|_| {
                let c = (k % 11) as u8 + 1;
                k /= 11;
                c
            })
            .collect();
        let c = Contract::from_indices(&idx).unwrap();
        let w = social_welfare(&c, graph, params).unwrap();
        if w > best.1 {
            best = (c, w);
        }
    }
    best
}

/// SINR of `node` in dB straight from positions: closest-AP attachment,
/// interferers within `radius` that are not on the same AP, weighted by
/// channel overlap and activity.
pub fn oracle_sinr_db(nodes: &[Node], contract: &Contract, params: &RadioParams, node: usize) -> f64 {
    let mw = |dbm: f64| 10f64.powf(dbm / 10.0);
    let rx = |a: &Node, b: &Node| {
        let d = a.position.distance(&b.position).max(0.1);
        mw(params.tx_power_dbm - params.ref_loss_db - 10.0 * params.path_loss_exponent * d.log10())
    };
    let owner = |i: usize| -> usize {
        if nodes[i].kind == NodeKind::AccessPoint {
            return i;
        }
        let mut best = None::<(usize, f64)>;
        for (j, n) in nodes.iter().enumerate() {
            if n.kind == NodeKind::AccessPoint {
                let d = n.position.distance(&nodes[i].position);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best.unwrap().0
    };
    let channel = |i: usize| contract.channel(owner(i)).index() as i32;
    let interference_at = |target: usize| -> f64 {
        let mut total = 0.0;
        for (j, other) in nodes.iter().enumerate() {
            if j == target || owner(j) == owner(target) {
                continue;
            }
            if nodes[target].position.distance(&other.position) >= params.interference_radius_m {
                continue;
            }
            let sep = (channel(target) - channel(j)).unsigned_abs() as usize;
            let f = params.cochannel_table.get(sep).copied().unwrap_or(0.0);
            total += rx(other, &nodes[target]) * f * other.activity;
        }
        total
    };
    let noise = mw(params.noise_floor_dbm);
    if nodes[node].kind == NodeKind::WirelessDevice {
        let ap = owner(node);
        let s = rx(&nodes[ap], &nodes[node]);
        10.0 * (s / (noise + interference_at(node))).log10()
    } else {
        let clients: Vec<usize> = (0..nodes.len())
            .filter(|&j| nodes[j].kind == NodeKind::WirelessDevice && owner(j) == node)
            .collect();
        let weakest = clients
            .iter()
            .map(|&j| rx(&nodes[j], &nodes[node]))
            .fold(f64::INFINITY, f64::min);
        10.0 * (weakest / (noise + interference_at(node))).log10()
    }
}

/// A pruned, provider-split random scenario. Retries seeds until the
/// pruned scenario is non-empty.
pub fn instance(seed: u64, layout: Layout, n_aps: usize, clients_per_ap: usize, side: f64) -> Scenario {
    for attempt in 0.. {
        let mut cfg = ScenarioConfig::new(
            layout,
            n_aps,
            clients_per_ap,
            seed.wrapping_mul(1000).wrapping_add(attempt),
        );
        cfg.area_side = side;
        let pruned = prune_isolated(
            &generate_scenario(&cfg).unwrap(),
            RadioParams::default().interference_radius_m,
        );
        if !pruned.is_empty() {
            return assign_providers(&pruned, seed ^ 0xABCD);
        }
    }
    unreachable!()
}

pub fn model_of(s: &Scenario, params: &RadioParams) -> (MultilayerGraph, UtilityModel) {
    let g = MultilayerGraph::build(s, params.interference_radius_m).unwrap();
    let m = UtilityModel::new(&g, params).unwrap();
    (g, m)
}

/// Chi-square statistic of observed counts against a uniform expectation.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}
