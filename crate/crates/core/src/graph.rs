//! The three-layer graph: attachment (a), interference (b), provider (c).
//!
//! Layer b keeps geometric distances only. Received powers depend on the
//! channels under evaluation and are computed by [`crate::radio`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scenario::{Node, ProviderId, Scenario};

/// Layer a: every WD linked to its closest AP.
#[derive(Clone, Debug, PartialEq)]
pub struct AttachmentLayer {
    /// Indexed by node id; `None` for access points.
    ap_of: Vec<Option<usize>>,
    clients: Vec<Vec<usize>>,
}

impl AttachmentLayer {
    pub fn ap_of(&self, node: usize) -> Option<usize> {
        self.ap_of.get(node).copied().flatten()
    }

    pub fn clients_of(&self, ap: usize) -> &[usize] {
        self.clients.get(ap).map_or(&[], Vec::as_slice)
    }

    /// `(wd, ap)` pairs in WD order.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ap_of
            .iter()
            .enumerate()
            .filter_map(|(wd, ap)| ap.map(|ap| (wd, ap)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterferenceEdge {
    /// Ordered so that `endpoints.0 < endpoints.1`.
    pub endpoints: (usize, usize),
    pub distance: f64,
}

/// Layer b: symmetric adjacency, neighbours sorted by id.
#[derive(Clone, Debug, PartialEq)]
pub struct InterferenceLayer {
    adjacency: Vec<Vec<(usize, f64)>>,
    edges: Vec<InterferenceEdge>,
}

impl InterferenceLayer {
    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    pub fn edges(&self) -> &[InterferenceEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        self.adjacency
            .iter()
            .map(|ns| ns.iter().map(|&(j, _)| j).collect())
            .collect()
    }
}

/// Layer c: APs grouped by provider. Providers without APs are absent.
#[derive(Clone, Debug, PartialEq)]
pub struct ProviderLayer {
    parts: BTreeMap<ProviderId, Vec<usize>>,
}

impl ProviderLayer {
    pub fn parts(&self) -> &BTreeMap<ProviderId, Vec<usize>> {
        &self.parts
    }

    pub fn aps_of(&self, provider: ProviderId) -> &[usize] {
        self.parts.get(&provider).map_or(&[], Vec::as_slice)
    }

    pub fn providers(&self) -> impl Iterator<Item = ProviderId> + '_ {
        self.parts.keys().copied()
    }
}

/// WD → closest AP, ties to the lowest AP id.
pub fn attach_clients(s: &Scenario) -> Result<AttachmentLayer> {
    let aps: Vec<&Node> = s.access_points().collect();
    let mut ap_of = vec![None; s.nodes.len()];
    let mut clients = vec![Vec::new(); aps.len()];
    for wd in s.wireless_devices() {
        let mut best: Option<(usize, f64)> = None;
        for ap in &aps {
            let d = wd.position.distance(&ap.position);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((ap.id, d));
            }
        }
        let (ap, _) = best.ok_or(Error::NoAccessPoint(wd.id))?;
        ap_of[wd.id] = Some(ap);
        clients[ap].push(wd.id);
    }
    Ok(AttachmentLayer { ap_of, clients })
}

/// Links nodes closer than `radius`, except a WD and its own AP and two
/// WDs sharing an AP.
pub fn build_interference_layer(s: &Scenario, layer_a: &AttachmentLayer, radius: f64) -> InterferenceLayer {
    let n = s.nodes.len();
    let mut adjacency = vec![Vec::new(); n];
    let mut edges = Vec::new();
    // Channel owner: the AP whose channel the node uses.
    let owner = |i: usize| layer_a.ap_of(i).unwrap_or(i);
    for i in 0..n {
        for j in (i + 1)..n {
            if owner(i) == owner(j) {
                continue;
            }
            let d = s.nodes[i].position.distance(&s.nodes[j].position);
            if d < radius {
                adjacency[i].push((j, d));
                adjacency[j].push((i, d));
                edges.push(InterferenceEdge {
                    endpoints: (i, j),
                    distance: d,
                });
            }
        }
    }
    InterferenceLayer { adjacency, edges }
}

pub fn build_provider_layer(s: &Scenario) -> Result<ProviderLayer> {
    let mut parts: BTreeMap<ProviderId, Vec<usize>> = BTreeMap::new();
    for ap in s.access_points() {
        let p = ap.provider.ok_or(Error::MissingProvider(ap.id))?;
        parts.entry(p).or_default().push(ap.id);
    }
    Ok(ProviderLayer { parts })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultilayerGraph {
    nodes: Vec<Node>,
    n_aps: usize,
    radius: f64,
    layer_a: AttachmentLayer,
    layer_b: InterferenceLayer,
    layer_c: ProviderLayer,
}

impl MultilayerGraph {
    /// Builds all three layers. The scenario must have providers assigned.
    pub fn build(s: &Scenario, radius: f64) -> Result<Self> {
        let layer_a = attach_clients(s)?;
        let layer_b = build_interference_layer(s, &layer_a, radius);
        let layer_c = build_provider_layer(s)?;
        Ok(MultilayerGraph {
            nodes: s.nodes.clone(),
            n_aps: s.n_aps(),
            radius,
            layer_a,
            layer_b,
            layer_c,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Result<&Node> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn n_aps(&self) -> usize {
        self.n_aps
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn attachment(&self) -> &AttachmentLayer {
        &self.layer_a
    }

    pub fn interference(&self) -> &InterferenceLayer {
        &self.layer_b
    }

    pub fn providers(&self) -> &ProviderLayer {
        &self.layer_c
    }

    /// The AP whose channel `node` uses: itself for an AP, its attachment
    /// for a WD.
    pub fn channel_owner(&self, node: usize) -> usize {
        self.layer_a.ap_of(node).unwrap_or(node)
    }

    /// Provider whose utility includes `node`.
    pub fn provider_of(&self, node: usize) -> Option<ProviderId> {
        self.nodes[self.channel_owner(node)].provider
    }

    pub fn interferers_of(&self, node: usize) -> Result<&[(usize, f64)]> {
        if node >= self.nodes.len() {
            return Err(Error::UnknownNode(node));
        }
        Ok(self.layer_b.neighbors(node))
    }

    /// One line per edge: `a wd ap dist`, `b u v dist`, `c u v`. Layer c is
    /// expanded to a clique per provider.
    pub fn export_edge_list(&self) -> String {
        let mut out = String::new();
        for (wd, ap) in self.layer_a.links() {
            let d = self.nodes[wd].position.distance(&self.nodes[ap].position);
            let _ = writeln!(out, "a {wd} {ap} {d}");
        }
        for e in self.layer_b.edges() {
            let _ = writeln!(out, "b {} {} {}", e.endpoints.0, e.endpoints.1, e.distance);
        }
        for aps in self.layer_c.parts().values() {
            for (k, &u) in aps.iter().enumerate() {
                for &v in &aps[k + 1..] {
                    let _ = writeln!(out, "c {u} {v}");
                }
            }
        }
        out
    }
}
