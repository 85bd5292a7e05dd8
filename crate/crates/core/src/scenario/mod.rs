//! Deployment scenarios: generation, pruning and provider split.
//!
//! Node ids are positions in [`Scenario::nodes`]. Access points always come
//! first, so AP `k` is node `k` and also position `k` of a
//! [`Contract`](crate::radio::Contract).

mod file;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub use file::{load_scenario, load_scenario_document, save_scenario, ScenarioDocument, FORMAT_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Random,
    Square,
}

impl Layout {
    pub fn as_str(self) -> &'static str {
        match self {
            Layout::Random => "random",
            Layout::Square => "square",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Layout::Random),
            "square" => Ok(Layout::Square),
            other => Err(Error::InvalidConfig(format!("unknown layout `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    AccessPoint,
    WirelessDevice,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One of the two network providers. Stored 1-based, as in `p1`/`p2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProviderId(u8);

impl ProviderId {
    pub const P1: ProviderId = ProviderId(1);
    pub const P2: ProviderId = ProviderId(2);
    pub const ALL: [ProviderId; 2] = [ProviderId::P1, ProviderId::P2];

    pub fn new(number: u8) -> Result<Self> {
        match number {
            1 | 2 => Ok(ProviderId(number)),
            n => Err(Error::InvalidConfig(format!("provider {n} out of range 1..=2"))),
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    /// Zero-based index, for per-provider arrays.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }
}

impl fmt::Display for ProviderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub position: Point,
    /// Fraction of time the node occupies the channel.
    pub activity: f64,
    pub provider: Option<ProviderId>,
}

impl Node {
    pub fn is_ap(&self) -> bool {
        self.kind == NodeKind::AccessPoint
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivityModel {
    Fixed(f64),
    Uniform { low: f64, high: f64 },
}

impl Default for ActivityModel {
    fn default() -> Self {
        ActivityModel::Fixed(0.5)
    }
}

impl ActivityModel {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ActivityModel::Fixed(a) => (0.0..=1.0).contains(&a),
            ActivityModel::Uniform { low, high } => 0.0 <= low && low <= high && high <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("activity {self:?} outside [0, 1]")))
        }
    }

    fn sample(&self, rng: &mut crate::seed::Rng) -> f64 {
        match *self {
            ActivityModel::Fixed(a) => a,
            ActivityModel::Uniform { low, high } if low == high => low,
            ActivityModel::Uniform { low, high } => rng.gen_range(low..=high),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub layout: Layout,
    pub n_aps: usize,
    pub clients_per_ap: usize,
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    pub seed: u64,
    pub activity: ActivityModel,
}

impl ScenarioConfig {
    /// AP count of the smallest category; its area is [`Self::REFERENCE_SIDE`].
    pub const REFERENCE_APS: usize = 15;
    pub const REFERENCE_SIDE: f64 = 120.0;

    /// Config with an area scaled to keep AP density constant across
    /// categories, and the default activity model.
    pub fn new(layout: Layout, n_aps: usize, clients_per_ap: usize, seed: u64) -> Self {
        ScenarioConfig {
            layout,
            n_aps,
            clients_per_ap,
            area_side: Self::scaled_area_side(n_aps),
            seed,
            activity: ActivityModel::default(),
        }
    }

    pub fn scaled_area_side(n_aps: usize) -> f64 {
        Self::area_side_for(n_aps, Self::REFERENCE_SIDE)
    }

    /// Side giving `n_aps` the AP density of [`Self::REFERENCE_APS`] APs
    /// on a `reference_side` square.
    pub fn area_side_for(n_aps: usize, reference_side: f64) -> f64 {
        reference_side * (n_aps as f64 / Self::REFERENCE_APS as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_aps == 0 {
            return Err(Error::InvalidConfig("n_aps must be at least 1".into()));
        }
        if self.clients_per_ap == 0 {
            return Err(Error::InvalidConfig("clients_per_ap must be at least 1".into()));
        }
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "area_side must be positive, got {}",
                self.area_side
            )));
        }
        self.activity.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub nodes: Vec<Node>,
    pub config: ScenarioConfig,
    pub pruned: bool,
}

impl Scenario {
    pub fn n_aps(&self) -> usize {
        self.nodes.iter().take_while(|n| n.is_ap()).count()
    }

    pub fn n_wds(&self) -> usize {
        self.nodes.len() - self.n_aps()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn access_points(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_ap())
    }

    pub fn wireless_devices(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| !n.is_ap())
    }

    /// Builds a scenario from explicit nodes, re-numbering ids and moving
    /// APs first. Meant for hand-made test fixtures.
    pub fn from_nodes(config: ScenarioConfig, nodes: Vec<Node>) -> Self {
        let (aps, wds): (Vec<_>, Vec<_>) = nodes.into_iter().partition(Node::is_ap);
        let nodes = renumber(aps.into_iter().chain(wds));
        Scenario {
            nodes,
            config,
            pruned: false,
        }
    }
}

fn renumber(nodes: impl IntoIterator<Item = Node>) -> Vec<Node> {
    nodes
        .into_iter()
        .enumerate()
        .map(|(id, node)| Node { id, ..node })
        .collect()
}

/// Junctions of the smallest square grid with at least `n` junctions,
/// cell-centred over the area, first `n` in row-major order.
pub fn grid_positions(n: usize, side: f64) -> Vec<Point> {
    let mut cols = 1;
    while cols * cols < n {
        cols += 1;
    }
    let spacing = side / cols as f64;
    (0..n)
        .map(|k| {
            let (row, col) = (k / cols, k % cols);
            Point::new((col as f64 + 0.5) * spacing, (row as f64 + 0.5) * spacing)
        })
        .collect()
}

/// Draw order from the seeded stream: AP positions (random layout only),
/// then WD positions, then per-node activity for APs and WDs.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let side = config.area_side;
    let uniform_point = |rng: &mut crate::seed::Rng| Point::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side));

    let ap_positions = match config.layout {
        Layout::Random => (0..config.n_aps).map(|_| uniform_point(&mut rng)).collect(),
        Layout::Square => grid_positions(config.n_aps, side),
    };
    let n_wds = config.n_aps * config.clients_per_ap;
    let wd_positions: Vec<Point> = (0..n_wds).map(|_| uniform_point(&mut rng)).collect();

    let mut nodes = Vec::with_capacity(config.n_aps + n_wds);
    let placed = ap_positions
        .into_iter()
        .map(|p| (NodeKind::AccessPoint, p))
        .chain(wd_positions.into_iter().map(|p| (NodeKind::WirelessDevice, p)));
    for (id, (kind, position)) in placed.enumerate() {
        nodes.push(Node {
            id,
            kind,
            position,
            activity: 0.0,
            provider: None,
        });
    }
    for node in &mut nodes {
        node.activity = config.activity.sample(&mut rng);
    }

    Ok(Scenario {
        nodes,
        config: config.clone(),
        pruned: false,
    })
}

fn has_partner_within(node: &Node, others: &[&Node], radius: f64) -> bool {
    others
        .iter()
        .any(|o| o.kind != node.kind && node.position.distance(&o.position) < radius)
}

/// Removes APs with no WD closer than `radius` and WDs with no AP closer
/// than `radius`, repeating until nothing changes. Survivors are
/// re-numbered in their original order. The result may be empty; callers
/// must check [`Scenario::is_empty`].
pub fn prune_isolated(s: &Scenario, radius: f64) -> Scenario {
    let mut alive: Vec<&Node> = s.nodes.iter().collect();
    loop {
        let kept: Vec<&Node> = alive
            .iter()
            .copied()
            .filter(|n| has_partner_within(n, &alive, radius))
            .collect();
        if kept.len() == alive.len() {
            break;
        }
        alive = kept;
    }
    Scenario {
        nodes: renumber(alive.into_iter().cloned()),
        config: s.config.clone(),
        pruned: true,
    }
}

/// Splits APs between `p1` (⌈n/2⌉ APs) and `p2` (⌊n/2⌋ APs), uniformly at
/// random given `seed`. WDs carry no provider.
pub fn assign_providers(s: &Scenario, seed: u64) -> Scenario {
    let mut rng = rng_from_seed(seed);
    let mut ap_ids: Vec<usize> = s.access_points().map(|n| n.id).collect();
    ap_ids.shuffle(&mut rng);
    let p1_count = ap_ids.len().div_ceil(2);

    let mut out = s.clone();
    for node in &mut out.nodes {
        node.provider = None;
    }
    for (rank, &id) in ap_ids.iter().enumerate() {
        out.nodes[id].provider = Some(if rank < p1_count {
            ProviderId::P1
        } else {
            ProviderId::P2
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(kind: NodeKind, x: f64, y: f64) -> Node {
        Node {
            id: 0,
            kind,
            position: Point::new(x, y),
            activity: 0.5,
            provider: None,
        }
    }

    fn fixture(nodes: Vec<Node>) -> Scenario {
        Scenario::from_nodes(ScenarioConfig::new(Layout::Random, 1, 1, 0), nodes)
    }

    #[test]
    fn square_two_by_two() {
        let cfg = ScenarioConfig {
            area_side: 100.0,
            ..ScenarioConfig::new(Layout::Square, 4, 1, 3)
        };
        let s = generate_scenario(&cfg).unwrap();
        let aps: Vec<Point> = s.access_points().map(|n| n.position).collect();
        assert_eq!(
            aps,
            vec![
                Point::new(25.0, 25.0),
                Point::new(75.0, 25.0),
                Point::new(25.0, 75.0),
                Point::new(75.0, 75.0)
            ]
        );
    }

    #[test]
    fn square_non_square_count_uses_row_major_prefix() {
        let pts = grid_positions(5, 90.0);
        assert_eq!(pts.len(), 5);
        // 3x3 grid, spacing 30
        assert_eq!(pts[3], Point::new(15.0, 45.0));
        assert_eq!(pts[4], Point::new(45.0, 45.0));
    }

    #[test]
    fn counts_before_pruning() {
        let s = generate_scenario(&ScenarioConfig::new(Layout::Random, 15, 5, 11)).unwrap();
        assert_eq!(s.n_aps(), 15);
        assert_eq!(s.n_wds(), 75);
        assert!(!s.pruned);
        let side = s.config.area_side;
        for n in &s.nodes {
            assert!((0.0..side).contains(&n.position.x) && (0.0..side).contains(&n.position.y));
            assert_eq!(n.activity, 0.5);
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        let mut cfg = ScenarioConfig::new(Layout::Random, 10, 3, 99);
        cfg.activity = ActivityModel::Uniform { low: 0.2, high: 0.9 };
        assert_eq!(generate_scenario(&cfg).unwrap(), generate_scenario(&cfg).unwrap());
        let other = ScenarioConfig {
            seed: 100,
            ..cfg.clone()
        };
        assert_ne!(generate_scenario(&cfg).unwrap(), generate_scenario(&other).unwrap());
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = ScenarioConfig::new(Layout::Random, 4, 1, 0);
        for bad in [
            ScenarioConfig {
                n_aps: 0,
                ..base.clone()
            },
            ScenarioConfig {
                clients_per_ap: 0,
                ..base.clone()
            },
            ScenarioConfig {
                area_side: 0.0,
                ..base.clone()
            },
            ScenarioConfig {
                area_side: -5.0,
                ..base.clone()
            },
            ScenarioConfig {
                activity: ActivityModel::Fixed(1.5),
                ..base.clone()
            },
        ] {
            assert!(matches!(generate_scenario(&bad), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn prune_keeps_pair_within_radius() {
        let s = fixture(vec![
            node(NodeKind::AccessPoint, 0.0, 0.0),
            node(NodeKind::WirelessDevice, 15.0, 0.0),
        ]);
        let p = prune_isolated(&s, 30.0);
        assert_eq!(p.nodes.len(), 2);
        assert!(p.pruned);
    }

    #[test]
    fn prune_cascades_to_empty() {
        let s = fixture(vec![
            node(NodeKind::AccessPoint, 0.0, 0.0),
            node(NodeKind::WirelessDevice, 60.0, 0.0),
        ]);
        let p = prune_isolated(&s, 30.0);
        assert!(p.is_empty());
        assert!(p.pruned);
    }

    #[test]
    fn prune_renumbers_with_aps_first() {
        let s = fixture(vec![
            node(NodeKind::AccessPoint, 0.0, 0.0),
            node(NodeKind::AccessPoint, 500.0, 0.0),
            node(NodeKind::AccessPoint, 100.0, 0.0),
            node(NodeKind::WirelessDevice, 5.0, 0.0),
            node(NodeKind::WirelessDevice, 105.0, 0.0),
        ]);
        let p = prune_isolated(&s, 30.0);
        assert_eq!(p.n_aps(), 2);
        assert_eq!(p.nodes[1].position, Point::new(100.0, 0.0));
        assert!(p.nodes.iter().enumerate().all(|(i, n)| n.id == i));
    }

    #[test]
    fn provider_split_sizes() {
        for (n, expected) in [(4, (2, 2)), (5, (3, 2)), (1, (1, 0))] {
            let s = generate_scenario(&ScenarioConfig::new(Layout::Square, n, 1, 1)).unwrap();
            let s = assign_providers(&s, 5);
            let p1 = s.nodes.iter().filter(|x| x.provider == Some(ProviderId::P1)).count();
            let p2 = s.nodes.iter().filter(|x| x.provider == Some(ProviderId::P2)).count();
            assert_eq!((p1, p2), expected);
            assert!(s.wireless_devices().all(|w| w.provider.is_none()));
            assert!(s.access_points().all(|a| a.provider.is_some()));
        }
    }

    #[test]
    fn provider_split_is_seeded() {
        let s = generate_scenario(&ScenarioConfig::new(Layout::Random, 20, 1, 1)).unwrap();
        assert_eq!(assign_providers(&s, 9), assign_providers(&s, 9));
        let differs = (0..10u64).any(|k| assign_providers(&s, k) != assign_providers(&s, 9));
        assert!(differs);
    }

    #[test]
    fn provider_ids() {
        assert_eq!(ProviderId::P2.index(), 1);
        assert_eq!(ProviderId::P1.to_string(), "p1");
        assert!(ProviderId::new(3).is_err());
    }
}
