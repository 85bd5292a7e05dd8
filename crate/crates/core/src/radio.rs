//! Physical model: log-distance path loss, partial channel overlap,
//! activity-weighted interference, SINR and the SINR → utility mapping.
//!
//! These functions work straight off the [`MultilayerGraph`] and are the
//! reference route. Solvers use [`crate::evaluator::UtilityModel`], which
//! precomputes the channel-independent powers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MultilayerGraph;
use crate::scenario::{Node, ProviderId};

/// Distances below this are clamped before computing path loss.
pub const MIN_DISTANCE_M: f64 = 0.1;

/// A 2.4 GHz channel, 1 through 11.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Channel(u8);

impl Channel {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 11;
    pub const COUNT: usize = 11;

    pub fn new(index: u8) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&index) {
            Ok(Channel(index))
        } else {
            Err(Error::InvalidChannel(index))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Channel> {
        (Self::MIN..=Self::MAX).map(Channel)
    }

    pub fn separation(self, other: Channel) -> u8 {
        self.0.abs_diff(other.0)
    }

    /// c → 12 − c
    pub fn reflected(self) -> Channel {
        Channel(Self::MIN + Self::MAX - self.0)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Channel {
        Channel(rng.gen_range(Self::MIN..=Self::MAX))
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One channel per AP, indexed by AP id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Contract {
    channels: Vec<Channel>,
}

impl Contract {
    pub fn new(channels: Vec<Channel>) -> Self {
        Contract { channels }
    }

    pub fn from_indices(indices: &[u8]) -> Result<Self> {
        indices
            .iter()
            .map(|&c| Channel::new(c))
            .collect::<Result<Vec<_>>>()
            .map(Contract::new)
    }

    pub fn uniform(n_aps: usize, channel: Channel) -> Self {
        Contract::new(vec![channel; n_aps])
    }

    /// Each entry i.i.d. uniform over 1..=11.
    pub fn random<R: Rng + ?Sized>(n_aps: usize, rng: &mut R) -> Self {
        Contract::new((0..n_aps).map(|_| Channel::random(rng)).collect())
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn channel(&self, ap: usize) -> Channel {
        self.channels[ap]
    }

    pub fn set(&mut self, ap: usize, channel: Channel) {
        self.channels[ap] = channel;
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn hamming(&self, other: &Contract) -> usize {
        self.channels
            .iter()
            .zip(&other.channels)
            .filter(|(a, b)| a != b)
            .count()
            + self.len().abs_diff(other.len())
    }

    pub fn reflected(&self) -> Contract {
        Contract::new(self.channels.iter().map(|c| c.reflected()).collect())
    }
}

impl fmt::Display for Contract {
    /// Channels joined by `;`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.channels.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Contract {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(Contract::new(Vec::new()));
        }
        s.split(';')
            .map(|t| {
                t.trim()
                    .parse::<u8>()
                    .map_err(|_| Error::InvalidConfig(format!("invalid channel `{t}`")))
                    .and_then(Channel::new)
            })
            .collect::<Result<Vec<_>>>()
            .map(Contract::new)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    /// Path loss at 1 m.
    pub ref_loss_db: f64,
    pub path_loss_exponent: f64,
    pub noise_floor_dbm: f64,
    pub sinr_min_db: f64,
    pub sinr_max_db: f64,
    /// Fraction of interfering power counted at channel separation 0..=4.
    /// Separations of 5 or more do not interfere.
    pub cochannel_table: [f64; 5],
    pub interference_radius_m: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_power_dbm: 20.0,
            ref_loss_db: 40.0,
            path_loss_exponent: 3.0,
            noise_floor_dbm: -96.0,
            sinr_min_db: 4.0,
            sinr_max_db: 25.0,
            cochannel_table: [1.0, 0.72, 0.27, 0.06, 0.008],
            interference_radius_m: 30.0,
        }
    }
}

impl RadioParams {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN fields must be rejected
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.sinr_min_db < self.sinr_max_db) {
            return bad(format!(
                "sinr_min_db ({}) must be below sinr_max_db ({})",
                self.sinr_min_db, self.sinr_max_db
            ));
        }
        let t = &self.cochannel_table;
        if t[0] != 1.0 || t.iter().any(|v| !(0.0..=1.0).contains(v)) || t.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!(
                "cochannel_table {t:?} must start at 1, stay in [0, 1] and strictly decrease"
            ));
        }
        if !(self.interference_radius_m > 0.0) {
            return bad("interference_radius_m must be positive".into());
        }
        let finite = [
            self.tx_power_dbm,
            self.ref_loss_db,
            self.path_loss_exponent,
            self.noise_floor_dbm,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("radio parameters must be finite".into());
        }
        Ok(())
    }

    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(self.noise_floor_dbm)
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn ratio_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn path_loss_db(params: &RadioParams, distance_m: f64) -> f64 {
    let d = distance_m.max(MIN_DISTANCE_M);
    params.ref_loss_db + 10.0 * params.path_loss_exponent * d.log10()
}

pub fn received_power_at_mw(params: &RadioParams, distance_m: f64) -> f64 {
    dbm_to_mw(params.tx_power_dbm - path_loss_db(params, distance_m))
}

pub fn received_power_mw(params: &RadioParams, tx: &Node, rx: &Node) -> f64 {
    received_power_at_mw(params, tx.position.distance(&rx.position))
}

pub fn cochannel_factor(params: &RadioParams, a: Channel, b: Channel) -> f64 {
    params
        .cochannel_table
        .get(usize::from(a.separation(b)))
        .copied()
        .unwrap_or(0.0)
}

/// Linear in dB between the thresholds, 0 below `sinr_min_db`, 1 from
/// `sinr_max_db` up.
pub fn node_utility(sinr_db: f64, params: &RadioParams) -> f64 {
    if sinr_db < params.sinr_min_db {
        0.0
    } else if sinr_db >= params.sinr_max_db {
        1.0
    } else {
        (sinr_db - params.sinr_min_db) / (params.sinr_max_db - params.sinr_min_db)
    }
}

fn check_contract(contract: &Contract, graph: &MultilayerGraph) -> Result<()> {
    if contract.len() != graph.n_aps() {
        return Err(Error::ContractLength {
            found: contract.len(),
            expected: graph.n_aps(),
        });
    }
    Ok(())
}

/// Weighted interference power at `node`, mW.
fn interference_mw(node: usize, contract: &Contract, graph: &MultilayerGraph, params: &RadioParams) -> f64 {
    let own = contract.channel(graph.channel_owner(node));
    let rx = &graph.nodes()[node];
    graph
        .interference()
        .neighbors(node)
        .iter()
        .map(|&(j, _)| {
            let tx = &graph.nodes()[j];
            let theirs = contract.channel(graph.channel_owner(j));
            received_power_mw(params, tx, rx) * cochannel_factor(params, own, theirs) * tx.activity
        })
        .sum()
}

/// SINR in dB. For a WD the desired signal comes from its AP; for an AP it
/// is the worst uplink over its attached WDs.
pub fn sinr_db(node: usize, contract: &Contract, graph: &MultilayerGraph, params: &RadioParams) -> Result<f64> {
    check_contract(contract, graph)?;
    let rx = graph.node(node)?;
    let denominator = params.noise_mw() + interference_mw(node, contract, graph, params);
    let desired = if rx.is_ap() {
        graph
            .attachment()
            .clients_of(node)
            .iter()
            .map(|&wd| received_power_mw(params, &graph.nodes()[wd], rx))
            .reduce(f64::min)
            .ok_or(Error::NoClients(node))?
    } else {
        let ap = graph.attachment().ap_of(node).ok_or(Error::NoAccessPoint(node))?;
        received_power_mw(params, &graph.nodes()[ap], rx)
    };
    Ok(ratio_to_db(desired / denominator))
}

/// Whether `node` carries a utility term. APs without attached WDs do not.
pub fn is_evaluated(node: usize, graph: &MultilayerGraph) -> bool {
    !graph.nodes()[node].is_ap() || !graph.attachment().clients_of(node).is_empty()
}

/// Per-node utilities, `None` for nodes without a utility term.
pub fn node_utilities(contract: &Contract, graph: &MultilayerGraph, params: &RadioParams) -> Result<Vec<Option<f64>>> {
    check_contract(contract, graph)?;
    (0..graph.nodes().len())
        .map(|i| {
            if is_evaluated(i, graph) {
                sinr_db(i, contract, graph, params).map(|s| Some(node_utility(s, params)))
            } else {
                Ok(None)
            }
        })
        .collect()
}

/// Sum of utilities of the provider's APs and their WDs.
pub fn provider_utility(
    provider: ProviderId,
    contract: &Contract,
    graph: &MultilayerGraph,
    params: &RadioParams,
) -> Result<f64> {
    let mut total = 0.0;
    for &ap in graph.providers().aps_of(provider) {
        let clients = graph.attachment().clients_of(ap);
        if clients.is_empty() {
            continue;
        }
        total += node_utility(sinr_db(ap, contract, graph, params)?, params);
        for &wd in clients {
            total += node_utility(sinr_db(wd, contract, graph, params)?, params);
        }
    }
    Ok(total)
}

pub fn social_welfare(contract: &Contract, graph: &MultilayerGraph, params: &RadioParams) -> Result<f64> {
    graph
        .providers()
        .providers()
        .map(|p| provider_utility(p, contract, graph, params))
        .sum()
}
