//! Precomputed utility model.
//!
//! Channel-independent received powers are computed once per graph. Full
//! evaluation then costs one table lookup per interference edge, and a
//! single-AP channel change only re-evaluates the nodes that depend on
//! that AP.

use crate::error::{Error, Result};
use crate::graph::MultilayerGraph;
use crate::radio::{self, Channel, Contract, RadioParams};
use crate::scenario::ProviderId;

#[derive(Clone, Debug)]
struct NodeTerms {
    owner: usize,
    /// `None` for nodes without a utility term.
    desired_mw: Option<f64>,
    /// (channel owner of the interferer, received power × activity in mW)
    interferers: Vec<(usize, f64)>,
    provider: Option<ProviderId>,
}

#[derive(Clone, Debug)]
pub struct UtilityModel {
    params: RadioParams,
    noise_mw: f64,
    /// Co-channel factor indexed by separation 0..=10.
    factor: [f64; Channel::COUNT],
    n_aps: usize,
    nodes: Vec<NodeTerms>,
    /// For each AP: evaluated nodes whose SINR reads that AP's channel.
    dependents: Vec<Vec<usize>>,
    evaluated_per_provider: [usize; 2],
    providers_present: Vec<ProviderId>,
}

/// Utilities of every node under one contract.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub node_utilities: Vec<Option<f64>>,
    pub provider_utilities: [f64; 2],
}

impl Evaluation {
    /// Sum of node utilities in node order.
    pub fn welfare(&self) -> f64 {
        self.node_utilities.iter().flatten().sum()
    }

    pub fn provider_utility(&self, p: ProviderId) -> f64 {
        self.provider_utilities[p.index()]
    }
}

/// A single-issue change: `ap` moves to `channel`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mutation {
    pub ap: usize,
    pub channel: Channel,
}

impl Mutation {
    pub fn apply_to(&self, contract: &Contract) -> Contract {
        let mut c = contract.clone();
        c.set(self.ap, self.channel);
        c
    }
}

/// Effect of a [`Mutation`] relative to a base evaluation.
#[derive(Clone, Debug, Default)]
pub struct Delta {
    /// (node, new utility)
    changes: Vec<(usize, f64)>,
    /// Utility change per provider, `U_p(proposal) − U_p(base)`.
    pub provider_delta: [f64; 2],
}

impl UtilityModel {
    pub fn new(graph: &MultilayerGraph, params: &RadioParams) -> Result<Self> {
        params.validate()?;
        let mut factor = [0.0; Channel::COUNT];
        factor[..params.cochannel_table.len()].copy_from_slice(&params.cochannel_table);

        let nodes_in = graph.nodes();
        let mut nodes = Vec::with_capacity(nodes_in.len());
        let mut evaluated_per_provider = [0usize; 2];
        for (i, rx) in nodes_in.iter().enumerate() {
            let desired_mw = if rx.is_ap() {
                graph
                    .attachment()
                    .clients_of(i)
                    .iter()
                    .map(|&wd| radio::received_power_mw(params, &nodes_in[wd], rx))
                    .reduce(f64::min)
            } else {
                let ap = graph.attachment().ap_of(i).ok_or(Error::NoAccessPoint(i))?;
                Some(radio::received_power_mw(params, &nodes_in[ap], rx))
            };
            let interferers = graph
                .interference()
                .neighbors(i)
                .iter()
                .map(|&(j, _)| {
                    let tx = &nodes_in[j];
                    (
                        graph.channel_owner(j),
                        radio::received_power_mw(params, tx, rx) * tx.activity,
                    )
                })
                .collect();
            let provider = graph.provider_of(i);
            if let (Some(p), Some(_)) = (provider, desired_mw) {
                evaluated_per_provider[p.index()] += 1;
            }
            nodes.push(NodeTerms {
                owner: graph.channel_owner(i),
                desired_mw,
                interferers,
                provider,
            });
        }

        let mut dependents = vec![Vec::new(); graph.n_aps()];
        for (i, terms) in nodes.iter().enumerate() {
            if terms.desired_mw.is_none() {
                continue;
            }
            dependents[terms.owner].push(i);
            for &(owner, _) in &terms.interferers {
                if dependents[owner].last() != Some(&i) {
                    dependents[owner].push(i);
                }
            }
        }
        for d in &mut dependents {
            d.sort_unstable();
            d.dedup();
        }

        Ok(UtilityModel {
            params: params.clone(),
            noise_mw: params.noise_mw(),
            factor,
            n_aps: graph.n_aps(),
            nodes,
            dependents,
            evaluated_per_provider,
            providers_present: graph.providers().providers().collect(),
        })
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn n_aps(&self) -> usize {
        self.n_aps
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Providers that own at least one AP.
    pub fn providers(&self) -> &[ProviderId] {
        &self.providers_present
    }

    /// Number of nodes contributing to `p`'s utility; its utility upper bound.
    pub fn evaluated_nodes(&self, p: ProviderId) -> usize {
        self.evaluated_per_provider[p.index()]
    }

    pub fn evaluated_total(&self) -> usize {
        self.evaluated_per_provider.iter().sum()
    }

    fn check(&self, contract: &Contract) -> Result<()> {
        if contract.len() != self.n_aps {
            return Err(Error::ContractLength {
                found: contract.len(),
                expected: self.n_aps,
            });
        }
        Ok(())
    }

    fn utility_with(&self, i: usize, channel_of: impl Fn(usize) -> Channel) -> Option<f64> {
        let terms = &self.nodes[i];
        let desired = terms.desired_mw?;
        let own = channel_of(terms.owner);
        let interference: f64 = terms
            .interferers
            .iter()
            .map(|&(owner, p)| p * self.factor[usize::from(own.separation(channel_of(owner)))])
            .sum();
        let sinr = radio::ratio_to_db(desired / (self.noise_mw + interference));
        Some(radio::node_utility(sinr, &self.params))
    }

    pub fn sinr_db(&self, node: usize, contract: &Contract) -> Result<f64> {
        self.check(contract)?;
        let terms = self.nodes.get(node).ok_or(Error::UnknownNode(node))?;
        let desired = terms.desired_mw.ok_or(Error::NoClients(node))?;
        let own = contract.channel(terms.owner);
        let interference: f64 = terms
            .interferers
            .iter()
            .map(|&(owner, p)| p * self.factor[usize::from(own.separation(contract.channel(owner)))])
            .sum();
        Ok(radio::ratio_to_db(desired / (self.noise_mw + interference)))
    }

    fn provider_sums(&self, utilities: &[Option<f64>]) -> [f64; 2] {
        let mut sums = [0.0; 2];
        for (terms, u) in self.nodes.iter().zip(utilities) {
            if let (Some(p), Some(u)) = (terms.provider, u) {
                sums[p.index()] += u;
            }
        }
        sums
    }

    pub fn evaluate(&self, contract: &Contract) -> Result<Evaluation> {
        self.check(contract)?;
        let node_utilities: Vec<Option<f64>> = (0..self.nodes.len())
            .map(|i| self.utility_with(i, |ap| contract.channel(ap)))
            .collect();
        let provider_utilities = self.provider_sums(&node_utilities);
        Ok(Evaluation {
            node_utilities,
            provider_utilities,
        })
    }

    pub fn welfare(&self, contract: &Contract) -> Result<f64> {
        self.evaluate(contract).map(|e| e.welfare())
    }

    pub fn provider_utility(&self, p: ProviderId, contract: &Contract) -> Result<f64> {
        self.evaluate(contract).map(|e| e.provider_utility(p))
    }

    /// Fills `out` with the effect of `m` on `base`, whose evaluation is
    /// `eval`. Only dependents of the mutated AP are recomputed.
    pub fn delta(&self, base: &Contract, eval: &Evaluation, m: Mutation, out: &mut Delta) {
        out.changes.clear();
        out.provider_delta = [0.0; 2];
        let channel_of = |ap: usize| if ap == m.ap { m.channel } else { base.channel(ap) };
        for &i in &self.dependents[m.ap] {
            let Some(new) = self.utility_with(i, channel_of) else {
                continue;
            };
            let old = eval.node_utilities[i].unwrap_or(0.0);
            out.changes.push((i, new));
            if let Some(p) = self.nodes[i].provider {
                out.provider_delta[p.index()] += new - old;
            }
        }
    }

    /// Commits a delta computed by [`Self::delta`]. The resulting evaluation
    /// is identical to a fresh [`Self::evaluate`] of the mutated contract.
    pub fn apply(&self, base: &mut Contract, eval: &mut Evaluation, m: Mutation, delta: &Delta) {
        base.set(m.ap, m.channel);
        for &(i, u) in &delta.changes {
            eval.node_utilities[i] = Some(u);
        }
        eval.provider_utilities = self.provider_sums(&eval.node_utilities);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::{node_utilities, social_welfare};
    use crate::scenario::{assign_providers, generate_scenario, prune_isolated, Layout, ScenarioConfig};
    use proptest::prelude::*;
    use rand::Rng;

    fn instance(seed: u64, n_aps: usize, cpa: usize) -> MultilayerGraph {
        let s = generate_scenario(&ScenarioConfig::new(Layout::Random, n_aps, cpa, seed)).unwrap();
        let s = assign_providers(&prune_isolated(&s, 30.0), seed);
        MultilayerGraph::build(&s, 30.0).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn matches_reference_route(seed in any::<u64>()) {
            let g = instance(seed, 15, 3);
            prop_assume!(g.n_aps() > 0);
            let params = RadioParams::default();
            let model = UtilityModel::new(&g, &params).unwrap();
            let mut rng = crate::seed::rng_from_seed(seed);
            let c = Contract::random(g.n_aps(), &mut rng);
            let e = model.evaluate(&c).unwrap();
            let reference = node_utilities(&c, &g, &params).unwrap();
            for (a, b) in e.node_utilities.iter().zip(&reference) {
                match (a, b) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                    (None, None) => {}
                    _ => prop_assert!(false, "evaluated sets differ"),
                }
            }
            let w = social_welfare(&c, &g, &params).unwrap();
            prop_assert!((e.welfare() - w).abs() <= 1e-9 * w.max(1.0));
        }

        #[test]
        fn incremental_equals_fresh(seed in any::<u64>(), steps in 1usize..60) {
            let g = instance(seed, 12, 4);
            prop_assume!(g.n_aps() > 0);
            let model = UtilityModel::new(&g, &RadioParams::default()).unwrap();
            let mut rng = crate::seed::rng_from_seed(seed ^ 0xABCD);
            let mut base = Contract::random(g.n_aps(), &mut rng);
            let mut eval = model.evaluate(&base).unwrap();
            let mut delta = Delta::default();
            for _ in 0..steps {
                let m = Mutation { ap: rng.gen_range(0..g.n_aps()), channel: Channel::random(&mut rng) };
                model.delta(&base, &eval, m, &mut delta);
                let fresh = model.evaluate(&m.apply_to(&base)).unwrap();
                for p in ProviderId::ALL {
                    let expected = fresh.provider_utility(p) - eval.provider_utility(p);
                    prop_assert!((delta.provider_delta[p.index()] - expected).abs() < 1e-9);
                }
                if rng.gen_bool(0.5) {
                    model.apply(&mut base, &mut eval, m, &delta);
                    prop_assert_eq!(&eval, &fresh);
                }
            }
        }

        #[test]
        fn reflection_symmetry(seed in any::<u64>()) {
            let g = instance(seed, 10, 3);
            prop_assume!(g.n_aps() > 0);
            let model = UtilityModel::new(&g, &RadioParams::default()).unwrap();
            let mut rng = crate::seed::rng_from_seed(seed);
            let c = Contract::random(g.n_aps(), &mut rng);
            prop_assert_eq!(model.evaluate(&c).unwrap(), model.evaluate(&c.reflected()).unwrap());
        }
    }

    #[test]
    fn welfare_bounded_by_evaluated_nodes() {
        let g = instance(5, 15, 5);
        let model = UtilityModel::new(&g, &RadioParams::default()).unwrap();
        let mut rng = crate::seed::rng_from_seed(1);
        for _ in 0..50 {
            let c = Contract::random(g.n_aps(), &mut rng);
            assert!(model.welfare(&c).unwrap() <= model.evaluated_total() as f64);
        }
    }
}
