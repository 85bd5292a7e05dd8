//! Single-text mediated negotiation between the two provider agents.
//!
//! The mediator draws a random initial contract and adopts it as the base.
//! Each iteration it proposes a single-issue mutation of the base; every
//! agent votes on its own utility; a unanimous accept makes the proposal
//! the new base. At the deadline the base is the final agreement.
//!
//! Votes are simultaneous and private. Each role draws from its own seeded
//! stream, so a run is a pure function of the graph, parameters and seed.

use rand::Rng;

use crate::error::{Error, Result};
use crate::evaluator::{Delta, Mutation, UtilityModel};
use crate::radio::{Channel, Contract};
use crate::scenario::ProviderId;
use crate::seed::{derive_seed, domain, rng_from_seed, Rng as StreamRng};

/// Fraction of an agent's utility upper bound used as its default initial
/// temperature.
pub const DEFAULT_TEMPERATURE_FRACTION: f64 = 0.05;
/// Default deadline is this many iterations per AP.
pub const DEFAULT_ITERATIONS_PER_AP: usize = 250;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AgentStrategy {
    HillClimber,
    Annealer { initial_temperature: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vote {
    Accept,
    Reject,
}

impl Vote {
    pub fn is_accept(self) -> bool {
        self == Vote::Accept
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MediationConfig {
    pub max_iterations: usize,
    pub seed: u64,
    /// Strategy of the `p1` and `p2` agents.
    pub strategies: [AgentStrategy; 2],
    /// Keep a per-iteration log of proposals and votes.
    pub record_rounds: bool,
}

impl MediationConfig {
    pub fn new(max_iterations: usize, seed: u64, strategies: [AgentStrategy; 2]) -> Self {
        MediationConfig {
            max_iterations,
            seed,
            strategies,
            record_rounds: false,
        }
    }

    pub fn hill_climbers(max_iterations: usize, seed: u64) -> Self {
        Self::new(max_iterations, seed, [AgentStrategy::HillClimber; 2])
    }

    /// Both agents anneal, each starting at [`default_temperature`].
    pub fn annealers(model: &UtilityModel, max_iterations: usize, seed: u64) -> Self {
        let s = ProviderId::ALL.map(|p| AgentStrategy::Annealer {
            initial_temperature: default_temperature(model, p),
        });
        Self::new(max_iterations, seed, s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        for s in &self.strategies {
            if let AgentStrategy::Annealer { initial_temperature } = s {
                if !(*initial_temperature > 0.0 && initial_temperature.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "initial temperature must be positive, got {initial_temperature}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// 5% of the agent's node count, floored at a small positive value so an
/// agent with no evaluated nodes still has a valid schedule.
pub fn default_temperature(model: &UtilityModel, provider: ProviderId) -> f64 {
    (DEFAULT_TEMPERATURE_FRACTION * model.evaluated_nodes(provider) as f64).max(1e-3)
}

pub fn default_iterations(n_aps: usize) -> usize {
    DEFAULT_ITERATIONS_PER_AP * n_aps.max(1)
}

/// Linear cooling: `τ0 · (1 − t / max_iterations)`.
pub fn temperature(t: usize, initial: f64, max_iterations: usize) -> f64 {
    let t = t.min(max_iterations);
    initial * (1.0 - t as f64 / max_iterations as f64)
}

/// Hill-climber rule: accept iff the proposal loses nothing.
pub fn hill_climber_accepts(loss: f64) -> Vote {
    if loss <= 0.0 {
        Vote::Accept
    } else {
        Vote::Reject
    }
}

/// Annealer rule: accept any non-loss; accept a loss with probability
/// `exp(−loss / τ)`, never when `τ = 0`.
pub fn annealer_accepts<R: Rng + ?Sized>(loss: f64, tau: f64, rng: &mut R) -> Vote {
    if loss <= 0.0 {
        return Vote::Accept;
    }
    if tau <= 0.0 {
        return Vote::Reject;
    }
    if rng.gen::<f64>() < (-loss / tau).exp() {
        Vote::Accept
    } else {
        Vote::Reject
    }
}

fn utility_loss(model: &UtilityModel, p: ProviderId, proposal: &Contract, base: &Contract) -> Result<f64> {
    Ok(model.provider_utility(p, base)? - model.provider_utility(p, proposal)?)
}

/// Hill-climber vote of agent `p` on `proposal`, given the current base.
pub fn hc_vote(p: ProviderId, proposal: &Contract, base: &Contract, model: &UtilityModel) -> Result<Vote> {
    Ok(hill_climber_accepts(utility_loss(model, p, proposal, base)?))
}

/// Annealer vote of agent `p` at temperature `tau`.
pub fn sa_vote<R: Rng + ?Sized>(
    p: ProviderId,
    proposal: &Contract,
    base: &Contract,
    tau: f64,
    rng: &mut R,
    model: &UtilityModel,
) -> Result<Vote> {
    Ok(annealer_accepts(utility_loss(model, p, proposal, base)?, tau, rng))
}

/// Picks an AP uniformly, and a new channel uniformly among the ten
/// channels different from its current one.
pub fn propose_mutation<R: Rng + ?Sized>(base: &Contract, rng: &mut R) -> Mutation {
    let ap = rng.gen_range(0..base.len());
    let current = base.channel(ap).index();
    let mut k = rng.gen_range(Channel::MIN..Channel::MAX);
    if k >= current {
        k += 1;
    }
    Mutation {
        ap,
        channel: Channel::new(k).expect("channel drawn in range"),
    }
}

pub fn mutate_single_issue<R: Rng + ?Sized>(base: &Contract, rng: &mut R) -> Contract {
    propose_mutation(base, rng).apply_to(base)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub iteration: usize,
    pub mutation: Mutation,
    pub votes: Vec<(ProviderId, Vote)>,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NegotiationOutcome {
    pub final_agreement: Contract,
    /// `(iteration, welfare of the base)`; iteration 0 is the initial contract.
    pub welfare_trace: Vec<(usize, f64)>,
    pub accepted_count: usize,
    /// Final utility of every agent that took part.
    pub per_agent_final_utility: Vec<(ProviderId, f64)>,
    pub final_welfare: f64,
    pub node_utilities: Vec<Option<f64>>,
    pub initial_contract: Contract,
    /// Filled when [`MediationConfig::record_rounds`] is set.
    pub rounds: Vec<Round>,
}

struct Agent {
    provider: ProviderId,
    strategy: AgentStrategy,
    rng: StreamRng,
}

impl Agent {
    fn vote(&mut self, gain: f64, t: usize, max_iterations: usize) -> Vote {
        let loss = -gain;
        match self.strategy {
            AgentStrategy::HillClimber => hill_climber_accepts(loss),
            AgentStrategy::Annealer { initial_temperature } => {
                let tau = temperature(t, initial_temperature, max_iterations);
                annealer_accepts(loss, tau, &mut self.rng)
            }
        }
    }
}

/// Runs the mediation protocol to its deadline. Agents exist for the
/// providers that own at least one AP.
pub fn run_mediation(model: &UtilityModel, config: &MediationConfig) -> Result<NegotiationOutcome> {
    config.validate()?;
    if model.n_aps() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut mediator = rng_from_seed(derive_seed(config.seed, &[domain::MEDIATOR]));
    let mut agents: Vec<Agent> = model
        .providers()
        .iter()
        .map(|&p| Agent {
            provider: p,
            strategy: config.strategies[p.index()],
            rng: rng_from_seed(derive_seed(config.seed, &[domain::AGENT, u64::from(p.number())])),
        })
        .collect();

    let initial_contract = Contract::random(model.n_aps(), &mut mediator);
    let mut base = initial_contract.clone();
    let mut eval = model.evaluate(&base)?;
    let mut welfare_trace = Vec::with_capacity(config.max_iterations + 1);
    welfare_trace.push((0, eval.welfare()));
    let mut rounds = Vec::new();
    let mut accepted_count = 0;
    let mut delta = Delta::default();
    let mut votes = Vec::with_capacity(agents.len());

    for t in 1..=config.max_iterations {
        let mutation = propose_mutation(&base, &mut mediator);
        model.delta(&base, &eval, mutation, &mut delta);
        votes.clear();
        for agent in &mut agents {
            let gain = delta.provider_delta[agent.provider.index()];
            votes.push((agent.provider, agent.vote(gain, t, config.max_iterations)));
        }
        let accepted = votes.iter().all(|(_, v)| v.is_accept());
        if accepted {
            model.apply(&mut base, &mut eval, mutation, &delta);
            accepted_count += 1;
        }
        welfare_trace.push((t, eval.welfare()));
        if config.record_rounds {
            rounds.push(Round {
                iteration: t,
                mutation,
                votes: votes.clone(),
                accepted,
            });
        }
    }

    let per_agent_final_utility = agents
        .iter()
        .map(|a| (a.provider, eval.provider_utility(a.provider)))
        .collect();
    Ok(NegotiationOutcome {
        final_welfare: eval.welfare(),
        final_agreement: base,
        welfare_trace,
        accepted_count,
        per_agent_final_utility,
        node_utilities: eval.node_utilities,
        initial_contract,
        rounds,
    })
}
