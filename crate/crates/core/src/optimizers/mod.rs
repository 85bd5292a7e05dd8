//! Reference techniques: uniform-random assignment, the augmented
//! Lagrangian particle swarm optimizer, and exhaustive enumeration for
//! small instances.

mod pso;

use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::{Error, Result};
use crate::evaluator::UtilityModel;
use crate::radio::{Channel, Contract};
use crate::seed::rng_from_seed;

pub use pso::{alpso_minimize, decode_position, pso_optimize, AlpsoOutcome, PsoConfig};

/// Largest AP count [`exhaustive_optimum`] accepts by default (11^6 contracts).
pub const EXHAUSTIVE_AP_LIMIT: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerResult {
    pub best_contract: Contract,
    pub best_welfare: f64,
    pub evaluations: usize,
    pub wall_time: Duration,
}

/// Every AP gets an i.i.d. uniform channel.
pub fn random_assignment<R: Rng + ?Sized>(n_aps: usize, rng: &mut R) -> Contract {
    Contract::random(n_aps, rng)
}

/// One uniform-random contract, scored.
pub fn random_reference(model: &UtilityModel, seed: u64) -> Result<OptimizerResult> {
    let start = Instant::now();
    let mut rng = rng_from_seed(seed);
    let best_contract = random_assignment(model.n_aps(), &mut rng);
    let best_welfare = model.welfare(&best_contract)?;
    Ok(OptimizerResult {
        best_contract,
        best_welfare,
        evaluations: 1,
        wall_time: start.elapsed(),
    })
}

/// Exact optimum by enumerating all 11^n contracts. Ties keep the first
/// contract in lexicographic order.
pub fn exhaustive_optimum(model: &UtilityModel, ap_limit: usize) -> Result<OptimizerResult> {
    let n = model.n_aps();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if n > ap_limit {
        return Err(Error::InstanceTooLarge {
            n_aps: n,
            limit: ap_limit,
        });
    }
    let start = Instant::now();
    let lowest = Channel::new(Channel::MIN).expect("valid");
    let mut current = Contract::uniform(n, lowest);
    let mut best = (current.clone(), model.welfare(&current)?);
    let mut evaluations = 1;
    'odometer: loop {
        let mut pos = n;
        loop {
            if pos == 0 {
                break 'odometer;
            }
            pos -= 1;
            let c = current.channel(pos).index();
            if c < Channel::MAX {
                current.set(pos, Channel::new(c + 1).expect("valid"));
                break;
            }
            current.set(pos, lowest);
        }
        let w = model.welfare(&current)?;
        evaluations += 1;
        if w > best.1 {
            best = (current.clone(), w);
        }
    }
    Ok(OptimizerResult {
        best_contract: best.0,
        best_welfare: best.1,
        evaluations,
        wall_time: start.elapsed(),
    })
}
