//! Augmented-Lagrangian particle swarm optimization (ALPSO).
//!
//! The swarm minimizes the augmented Lagrangian
//!
//! ```text
//! L(x, λ, r) = f(x) + Σ_j λ_j θ_j(x) + r_j θ_j(x)²,   θ_j = max(g_j(x), −λ_j / (2 r_j))
//! ```
//!
//! where the inequality constraints `g_j(x) ≤ 0` are the box bounds
//! `lower − x_i ≤ 0` and `x_i − upper ≤ 0`. After every outer iteration the
//! multipliers move to `λ_j + 2 r_j θ_j(x_best)` and the penalty doubles on
//! constraints the swarm best violates. Personal and global bests are then
//! re-scored under the new Lagrangian.
//!
//! All random draws happen on the calling thread in a fixed order, so the
//! trajectory is the same whether a generation is evaluated in parallel or
//! not.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::OptimizerResult;
use crate::error::{Error, Result};
use crate::evaluator::UtilityModel;
use crate::radio::{Channel, Contract};
use crate::seed::rng_from_seed;

const PENALTY_INIT: f64 = 1.0;
const PENALTY_GROWTH: f64 = 2.0;
const PENALTY_MAX: f64 = 1e8;

#[derive(Clone, Debug, PartialEq)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_outer_iterations: usize,
    /// Swarm generations between multiplier updates.
    pub inner_iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    /// Evaluate each generation on the rayon pool.
    pub parallel: bool,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 40,
            max_outer_iterations: 50,
            inner_iterations: 5,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            seed: 0,
            parallel: false,
        }
    }
}

impl PsoConfig {
    /// Default hyperparameters with outer iterations sized so the total
    /// number of objective evaluations is about `evaluations`.
    pub fn with_budget(evaluations: usize, seed: u64) -> Self {
        let base = PsoConfig {
            seed,
            ..PsoConfig::default()
        };
        let per_outer = base.swarm_size * base.inner_iterations;
        let outer = evaluations.saturating_sub(base.swarm_size).div_ceil(per_outer).max(1);
        PsoConfig {
            max_outer_iterations: outer,
            ..base
        }
    }

    pub fn evaluation_budget(&self) -> usize {
        self.swarm_size * (1 + self.max_outer_iterations * self.inner_iterations)
    }

    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::InvalidConfig("swarm_size must be at least 2".into()));
        }
        if self.max_outer_iterations == 0 || self.inner_iterations == 0 {
            return Err(Error::InvalidConfig("iteration counts must be at least 1".into()));
        }
        if !(self.inertia > 0.0 && self.cognitive > 0.0 && self.social > 0.0) {
            return Err(Error::InvalidConfig(
                "inertia, cognitive and social weights must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlpsoOutcome {
    /// Best feasible point evaluated.
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    /// Incumbent objective after initialization and after each outer iteration.
    pub incumbent_history: Vec<f64>,
}

struct Multipliers {
    lambda: Vec<f64>,
    penalty: Vec<f64>,
}

impl Multipliers {
    fn theta(&self, j: usize, g: f64) -> f64 {
        g.max(-self.lambda[j] / (2.0 * self.penalty[j]))
    }

    fn lagrangian(&self, f: f64, g: &[f64]) -> f64 {
        f + g
            .iter()
            .enumerate()
            .map(|(j, &gj)| {
                let t = self.theta(j, gj);
                self.lambda[j] * t + self.penalty[j] * t * t
            })
            .sum::<f64>()
    }

    fn update(&mut self, g: &[f64]) {
        for (j, &gj) in g.iter().enumerate() {
            let t = self.theta(j, gj);
            self.lambda[j] += 2.0 * self.penalty[j] * t;
            if gj > 0.0 {
                self.penalty[j] = (self.penalty[j] * PENALTY_GROWTH).min(PENALTY_MAX);
            }
        }
    }
}

fn box_constraints(x: &[f64], lower: f64, upper: f64) -> Vec<f64> {
    x.iter().flat_map(|&xi| [lower - xi, xi - upper]).collect()
}

struct Best {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    l: f64,
}

/// Minimizes `objective` over `[lower, upper]^dim` with bounds handled as
/// augmented-Lagrangian inequality constraints.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN bounds must be rejected
pub fn alpso_minimize<F>(objective: F, dim: usize, lower: f64, upper: f64, cfg: &PsoConfig) -> Result<AlpsoOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    if dim == 0 || !(lower < upper) {
        return Err(Error::InvalidConfig("empty search box".into()));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let range = upper - lower;
    let v_max = 0.5 * range;
    let n = cfg.swarm_size;

    let evaluate = |points: &[Vec<f64>]| -> Result<Vec<f64>> {
        let values: Vec<f64> = if cfg.parallel {
            points.par_iter().map(|x| objective(x)).collect()
        } else {
            points.iter().map(|x| objective(x)).collect()
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective);
        }
        Ok(values)
    };

    let mut positions: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(lower..=upper)).collect())
        .collect();
    let mut velocities: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-0.25 * range..=0.25 * range)).collect())
        .collect();

    let mut mult = Multipliers {
        lambda: vec![0.0; 2 * dim],
        penalty: vec![PENALTY_INIT; 2 * dim],
    };
    let mut evaluations = 0;
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let track = |x: &[f64], f: f64, g: &[f64], incumbent: &mut Option<(Vec<f64>, f64)>| {
        let feasible = g.iter().all(|&gj| gj <= 0.0);
        if feasible && incumbent.as_ref().is_none_or(|(_, best)| f < *best) {
            *incumbent = Some((x.to_vec(), f));
        }
    };

    let values = evaluate(&positions)?;
    evaluations += n;
    let mut personal: Vec<Best> = positions
        .iter()
        .zip(&values)
        .map(|(x, &f)| {
            let g = box_constraints(x, lower, upper);
            track(x, f, &g, &mut incumbent);
            let l = mult.lagrangian(f, &g);
            Best { x: x.clone(), f, g, l }
        })
        .collect();
    let mut global = argmin_l(&personal);
    let mut history = vec![incumbent.as_ref().map_or(f64::INFINITY, |(_, f)| *f)];

    for _ in 0..cfg.max_outer_iterations {
        for _ in 0..cfg.inner_iterations {
            for (k, (x, v)) in positions.iter_mut().zip(&mut velocities).enumerate() {
                let pb = &personal[k].x;
                let gb = &personal[global].x;
                for d in 0..dim {
                    let r1: f64 = rng.gen();
                    let r2: f64 = rng.gen();
                    let vd =
                        cfg.inertia * v[d] + cfg.cognitive * r1 * (pb[d] - x[d]) + cfg.social * r2 * (gb[d] - x[d]);
                    v[d] = vd.clamp(-v_max, v_max);
                    x[d] += v[d];
                }
            }
            let values = evaluate(&positions)?;
            evaluations += n;
            for (k, (x, &f)) in positions.iter().zip(&values).enumerate() {
                let g = box_constraints(x, lower, upper);
                track(x, f, &g, &mut incumbent);
                let l = mult.lagrangian(f, &g);
                if l < personal[k].l {
                    personal[k] = Best { x: x.clone(), f, g, l };
                }
            }
            global = argmin_l(&personal);
        }

        let g_best = personal[global].g.clone();
        mult.update(&g_best);
        for p in &mut personal {
            p.l = mult.lagrangian(p.f, &p.g);
        }
        global = argmin_l(&personal);
        history.push(incumbent.as_ref().map_or(f64::INFINITY, |(_, f)| *f));
    }

    let (best_x, best_value) = incumbent.unwrap_or_else(|| {
        let p = &personal[global];
        (p.x.iter().map(|x| x.clamp(lower, upper)).collect(), p.f)
    });
    Ok(AlpsoOutcome {
        best_x,
        best_value,
        evaluations,
        incumbent_history: history,
    })
}

fn argmin_l(personal: &[Best]) -> usize {
    personal
        .iter()
        .enumerate()
        .fold(0, |best, (k, p)| if p.l < personal[best].l { k } else { best })
}

/// Nearest channel to each coordinate, clamped into 1..=11.
pub fn decode_position(x: &[f64]) -> Contract {
    let lo = f64::from(Channel::MIN);
    let hi = f64::from(Channel::MAX);
    Contract::new(
        x.iter()
            .map(|&v| {
                let c = v.round().clamp(lo, hi) as u8;
                Channel::new(c).expect("clamped into range")
            })
            .collect(),
    )
}

/// Maximizes social welfare over the relaxed channel box `[1, 11]^n_AP`.
pub fn pso_optimize(model: &UtilityModel, cfg: &PsoConfig) -> Result<OptimizerResult> {
    if model.n_aps() == 0 {
        return Err(Error::EmptyGraph);
    }
    let start = Instant::now();
    let objective = |x: &[f64]| match model.welfare(&decode_position(x)) {
        Ok(w) => -w,
        Err(_) => f64::NAN,
    };
    let outcome = alpso_minimize(
        objective,
        model.n_aps(),
        f64::from(Channel::MIN),
        f64::from(Channel::MAX),
        cfg,
    )?;
    let best_contract = decode_position(&outcome.best_x);
    let best_welfare = model.welfare(&best_contract)?;
    Ok(OptimizerResult {
        best_contract,
        best_welfare,
        evaluations: outcome.evaluations,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MultilayerGraph;
    use crate::optimizers::exhaustive_optimum;
    use crate::radio::RadioParams;
    use crate::scenario::{Layout, Node, NodeKind, Point, ProviderId, Scenario, ScenarioConfig};

    fn model(nodes: Vec<Node>) -> UtilityModel {
        let s = Scenario::from_nodes(ScenarioConfig::new(Layout::Random, 1, 1, 0), nodes);
        let g = MultilayerGraph::build(&s, 30.0).unwrap();
        UtilityModel::new(&g, &RadioParams::default()).unwrap()
    }

    fn n(kind: NodeKind, x: f64, y: f64, provider: Option<ProviderId>) -> Node {
        Node {
            id: 0,
            kind,
            position: Point::new(x, y),
            activity: 0.5,
            provider,
        }
    }

    #[test]
    fn convex_sanity() {
        let cfg = PsoConfig {
            max_outer_iterations: 60,
            seed: 11,
            ..PsoConfig::default()
        };
        let out = alpso_minimize(|x| x.iter().map(|v| (v - 6.0).powi(2)).sum(), 4, 1.0, 11.0, &cfg).unwrap();
        for v in &out.best_x {
            assert!((v - 6.0).abs() < 1e-3, "{:?}", out.best_x);
        }
        assert!(out.incumbent_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn optimum_on_boundary_respected() {
        // unconstrained optimum at 0, outside the box: expect the bound 1
        let cfg = PsoConfig {
            max_outer_iterations: 40,
            seed: 3,
            ..PsoConfig::default()
        };
        let out = alpso_minimize(|x| x.iter().map(|v| v * v).sum(), 3, 1.0, 11.0, &cfg).unwrap();
        for v in &out.best_x {
            assert!((1.0..1.01).contains(v), "{:?}", out.best_x);
        }
    }

    #[test]
    fn decode_rounds_and_clamps() {
        let c = decode_position(&[0.2, 1.49, 1.5, 6.6, 11.4, 30.0]);
        assert_eq!(c.to_string(), "1;1;2;7;11;11");
    }

    #[test]
    fn flat_objective_found_immediately() {
        let m = model(vec![
            n(NodeKind::AccessPoint, 0.0, 0.0, Some(ProviderId::P1)),
            n(NodeKind::WirelessDevice, 10.0, 0.0, None),
        ]);
        let out = pso_optimize(&m, &PsoConfig::with_budget(200, 1)).unwrap();
        assert_eq!(out.best_welfare, 2.0);
    }

    #[test]
    fn two_ap_instance_reaches_exhaustive() {
        let m = model(vec![
            n(NodeKind::AccessPoint, 0.0, 0.0, Some(ProviderId::P1)),
            n(NodeKind::AccessPoint, 12.0, 0.0, Some(ProviderId::P2)),
            n(NodeKind::WirelessDevice, 4.0, 4.0, None),
            n(NodeKind::WirelessDevice, 9.0, 6.0, None),
            n(NodeKind::WirelessDevice, 16.0, 1.0, None),
        ]);
        let exact = exhaustive_optimum(&m, 6).unwrap();
        for seed in 0..10 {
            let out = pso_optimize(&m, &PsoConfig::with_budget(500, seed)).unwrap();
            assert_eq!(out.best_welfare, exact.best_welfare, "seed {seed}");
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let m = model(vec![
            n(NodeKind::AccessPoint, 0.0, 0.0, Some(ProviderId::P1)),
            n(NodeKind::AccessPoint, 12.0, 0.0, Some(ProviderId::P2)),
            n(NodeKind::AccessPoint, 6.0, 9.0, Some(ProviderId::P1)),
            n(NodeKind::WirelessDevice, 4.0, 4.0, None),
            n(NodeKind::WirelessDevice, 16.0, 1.0, None),
            n(NodeKind::WirelessDevice, 6.0, 14.0, None),
        ]);
        let seq = PsoConfig::with_budget(600, 9);
        let par = PsoConfig {
            parallel: true,
            ..seq.clone()
        };
        let a = pso_optimize(&m, &seq).unwrap();
        let b = pso_optimize(&m, &par).unwrap();
        assert_eq!(a.best_contract, b.best_contract);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn budget_sizing() {
        let cfg = PsoConfig::with_budget(12_500, 0);
        assert_eq!(cfg.max_outer_iterations, 63);
        assert!(cfg.evaluation_budget() >= 12_500);
        assert!(cfg.evaluation_budget() < 12_500 + 200);
        assert!(PsoConfig { swarm_size: 1, ..cfg }.validate().is_err());
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let out = alpso_minimize(|_| f64::NAN, 2, 1.0, 11.0, &PsoConfig::default());
        assert!(matches!(out, Err(Error::NonFiniteObjective)));
    }
}
