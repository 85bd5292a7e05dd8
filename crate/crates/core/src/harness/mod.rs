//! Experiment plans: scenario preparation, a resumable worker pool that
//! runs every (scenario, technique, repetition) cell, and CSV reports.

mod analysis;
mod plan;
mod records;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

pub use analysis::{
    gain_vs_metric, node_diff_map, summarize, utility_cdf, write_reports, DiffMap, DiffRow, ScatterRow, SummaryRow,
};
pub use plan::{Category, ExperimentPlan, Technique};
pub use records::{read_records, records_from_csv, records_to_csv, CellKey, RecordWriter, RunRecord};

use crate::error::{Error, Result};
use crate::evaluator::UtilityModel;
use crate::graph::MultilayerGraph;
use crate::metrics::{MetricsOptions, MetricsReport, SimpleGraph};
use crate::negotiation::{run_mediation, MediationConfig};
use crate::optimizers::{pso_optimize, random_reference, PsoConfig};
use crate::scenario::ScenarioDocument;
use crate::scenario::{assign_providers, generate_scenario, prune_isolated, Scenario, ScenarioConfig};
use crate::seed::{derive_seed, domain};

/// Scenario draws retried before giving up on a (category, graph) slot
/// whose pruned deployments keep coming out empty.
pub const MAX_SCENARIO_ATTEMPTS: u64 = 100;

pub const RECORDS_FILE: &str = "records.csv";
pub const PLAN_FILE: &str = "plan.toml";
pub const SCENARIO_DIR: &str = "scenarios";

/// A generated, pruned, provider-split scenario with everything the
/// solvers and reports need.
#[derive(Clone, Debug)]
pub struct PreparedScenario {
    pub id: String,
    pub category: usize,
    pub graph_index: usize,
    pub scenario: Scenario,
    pub graph: MultilayerGraph,
    pub model: UtilityModel,
    pub metrics: MetricsReport,
}

pub fn scenario_id(category: usize, graph: usize) -> String {
    format!("c{category}-g{graph}")
}

pub fn prepare_scenario(plan: &ExperimentPlan, category: usize, graph_index: usize) -> Result<PreparedScenario> {
    let cat = plan
        .categories
        .get(category)
        .ok_or_else(|| Error::Plan(format!("no category {category}")))?;
    let radius = plan.radio.interference_radius_m;
    let (c, g) = (category as u64, graph_index as u64);
    for attempt in 0..MAX_SCENARIO_ATTEMPTS {
        let seed = derive_seed(plan.master_seed, &[domain::SCENARIO, c, g, attempt]);
        let mut config = ScenarioConfig::new(cat.layout, cat.n_aps, cat.clients_per_ap, seed);
        config.activity = plan.activity;
        config.area_side = ScenarioConfig::area_side_for(cat.n_aps, plan.reference_side_m);
        let pruned = prune_isolated(&generate_scenario(&config)?, radius);
        if pruned.is_empty() {
            continue;
        }
        let split_seed = derive_seed(plan.master_seed, &[domain::PROVIDERS, c, g, attempt]);
        let scenario = assign_providers(&pruned, split_seed);
        let graph = MultilayerGraph::build(&scenario, radius)?;
        let model = UtilityModel::new(&graph, &plan.radio)?;
        let metrics = MetricsReport::compute(&SimpleGraph::from_interference(&graph), MetricsOptions::default());
        return Ok(PreparedScenario {
            id: scenario_id(category, graph_index),
            category,
            graph_index,
            scenario,
            graph,
            model,
            metrics,
        });
    }
    Err(Error::Plan(format!(
        "category {category} graph {graph_index}: every pruned draw was empty"
    )))
}

pub fn prepare_all(plan: &ExperimentPlan) -> Result<Vec<PreparedScenario>> {
    let mut out = Vec::with_capacity(plan.categories.len() * plan.graphs_per_category);
    for c in 0..plan.categories.len() {
        for g in 0..plan.graphs_per_category {
            out.push(prepare_scenario(plan, c, g)?);
        }
    }
    Ok(out)
}

pub fn job_seed(plan: &ExperimentPlan, key: CellKey) -> u64 {
    let (c, g, t, r) = key;
    derive_seed(plan.master_seed, &[domain::JOB, c as u64, g as u64, t.tag(), r as u64])
}

/// Runs one cell. `wall_time_s` covers the solver call only.
pub fn run_cell(
    plan: &ExperimentPlan,
    prepared: &PreparedScenario,
    technique: Technique,
    repetition: usize,
) -> Result<RunRecord> {
    let key = (prepared.category, prepared.graph_index, technique, repetition);
    let seed = job_seed(plan, key);
    let model = &prepared.model;
    let iterations = plan.iterations_per_ap * model.n_aps();

    let start = Instant::now();
    let (contract, evaluations) = match technique {
        Technique::Random => {
            let r = random_reference(model, seed)?;
            (r.best_contract, r.evaluations)
        }
        Technique::Hc => {
            let o = run_mediation(model, &MediationConfig::hill_climbers(iterations, seed))?;
            (o.final_agreement, iterations)
        }
        Technique::Sa => {
            let o = run_mediation(model, &MediationConfig::annealers(model, iterations, seed))?;
            (o.final_agreement, iterations)
        }
        Technique::Pso => {
            let cfg = PsoConfig {
                parallel: plan.pso_parallel,
                ..PsoConfig::with_budget(iterations, seed)
            };
            let r = pso_optimize(model, &cfg)?;
            (r.best_contract, r.evaluations)
        }
    };
    let wall_time_s = start.elapsed().as_secs_f64();

    let eval = model.evaluate(&contract)?;
    let cat = &plan.categories[prepared.category];
    Ok(RunRecord {
        scenario_id: prepared.id.clone(),
        category: prepared.category,
        layout: cat.layout,
        n_aps: cat.n_aps,
        clients_per_ap: cat.clients_per_ap,
        graph: prepared.graph_index,
        technique,
        repetition,
        seed,
        welfare: eval.welfare(),
        wall_time_s,
        evaluations,
        contract,
        node_utilities: eval.node_utilities,
    })
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Stop after this many new cells (the rest stay pending for a later
    /// resume).
    pub cell_limit: Option<usize>,
}

#[derive(Debug)]
pub struct PlanRun {
    pub plan: ExperimentPlan,
    pub scenarios: Vec<PreparedScenario>,
    /// Every completed cell, sorted by key.
    pub records: Vec<RunRecord>,
    pub newly_run: usize,
}

impl PlanRun {
    pub fn scenario(&self, id: &str) -> Option<&PreparedScenario> {
        self.scenarios.iter().find(|s| s.id == id)
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() == self.plan.cell_count()
    }
}

fn all_keys(plan: &ExperimentPlan) -> Vec<CellKey> {
    let mut keys = Vec::with_capacity(plan.cell_count());
    for c in 0..plan.categories.len() {
        for g in 0..plan.graphs_per_category {
            for &t in &plan.techniques {
                for r in 0..plan.repetitions {
                    keys.push((c, g, t, r));
                }
            }
        }
    }
    keys
}

/// Runs `plan` into `out_dir`, resuming from an existing `records.csv`.
/// Records are flushed one line at a time by a single writer. Fails with
/// [`Error::FailedCells`] after all other cells finish if any cell fails.
pub fn run_plan(plan: &ExperimentPlan, out_dir: &Path, options: &RunOptions) -> Result<PlanRun> {
    plan.validate()?;
    let scenario_dir = out_dir.join(SCENARIO_DIR);
    fs::create_dir_all(&scenario_dir).map_err(|e| Error::io(&scenario_dir, e))?;

    let plan_path = out_dir.join(PLAN_FILE);
    if plan_path.exists() {
        let text = fs::read_to_string(&plan_path).map_err(|e| Error::io(&plan_path, e))?;
        if ExperimentPlan::from_toml(&text)? != *plan {
            return Err(Error::Plan(format!(
                "{} holds a different plan; use a fresh output directory",
                plan_path.display()
            )));
        }
    } else {
        fs::write(&plan_path, plan.to_toml()).map_err(|e| Error::io(&plan_path, e))?;
    }

    let scenarios = prepare_all(plan)?;
    for p in &scenarios {
        let path = scenario_dir.join(format!("{}.scn", p.id));
        let doc = ScenarioDocument {
            scenario: p.scenario.clone(),
            radio: Some(plan.radio.clone()),
        };
        fs::write(&path, doc.to_text()).map_err(|e| Error::io(&path, e))?;
    }

    let records_path = out_dir.join(RECORDS_FILE);
    let valid: HashSet<CellKey> = all_keys(plan).into_iter().collect();
    let mut existing = if records_path.exists() {
        read_records(&records_path)?
    } else {
        Vec::new()
    };
    let mut seen = HashSet::new();
    existing.retain(|r| valid.contains(&r.key()) && seen.insert(r.key()));
    let mut writer = RecordWriter::create(&records_path, &existing)?;

    let mut pending: Vec<CellKey> = all_keys(plan).into_iter().filter(|k| !seen.contains(k)).collect();
    if let Some(limit) = options.cell_limit {
        pending.truncate(limit);
    }
    let per_category = plan.graphs_per_category;
    let workers = options
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, pending.len().max(1));

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(CellKey, Result<RunRecord>)>();
    let mut records = existing;
    let mut failures: Vec<(CellKey, Error)> = Vec::new();
    let mut write_error = None;
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, pending, scenarios) = (&next, &pending, &scenarios);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&key) = pending.get(i) else { break };
                let (c, g, t, r) = key;
                let prepared = &scenarios[c * per_category + g];
                if tx.send((key, run_cell(plan, prepared, t, r))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (key, result) in rx {
            match result {
                Ok(record) => {
                    if write_error.is_none() {
                        if let Err(e) = writer.append(&record) {
                            write_error = Some(e);
                        }
                    }
                    records.push(record);
                }
                Err(e) => failures.push((key, e)),
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }
    if let Some((key, first)) = failures.first() {
        return Err(Error::FailedCells {
            failed: failures.len(),
            total: pending.len(),
            first: format!("{key:?}: {first}"),
        });
    }
    records.sort_by_key(|r| r.key());
    Ok(PlanRun {
        plan: plan.clone(),
        scenarios,
        records,
        newly_run: pending.len(),
    })
}
