use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use channeg::harness::{run_plan, write_reports, ExperimentPlan, RunOptions};
use channeg::metrics::{MetricsOptions, MetricsReport, SimpleGraph};
use channeg::negotiation::{run_mediation, AgentStrategy, MediationConfig, DEFAULT_ITERATIONS_PER_AP};
use channeg::optimizers::{exhaustive_optimum, pso_optimize, random_reference, PsoConfig, EXHAUSTIVE_AP_LIMIT};
use channeg::scenario::{
    assign_providers, generate_scenario, load_scenario_document, prune_isolated, ActivityModel, ScenarioDocument,
};
use channeg::seed::{derive_seed, domain};
use channeg::{Contract, Layout, MultilayerGraph, ProviderId, RadioParams, Scenario, ScenarioConfig, UtilityModel};

#[derive(Parser)]
#[command(
    name = "channeg",
    version,
    about = "Wi-Fi channel assignment by mediated negotiation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, prune and split a scenario.
    Gen(GenArgs),
    /// Negotiate a channel assignment between the two providers.
    Negotiate(NegotiateArgs),
    /// Run a centralized baseline.
    Optimize(OptimizeArgs),
    /// Structural metrics of the interference layer.
    Metrics(MetricsArgs),
    /// Run an experiment plan and write CSV reports.
    Bench(BenchArgs),
    /// Write a preset experiment plan.
    Plan(PlanArgs),
}

/// Radio overrides. Unset flags fall back to the scenario file, then to
/// the built-in defaults.
#[derive(Args, Clone, Default)]
struct RadioArgs {
    #[arg(long)]
    tx_power_dbm: Option<f64>,
    #[arg(long)]
    ref_loss_db: Option<f64>,
    #[arg(long)]
    path_loss_exponent: Option<f64>,
    #[arg(long)]
    noise_dbm: Option<f64>,
    #[arg(long)]
    sinr_min_db: Option<f64>,
    #[arg(long)]
    sinr_max_db: Option<f64>,
    /// Interference (and pruning) radius in meters.
    #[arg(long)]
    radius: Option<f64>,
}

impl RadioArgs {
    fn is_empty(&self) -> bool {
        [
            self.tx_power_dbm,
            self.ref_loss_db,
            self.path_loss_exponent,
            self.noise_dbm,
            self.sinr_min_db,
            self.sinr_max_db,
            self.radius,
        ]
        .iter()
        .all(Option::is_none)
    }

    fn apply(&self, base: RadioParams) -> Result<RadioParams> {
        let p = RadioParams {
            tx_power_dbm: self.tx_power_dbm.unwrap_or(base.tx_power_dbm),
            ref_loss_db: self.ref_loss_db.unwrap_or(base.ref_loss_db),
            path_loss_exponent: self.path_loss_exponent.unwrap_or(base.path_loss_exponent),
            noise_floor_dbm: self.noise_dbm.unwrap_or(base.noise_floor_dbm),
            sinr_min_db: self.sinr_min_db.unwrap_or(base.sinr_min_db),
            sinr_max_db: self.sinr_max_db.unwrap_or(base.sinr_max_db),
            interference_radius_m: self.radius.unwrap_or(base.interference_radius_m),
            ..base
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    layout: LayoutArg,
    #[arg(long)]
    aps: usize,
    #[arg(long)]
    clients_per_ap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side of the square area in meters; by default scaled with the AP count.
    #[arg(long)]
    area_side: Option<f64>,
    /// Fixed activity index of every node.
    #[arg(long, default_value_t = 0.5)]
    activity: f64,
    /// Keep stranded nodes and skip the provider split.
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write the three-layer edge list.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    radio: RadioArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Random,
    Square,
}

impl From<LayoutArg> for Layout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Random => Layout::Random,
            LayoutArg::Square => Layout::Square,
        }
    }
}

#[derive(Args)]
struct NegotiateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "sa")]
    strategy: StrategyArg,
    /// Deadline; defaults to 250 per AP.
    #[arg(long)]
    iterations: Option<usize>,
    /// Initial annealing temperature for both agents; defaults to 5% of
    /// each agent's node count.
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write the `iteration,welfare` trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    radio: RadioArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Hc,
    Sa,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// PSO evaluation budget; defaults to 250 per AP.
    #[arg(long)]
    evaluations: Option<usize>,
    /// Evaluate PSO generations in parallel.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    radio: RadioArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Random,
    Pso,
    Exhaustive,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long, required = true, num_args = 1..)]
    scenario: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Score isolated vertices 0 instead of 1 in the clustering coefficient.
    #[arg(long)]
    isolated_zero: bool,
    /// Report raw rather than normalized betweenness.
    #[arg(long)]
    raw_betweenness: bool,
    #[command(flatten)]
    radio: RadioArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, env = "CHANNEG_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Full,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

struct Loaded {
    scenario: Scenario,
    params: RadioParams,
    model: UtilityModel,
}

fn load(path: &Path, radio: &RadioArgs) -> Result<Loaded> {
    let doc = load_scenario_document(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let params = radio.apply(doc.radio.unwrap_or_default())?;
    let graph = MultilayerGraph::build(&doc.scenario, params.interference_radius_m)?;
    let model = UtilityModel::new(&graph, &params)?;
    Ok(Loaded {
        scenario: doc.scenario,
        params,
        model,
    })
}

fn gen(args: GenArgs) -> Result<()> {
    let params = args.radio.apply(RadioParams::default())?;
    let mut config = ScenarioConfig::new(args.layout.into(), args.aps, args.clients_per_ap, args.seed);
    config.activity = ActivityModel::Fixed(args.activity);
    if let Some(side) = args.area_side {
        config.area_side = side;
    }
    let mut scenario = generate_scenario(&config)?;
    if !args.raw {
        scenario = prune_isolated(&scenario, params.interference_radius_m);
        if scenario.is_empty() {
            bail!("every node was pruned; try another seed or a smaller area");
        }
        scenario = assign_providers(&scenario, derive_seed(args.seed, &[domain::PROVIDERS]));
    }
    if let Some(path) = &args.graph {
        let graph = MultilayerGraph::build(&scenario, params.interference_radius_m)?;
        write_text(path, &graph.export_edge_list())?;
    }
    let doc = ScenarioDocument {
        scenario,
        radio: (!args.radio.is_empty()).then_some(params),
    };
    write_text(&args.out, &doc.to_text())?;
    eprintln!(
        "{}: {} APs, {} WDs",
        args.out.display(),
        doc.scenario.n_aps(),
        doc.scenario.n_wds()
    );
    Ok(())
}

fn join_utilities(values: &[Option<f64>]) -> String {
    values
        .iter()
        .map(|v| v.map(|u| u.to_string()).unwrap_or_default())
        .collect::<Vec<_>>()
        .join(";")
}

struct ResultRow<'a> {
    scenario: &'a Path,
    technique: &'a str,
    seed: u64,
    budget: usize,
    evaluations: usize,
    contract: &'a Contract,
    wall_time_s: f64,
}

fn write_result(path: &Path, row: ResultRow<'_>, model: &UtilityModel) -> Result<()> {
    let eval = model.evaluate(row.contract)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "scenario",
        "technique",
        "seed",
        "budget",
        "evaluations",
        "welfare",
        "p1_utility",
        "p2_utility",
        "wall_time_s",
        "contract",
        "node_utilities",
    ])?;
    w.write_record([
        row.scenario.display().to_string(),
        row.technique.to_string(),
        row.seed.to_string(),
        row.budget.to_string(),
        row.evaluations.to_string(),
        eval.welfare().to_string(),
        eval.provider_utility(ProviderId::P1).to_string(),
        eval.provider_utility(ProviderId::P2).to_string(),
        row.wall_time_s.to_string(),
        row.contract.to_string(),
        join_utilities(&eval.node_utilities),
    ])?;
    w.flush()?;
    println!("welfare {:.6}  contract {}", eval.welfare(), row.contract);
    Ok(())
}

fn negotiate(args: NegotiateArgs) -> Result<()> {
    let loaded = load(&args.scenario, &args.radio)?;
    let model = &loaded.model;
    let iterations = args.iterations.unwrap_or(DEFAULT_ITERATIONS_PER_AP * model.n_aps());
    let config = match (args.strategy, args.tau0) {
        (StrategyArg::Hc, _) => MediationConfig::hill_climbers(iterations, args.seed),
        (StrategyArg::Sa, None) => MediationConfig::annealers(model, iterations, args.seed),
        (StrategyArg::Sa, Some(tau0)) => MediationConfig::new(
            iterations,
            args.seed,
            [AgentStrategy::Annealer {
                initial_temperature: tau0,
            }; 2],
        ),
    };
    let start = Instant::now();
    let outcome = run_mediation(model, &config)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    if let Some(path) = &args.trace {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iteration", "welfare"])?;
        for (t, welfare) in &outcome.welfare_trace {
            w.write_record([t.to_string(), welfare.to_string()])?;
        }
        w.flush()?;
    }
    eprintln!("{} of {} proposals accepted", outcome.accepted_count, iterations);
    let technique = match args.strategy {
        StrategyArg::Hc => "hc",
        StrategyArg::Sa => "sa",
    };
    write_result(
        &args.out,
        ResultRow {
            scenario: &args.scenario,
            technique,
            seed: args.seed,
            budget: iterations,
            evaluations: iterations,
            contract: &outcome.final_agreement,
            wall_time_s,
        },
        model,
    )
}

fn optimize(args: OptimizeArgs) -> Result<()> {
    let loaded = load(&args.scenario, &args.radio)?;
    let model = &loaded.model;
    let budget = args.evaluations.unwrap_or(DEFAULT_ITERATIONS_PER_AP * model.n_aps());
    let (technique, result) = match args.method {
        MethodArg::Random => ("random", random_reference(model, args.seed)?),
        MethodArg::Pso => {
            let cfg = PsoConfig {
                parallel: args.parallel,
                ..PsoConfig::with_budget(budget, args.seed)
            };
            ("pso", pso_optimize(model, &cfg)?)
        }
        MethodArg::Exhaustive => ("exhaustive", exhaustive_optimum(model, EXHAUSTIVE_AP_LIMIT)?),
    };
    write_result(
        &args.out,
        ResultRow {
            scenario: &args.scenario,
            technique,
            seed: args.seed,
            budget,
            evaluations: result.evaluations,
            contract: &result.best_contract,
            wall_time_s: result.wall_time.as_secs_f64(),
        },
        model,
    )
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let options = MetricsOptions {
        isolated: if args.isolated_zero {
            channeg::metrics::IsolatedClustering::Zero
        } else {
            channeg::metrics::IsolatedClustering::One
        },
        normalized_betweenness: !args.raw_betweenness,
    };
    let mut w = csv::Writer::from_path(&args.out)?;
    let mut header = vec!["scenario".to_string()];
    header.extend(MetricsReport::NAMES.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for path in &args.scenario {
        let loaded = load(path, &args.radio)?;
        let graph = MultilayerGraph::build(&loaded.scenario, loaded.params.interference_radius_m)?;
        let report = MetricsReport::compute(&SimpleGraph::from_interference(&graph), options);
        let mut row = vec![path.display().to_string()];
        row.push(report.order.to_string());
        row.push(report.diameter.to_string());
        row.push(report.wiener_index.to_string());
        row.push(report.density.to_string());
        row.push(report.clustering_coefficient.to_string());
        row.push(report.avg_betweenness.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let plan = ExperimentPlan::from_toml(&read_text(&args.plan)?)?;
    let options = RunOptions {
        workers: args.workers,
        cell_limit: None,
    };
    eprintln!("{} cells into {}", plan.cell_count(), args.out_dir.display());
    let start = Instant::now();
    let run = run_plan(&plan, &args.out_dir, &options)?;
    write_reports(&args.out_dir, &run)?;
    eprintln!(
        "ran {} new cells in {:.1?}; {} records total",
        run.newly_run,
        start.elapsed(),
        run.records.len()
    );
    Ok(())
}

fn plan(args: PlanArgs) -> Result<()> {
    let plan = match args.preset {
        PresetArg::Desk => ExperimentPlan::desk(args.seed),
        PresetArg::Full => ExperimentPlan::full_scale(args.seed),
    };
    write_text(&args.out, &plan.to_toml())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(a) => gen(a),
        Command::Negotiate(a) => negotiate(a),
        Command::Optimize(a) => optimize(a),
        Command::Metrics(a) => metrics(a),
        Command::Bench(a) => bench(a),
        Command::Plan(a) => plan(a),
    }
}
