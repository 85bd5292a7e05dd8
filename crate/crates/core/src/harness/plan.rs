use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::RadioParams;
use crate::scenario::{ActivityModel, Layout, ScenarioConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Random,
    Hc,
    Sa,
    Pso,
}

impl Technique {
    pub const ALL: [Technique; 4] = [Technique::Random, Technique::Hc, Technique::Sa, Technique::Pso];

    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Random => "random",
            Technique::Hc => "hc",
            Technique::Sa => "sa",
            Technique::Pso => "pso",
        }
    }

    /// Stable numeric tag used in seed derivation.
    pub fn tag(self) -> u64 {
        match self {
            Technique::Random => 0,
            Technique::Hc => 1,
            Technique::Sa => 2,
            Technique::Pso => 3,
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Technique::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown technique `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Category {
    pub layout: Layout,
    pub n_aps: usize,
    pub clients_per_ap: usize,
}

impl Category {
    pub fn new(layout: Layout, n_aps: usize, clients_per_ap: usize) -> Self {
        Category {
            layout,
            n_aps,
            clients_per_ap,
        }
    }

    /// Node count before pruning.
    pub fn node_count(&self) -> usize {
        self.n_aps * (1 + self.clients_per_ap)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({}, {})",
            self.layout,
            self.n_aps,
            self.n_aps * self.clients_per_ap
        )
    }
}

fn default_iterations_per_ap() -> usize {
    crate::negotiation::DEFAULT_ITERATIONS_PER_AP
}

fn default_reference_side() -> f64 {
    ScenarioConfig::REFERENCE_SIDE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub master_seed: u64,
    pub graphs_per_category: usize,
    pub repetitions: usize,
    pub techniques: Vec<Technique>,
    /// Negotiation deadline per AP; PSO gets the same evaluation budget.
    #[serde(default = "default_iterations_per_ap")]
    pub iterations_per_ap: usize,
    #[serde(default)]
    pub activity: ActivityModel,
    /// Area side for 15 APs; other sizes keep the same AP density.
    #[serde(default = "default_reference_side")]
    pub reference_side_m: f64,
    /// Evaluate PSO generations on the rayon pool.
    #[serde(default)]
    pub pso_parallel: bool,
    #[serde(default)]
    pub radio: RadioParams,
    pub categories: Vec<Category>,
}

impl ExperimentPlan {
    /// Four size categories per layout, 10 graphs each, 5 repetitions.
    pub fn desk(master_seed: u64) -> Self {
        let sizes = [(15, 1), (15, 5), (50, 1), (50, 5)];
        Self::with_sizes(master_seed, &sizes, 10, 5)
    }

    /// 15/50/100 APs × 1/5 clients per AP per layout, 50 graphs, 10 repetitions.
    pub fn full_scale(master_seed: u64) -> Self {
        let sizes = [(15, 1), (15, 5), (50, 1), (50, 5), (100, 1), (100, 5)];
        Self::with_sizes(master_seed, &sizes, 50, 10)
    }

    fn with_sizes(master_seed: u64, sizes: &[(usize, usize)], graphs: usize, reps: usize) -> Self {
        let categories = [Layout::Random, Layout::Square]
            .into_iter()
            .flat_map(|layout| sizes.iter().map(move |&(n, c)| Category::new(layout, n, c)))
            .collect();
        ExperimentPlan {
            master_seed,
            graphs_per_category: graphs,
            repetitions: reps,
            techniques: Technique::ALL.to_vec(),
            iterations_per_ap: default_iterations_per_ap(),
            activity: ActivityModel::default(),
            reference_side_m: default_reference_side(),
            pso_parallel: false,
            radio: RadioParams::default(),
            categories,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Plan(m.to_string()));
        if self.categories.is_empty() {
            return bad("at least one category is required");
        }
        if self.graphs_per_category == 0 || self.repetitions == 0 || self.iterations_per_ap == 0 {
            return bad("graphs_per_category, repetitions and iterations_per_ap must be at least 1");
        }
        if !(self.reference_side_m > 0.0 && self.reference_side_m.is_finite()) {
            return bad("reference_side_m must be positive");
        }
        if self.techniques.is_empty() {
            return bad("at least one technique is required");
        }
        let mut seen = self.techniques.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.techniques.len() {
            return bad("techniques must be distinct");
        }
        if self.categories.iter().any(|c| c.n_aps == 0 || c.clients_per_ap == 0) {
            return bad("category counts must be at least 1");
        }
        self.radio.validate()
    }

    pub fn cell_count(&self) -> usize {
        self.categories.len() * self.graphs_per_category * self.repetitions * self.techniques.len()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = toml::from_str(text).map_err(|e| Error::Plan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let plan = ExperimentPlan::desk(42);
        let text = plan.to_toml();
        assert_eq!(ExperimentPlan::from_toml(&text).unwrap(), plan);
    }

    #[test]
    fn minimal_plan_uses_defaults() {
        let text = r#"
            master_seed = 1
            graphs_per_category = 2
            repetitions = 3
            techniques = ["random", "sa"]

            [[categories]]
            layout = "square"
            n_aps = 4
            clients_per_ap = 2
        "#;
        let plan = ExperimentPlan::from_toml(text).unwrap();
        assert_eq!(plan.iterations_per_ap, 250);
        assert_eq!(plan.radio, RadioParams::default());
        assert_eq!(plan.cell_count(), 12);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_counts() {
        let text = "master_seed = 1\ngraphs_per_category = 2\nrepetitions = 1\ntechniques = [\"hc\"]\nwidgets = 3\ncategories = []\n";
        assert!(matches!(ExperimentPlan::from_toml(text), Err(Error::Plan(m)) if m.contains("widgets")));
        let mut plan = ExperimentPlan::desk(1);
        plan.repetitions = 0;
        assert!(plan.validate().is_err());
        let mut plan = ExperimentPlan::desk(1);
        plan.techniques = vec![Technique::Hc, Technique::Hc];
        assert!(plan.validate().is_err());
    }
}
