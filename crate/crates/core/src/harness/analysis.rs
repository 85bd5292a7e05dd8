use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::plan::Technique;
use super::records::RunRecord;
use super::{PlanRun, PreparedScenario};
use crate::error::{Error, Result};
use crate::scenario::{Layout, NodeKind};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub category: usize,
    pub layout: Layout,
    pub n_aps: usize,
    pub clients_per_ap: usize,
    pub technique: Technique,
    pub runs: usize,
    pub welfare_mean: f64,
    pub welfare_std: f64,
    pub wall_time_mean_s: f64,
    pub wall_time_std_s: f64,
}

/// Mean and sample standard deviation, summed in ascending order so the
/// result does not depend on record order.
fn mean_std(mut values: Vec<f64>) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    sq.sort_by(f64::total_cmp);
    (mean, (sq.iter().sum::<f64>() / (n - 1.0)).sqrt())
}

/// Welfare and wall-time statistics per (category, technique).
pub fn summarize(records: &[RunRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::EmptyCell("summary".into()));
    }
    let mut groups: BTreeMap<(usize, Technique), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.category, r.technique)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((category, technique), rs)| {
            let (welfare_mean, welfare_std) = mean_std(rs.iter().map(|r| r.welfare).collect());
            let (wall_time_mean_s, wall_time_std_s) = mean_std(rs.iter().map(|r| r.wall_time_s).collect());
            SummaryRow {
                category,
                layout: rs[0].layout,
                n_aps: rs[0].n_aps,
                clients_per_ap: rs[0].clients_per_ap,
                technique,
                runs: rs.len(),
                welfare_mean,
                welfare_std,
                wall_time_mean_s,
                wall_time_std_s,
            }
        })
        .collect())
}

fn runs_of<'a>(records: &'a [RunRecord], scenario_id: &str, technique: Technique) -> Vec<&'a RunRecord> {
    records
        .iter()
        .filter(|r| r.scenario_id == scenario_id && r.technique == technique)
        .collect()
}

/// Empirical CDF of node utilities pooled over every repetition of
/// `technique` on one scenario: `(u, P(U <= u))` at each distinct value.
pub fn utility_cdf(records: &[RunRecord], scenario_id: &str, technique: Technique) -> Result<Vec<(f64, f64)>> {
    let mut values: Vec<f64> = runs_of(records, scenario_id, technique)
        .iter()
        .flat_map(|r| r.node_utilities.iter().flatten().copied())
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyCell(format!("{scenario_id}/{technique}")));
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = p,
            _ => out.push((v, p)),
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffRow {
    pub node: usize,
    pub kind: &'static str,
    pub x: f64,
    pub y: f64,
    pub u_sa: f64,
    pub u_pso: f64,
    /// `u_sa - u_pso`.
    pub diff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffMap {
    pub scenario_id: String,
    pub rows: Vec<DiffRow>,
    /// Mean over evaluated nodes of the per-node SA mean.
    pub mean_sa: f64,
    pub mean_pso: f64,
}

fn node_means(runs: &[&RunRecord], n: usize) -> Vec<Option<f64>> {
    (0..n)
        .map(|i| {
            let vals: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.node_utilities.get(i).copied().flatten())
                .collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

/// Per-node SA minus PSO utility, each averaged over repetitions.
/// Unevaluated nodes are omitted.
pub fn node_diff_map(records: &[RunRecord], prepared: &PreparedScenario) -> Result<DiffMap> {
    let id = prepared.id.as_str();
    let sa = runs_of(records, id, Technique::Sa);
    let pso = runs_of(records, id, Technique::Pso);
    for (runs, t) in [(&sa, Technique::Sa), (&pso, Technique::Pso)] {
        if runs.is_empty() {
            return Err(Error::MissingTechnique(t.to_string(), id.to_string()));
        }
    }
    let nodes = &prepared.scenario.nodes;
    let (m_sa, m_pso) = (node_means(&sa, nodes.len()), node_means(&pso, nodes.len()));
    let rows: Vec<DiffRow> = nodes
        .iter()
        .filter_map(|node| {
            let (a, b) = (m_sa[node.id]?, m_pso[node.id]?);
            Some(DiffRow {
                node: node.id,
                kind: match node.kind {
                    NodeKind::AccessPoint => "ap",
                    NodeKind::WirelessDevice => "wd",
                },
                x: node.position.x,
                y: node.position.y,
                u_sa: a,
                u_pso: b,
                diff: a - b,
            })
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyCell(format!("{id} has no evaluated nodes")));
    }
    let n = rows.len() as f64;
    Ok(DiffMap {
        scenario_id: id.to_string(),
        mean_sa: rows.iter().map(|r| r.u_sa).sum::<f64>() / n,
        mean_pso: rows.iter().map(|r| r.u_pso).sum::<f64>() / n,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatterRow {
    pub scenario_id: String,
    pub layout: Layout,
    pub metric: &'static str,
    pub value: f64,
    /// Mean SA welfare over mean PSO welfare.
    pub ratio: f64,
}

/// One row per (scenario, metric) for scenarios where both SA and PSO
/// ran and the PSO mean welfare is positive.
pub fn gain_vs_metric(records: &[RunRecord], scenarios: &[PreparedScenario]) -> Vec<ScatterRow> {
    let mean = |rs: &[&RunRecord]| rs.iter().map(|r| r.welfare).sum::<f64>() / rs.len() as f64;
    let mut out = Vec::new();
    for s in scenarios {
        let sa = runs_of(records, &s.id, Technique::Sa);
        let pso = runs_of(records, &s.id, Technique::Pso);
        if sa.is_empty() || pso.is_empty() {
            continue;
        }
        let ratio = mean(&sa) / mean(&pso);
        if !ratio.is_finite() {
            continue;
        }
        for (metric, value) in s.metrics.values() {
            out.push(ScatterRow {
                scenario_id: s.id.clone(),
                layout: s.scenario.config.layout,
                metric,
                value,
                ratio,
            });
        }
    }
    out
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct MetricsRow<'a> {
    scenario_id: &'a str,
    category: usize,
    layout: Layout,
    graph: usize,
    n_aps: usize,
    n_wds: usize,
    order: usize,
    diameter: usize,
    wiener_index: u64,
    density: f64,
    clustering_coefficient: f64,
    avg_betweenness: f64,
}

#[derive(Serialize)]
struct CdfRow<'a> {
    scenario_id: &'a str,
    technique: Technique,
    utility: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct DiffFileRow<'a> {
    scenario_id: &'a str,
    node: usize,
    kind: &'static str,
    x: f64,
    y: f64,
    u_sa: f64,
    u_pso: f64,
    diff: f64,
    mean_sa: f64,
    mean_pso: f64,
}

/// Writes `summary.csv`, `metrics.csv`, `scatter.csv`, and for the first
/// graph of every category `cdf.csv` and (when SA and PSO both ran)
/// `diffmap.csv`.
pub fn write_reports(out_dir: &Path, run: &PlanRun) -> Result<()> {
    write_csv(&out_dir.join("summary.csv"), summarize(&run.records)?)?;

    write_csv(
        &out_dir.join("metrics.csv"),
        run.scenarios.iter().map(|s| MetricsRow {
            scenario_id: &s.id,
            category: s.category,
            layout: s.scenario.config.layout,
            graph: s.graph_index,
            n_aps: s.scenario.n_aps(),
            n_wds: s.scenario.n_wds(),
            order: s.metrics.order,
            diameter: s.metrics.diameter,
            wiener_index: s.metrics.wiener_index,
            density: s.metrics.density,
            clustering_coefficient: s.metrics.clustering_coefficient,
            avg_betweenness: s.metrics.avg_betweenness,
        }),
    )?;

    write_csv(
        &out_dir.join("scatter.csv"),
        gain_vs_metric(&run.records, &run.scenarios),
    )?;

    let showcase: Vec<&PreparedScenario> = run.scenarios.iter().filter(|s| s.graph_index == 0).collect();
    let mut cdf_rows = Vec::new();
    for s in &showcase {
        for &t in &run.plan.techniques {
            if let Ok(cdf) = utility_cdf(&run.records, &s.id, t) {
                cdf_rows.extend(
                    cdf.into_iter()
                        .map(|(utility, fraction)| (s.id.as_str(), t, utility, fraction)),
                );
            }
        }
    }
    write_csv(
        &out_dir.join("cdf.csv"),
        cdf_rows
            .into_iter()
            .map(|(scenario_id, technique, utility, fraction)| CdfRow {
                scenario_id,
                technique,
                utility,
                fraction,
            }),
    )?;

    let maps: Vec<DiffMap> = showcase
        .iter()
        .filter_map(|s| node_diff_map(&run.records, s).ok())
        .collect();
    write_csv(
        &out_dir.join("diffmap.csv"),
        maps.iter().flat_map(|m| {
            m.rows.iter().map(move |row| DiffFileRow {
                scenario_id: &m.scenario_id,
                node: row.node,
                kind: row.kind,
                x: row.x,
                y: row.y,
                u_sa: row.u_sa,
                u_pso: row.u_pso,
                diff: row.diff,
                mean_sa: m.mean_sa,
                mean_pso: m.mean_pso,
            })
        }),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::Contract;

    fn record(category: usize, technique: Technique, rep: usize, welfare: f64, utils: Vec<Option<f64>>) -> RunRecord {
        RunRecord {
            scenario_id: format!("c{category}-g0"),
            category,
            layout: Layout::Random,
            n_aps: 1,
            clients_per_ap: 1,
            graph: 0,
            technique,
            repetition: rep,
            seed: 0,
            welfare,
            wall_time_s: welfare / 10.0,
            evaluations: 1,
            contract: Contract::from_indices(&[1]).unwrap(),
            node_utilities: utils,
        }
    }

    #[test]
    fn summary_uses_sample_std() {
        let rs = vec![
            record(0, Technique::Hc, 0, 1.0, vec![]),
            record(0, Technique::Hc, 1, 2.0, vec![]),
            record(0, Technique::Hc, 2, 3.0, vec![]),
        ];
        let rows = summarize(&rs).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].runs, 3);
        assert!((rows[0].welfare_mean - 2.0).abs() < 1e-12);
        assert!((rows[0].welfare_std - 1.0).abs() < 1e-12);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn summary_ignores_record_order() {
        let mut rs: Vec<RunRecord> = (0..7)
            .map(|i| record(0, Technique::Sa, i, 0.1 * i as f64 + 1e-9, vec![]))
            .collect();
        let a = summarize(&rs).unwrap();
        rs.reverse();
        assert_eq!(summarize(&rs).unwrap(), a);
    }

    #[test]
    fn cdf_collapses_ties_and_ends_at_one() {
        let rs = vec![
            record(0, Technique::Sa, 0, 0.0, vec![Some(0.5), None, Some(0.2)]),
            record(0, Technique::Sa, 1, 0.0, vec![Some(0.5), Some(1.0)]),
        ];
        let cdf = utility_cdf(&rs, "c0-g0", Technique::Sa).unwrap();
        assert_eq!(cdf, vec![(0.2, 0.25), (0.5, 0.75), (1.0, 1.0)]);
        assert!(utility_cdf(&rs, "c0-g0", Technique::Pso).is_err());
    }
}
