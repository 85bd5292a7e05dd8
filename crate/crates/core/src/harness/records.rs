use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::plan::Technique;
use crate::error::{Error, Result};
use crate::radio::Contract;
use crate::scenario::Layout;

/// One solver run on one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub scenario_id: String,
    pub category: usize,
    pub layout: Layout,
    pub n_aps: usize,
    pub clients_per_ap: usize,
    pub graph: usize,
    pub technique: Technique,
    pub repetition: usize,
    pub seed: u64,
    pub welfare: f64,
    pub wall_time_s: f64,
    pub evaluations: usize,
    pub contract: Contract,
    pub node_utilities: Vec<Option<f64>>,
}

/// Identifies a cell of the plan.
pub type CellKey = (usize, usize, Technique, usize);

impl RunRecord {
    pub fn key(&self) -> CellKey {
        (self.category, self.graph, self.technique, self.repetition)
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    scenario_id: String,
    category: usize,
    layout: Layout,
    n_aps: usize,
    clients_per_ap: usize,
    graph: usize,
    technique: Technique,
    repetition: usize,
    seed: u64,
    welfare: f64,
    wall_time_s: f64,
    evaluations: usize,
    contract: String,
    node_utilities: String,
}

fn join_utilities(values: &[Option<f64>]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        if let Some(u) = v {
            let _ = write!(out, "{u}");
        }
    }
    out
}

fn split_utilities(text: &str) -> std::result::Result<Vec<Option<f64>>, String> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|t| {
            if t.is_empty() {
                Ok(None)
            } else {
                t.parse().map(Some).map_err(|_| format!("bad utility `{t}`"))
            }
        })
        .collect()
}

impl From<&RunRecord> for Row {
    fn from(r: &RunRecord) -> Self {
        Row {
            scenario_id: r.scenario_id.clone(),
            category: r.category,
            layout: r.layout,
            n_aps: r.n_aps,
            clients_per_ap: r.clients_per_ap,
            graph: r.graph,
            technique: r.technique,
            repetition: r.repetition,
            seed: r.seed,
            welfare: r.welfare,
            wall_time_s: r.wall_time_s,
            evaluations: r.evaluations,
            contract: r.contract.to_string(),
            node_utilities: join_utilities(&r.node_utilities),
        }
    }
}

impl TryFrom<Row> for RunRecord {
    type Error = String;

    fn try_from(row: Row) -> std::result::Result<Self, String> {
        Ok(RunRecord {
            contract: row.contract.parse().map_err(|e: Error| e.to_string())?,
            node_utilities: split_utilities(&row.node_utilities)?,
            scenario_id: row.scenario_id,
            category: row.category,
            layout: row.layout,
            n_aps: row.n_aps,
            clients_per_ap: row.clients_per_ap,
            graph: row.graph,
            technique: row.technique,
            repetition: row.repetition,
            seed: row.seed,
            welfare: row.welfare,
            wall_time_s: row.wall_time_s,
            evaluations: row.evaluations,
        })
    }
}

/// Serializes records to CSV text, header included.
pub fn records_to_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(Row::from(r))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Plan(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses records written by [`RecordWriter`] or [`records_to_csv`].
/// An unterminated last line (an interrupted write) is ignored.
pub fn records_from_csv(text: &str) -> Result<Vec<RunRecord>> {
    let complete = match text.rfind('\n') {
        Some(end) => &text[..=end],
        None => "",
    };
    let mut reader = csv::Reader::from_reader(complete.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let record = RunRecord::try_from(row?).map_err(|m| Error::parse(i + 2, m))?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    records_from_csv(&text)
}

/// Appends records one line at a time, flushing after each.
pub struct RecordWriter {
    file: File,
    path: std::path::PathBuf,
}

impl RecordWriter {
    /// Rewrites `path` to hold exactly `existing`, then opens it for
    /// appending. This drops any partial trailing line.
    pub fn create(path: &Path, existing: &[RunRecord]) -> Result<Self> {
        let mut text = records_to_csv(existing)?;
        if existing.is_empty() {
            text = header_line();
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(RecordWriter {
            file,
            path: path.to_path_buf(),
        })
    }

    pub fn append(&mut self, record: &RunRecord) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.serialize(Row::from(record))?;
        let bytes = w.into_inner().map_err(|e| Error::Plan(e.to_string()))?;
        self.file
            .write_all(&bytes)
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

fn header_line() -> String {
    "scenario_id,category,layout,n_aps,clients_per_ap,graph,technique,repetition,seed,welfare,wall_time_s,evaluations,contract,node_utilities\n".to_string()
}
