//! File formats: filter definitions, custom schedules, run descriptors,
//! field dumps and trace metrics.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_second_order, run_simple, EngineError, IterationTrace, RoundMetrics};
use crate::lattice::{builtin_filter, LatticeError, LatticeFilter, ScalarField, Vertex};
use crate::schedule::{
    jacobi_general_schedule, jacobi_printed_schedule, CoefficientSchedule, ScheduleError, Triple,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed field dump: {0}")]
    Field(String),
    #[error("unknown filter {0:?}: not a built-in name or readable file")]
    UnknownFilter(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterEntry {
    pub offset: Vec<i64>,
    pub weight: f64,
}

/// `{"dim": d, "entries": [{"offset": [...], "weight": w}, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterFile {
    pub dim: usize,
    pub entries: Vec<FilterEntry>,
}

impl FilterFile {
    pub fn from_filter(filter: &LatticeFilter) -> Self {
        Self {
            dim: filter.dim(),
            entries: filter
                .entries()
                .iter()
                .map(|(offset, weight)| FilterEntry {
                    offset: offset.clone(),
                    weight: *weight,
                })
                .collect(),
        }
    }

    pub fn into_filter(self, label: &str) -> Result<LatticeFilter, IoError> {
        let entries = self.entries.into_iter().map(|e| (e.offset, e.weight)).collect();
        Ok(LatticeFilter::new(self.dim, entries)?.with_label(label))
    }
}

pub fn parse_filter(json: &str, label: &str) -> Result<LatticeFilter, IoError> {
    serde_json::from_str::<FilterFile>(json)?.into_filter(label)
}

pub fn load_filter(path: &Path) -> Result<LatticeFilter, IoError> {
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".into());
    parse_filter(&read_file(path)?, &label)
}

/// A built-in filter name, or else a path to a filter file (relative paths
/// are resolved against `base`).
pub fn resolve_filter(spec: &str, base: &Path) -> Result<LatticeFilter, IoError> {
    if let Some(f) = builtin_filter(spec) {
        return Ok(f);
    }
    let path = base.join(spec);
    if path.is_file() {
        load_filter(&path)
    } else {
        Err(IoError::UnknownFilter(spec.to_string()))
    }
}

/// `{"name": ..., "triples": [[a, b, c], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub name: String,
    pub triples: Vec<[f64; 3]>,
}

pub fn parse_schedule(json: &str) -> Result<CoefficientSchedule, IoError> {
    let file: ScheduleFile = serde_json::from_str(json)?;
    let triples = file.triples.iter().map(|t| Triple::new(t[0], t[1], t[2])).collect();
    Ok(CoefficientSchedule::tabulated(file.name, triples)?)
}

pub fn load_schedule(path: &Path) -> Result<CoefficientSchedule, IoError> {
    parse_schedule(&read_file(path)?)
}

/// Schedule field of a run descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Jacobi { alpha: f64, beta: f64 },
    /// "simple", "jacobi", or a path to a schedule file.
    Named(String),
}

/// `{"filter": ..., "schedule": ..., "rounds": n, "snapshots": [...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDescriptor {
    pub filter: String,
    pub schedule: ScheduleSpec,
    pub rounds: usize,
    #[serde(default)]
    pub snapshots: Vec<usize>,
}

impl RunDescriptor {
    pub fn parse(json: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(json)?)
    }

    /// Resolves filter and schedule (relative paths against `base`) and
    /// runs the recursion. `None` as schedule means simple gossip.
    pub fn resolve(
        &self,
        base: &Path,
    ) -> Result<(LatticeFilter, Option<CoefficientSchedule>), IoError> {
        let filter = resolve_filter(&self.filter, base)?;
        let schedule = match &self.schedule {
            ScheduleSpec::Named(s) if s == "simple" => None,
            ScheduleSpec::Named(s) if s == "jacobi" => Some(jacobi_printed_schedule(filter.dim())),
            ScheduleSpec::Named(path) => Some(load_schedule(&base.join(path))?),
            ScheduleSpec::Jacobi { alpha, beta } => Some(jacobi_general_schedule(*alpha, *beta)?),
        };
        Ok((filter, schedule))
    }

    pub fn run(&self, base: &Path) -> Result<IterationTrace, IoError> {
        let (filter, schedule) = self.resolve(base)?;
        Ok(match schedule {
            None => run_simple(&filter, self.rounds, &self.snapshots)?,
            Some(s) => run_second_order(&filter, &s, self.rounds, &self.snapshots)?,
        })
    }
}

/// Field dump with columns index_1..index_d, value; every box cell is written.
pub fn write_field_csv(field: &ScalarField, out: impl Write) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=field.dim()).map(|i| format!("index_{i}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    for (v, x) in field.iter() {
        let mut row: Vec<String> = v.iter().map(i64::to_string).collect();
        row.push(x.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field dump; the box is the smallest symmetric box holding all rows.
pub fn read_field_csv(input: impl Read) -> Result<ScalarField, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let dim = r.headers()?.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| {
        IoError::Field("need at least one index column and a value column".into())
    })?;
    let mut rows: Vec<(Vertex, f64)> = Vec::new();
    for record in r.records() {
        let record = record?;
        let parse = |s: &str| s.trim().to_string();
        let v = (0..dim)
            .map(|i| {
                parse(&record[i])
                    .parse::<i64>()
                    .map_err(|e| IoError::Field(format!("index {:?}: {e}", &record[i])))
            })
            .collect::<Result<Vertex, _>>()?;
        let x = parse(&record[dim])
            .parse::<f64>()
            .map_err(|e| IoError::Field(format!("value {:?}: {e}", &record[dim])))?;
        rows.push((v, x));
    }
    let m = rows
        .iter()
        .flat_map(|(v, _)| v.iter().map(|c| c.unsigned_abs() as usize))
        .max()
        .unwrap_or(0);
    let mut field = ScalarField::zeros(dim, m);
    for (v, x) in rows {
        let i = field.index_of(&v).expect("inside box by construction");
        field.values_mut()[i] = x;
    }
    Ok(field)
}

/// Trace metrics with columns n, l2_sq, sup, mass.
pub fn write_metrics_csv(metrics: &[RoundMetrics], out: impl Write) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    for m in metrics {
        w.serialize(m)?;
    }
    w.flush()?;
    Ok(())
}
