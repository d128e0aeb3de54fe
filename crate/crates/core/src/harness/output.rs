//! Result records and their CSV / JSON serialization.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SystemConfig;
use crate::{Error, Result};

/// One scalar observation, tagged with enough configuration to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub study: String,
    pub n_antennas: usize,
    pub n_users: usize,
    pub n_sectors: usize,
    pub angular_spread: f64,
    pub snr_linear: f64,
    pub delta: Option<f64>,
    pub trials: usize,
    pub scheme: String,
    pub metric: String,
    pub ue: Option<usize>,
    pub sector: Option<usize>,
    pub value: f64,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 14] = [
    "study",
    "n_antennas",
    "n_users",
    "n_sectors",
    "angular_spread",
    "snr_linear",
    "delta",
    "trials",
    "scheme",
    "metric",
    "ue",
    "sector",
    "value",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Output of one study.
///
/// Timings are kept out of the main JSON document so that it is a pure
/// function of the configuration; [`emit_results`] writes them to a sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub study: String,
    pub config: SystemConfig,
    pub records: Vec<Record>,
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

impl ExperimentResult {
    pub fn new(study: &str, config: &SystemConfig) -> Self {
        ExperimentResult {
            study: study.to_string(),
            config: config.clone(),
            records: Vec::new(),
            timings: Vec::new(),
        }
    }

    /// Records matching `scheme` and `metric`.
    pub fn select<'a>(&'a self, scheme: &'a str, metric: &'a str) -> impl Iterator<Item = &'a Record> + 'a {
        self.records
            .iter()
            .filter(move |r| r.scheme == scheme && r.metric == metric)
    }

    pub fn timing(&mut self, stage: &str, seconds: f64) {
        match self.timings.iter_mut().find(|t| t.stage == stage) {
            Some(t) => t.seconds += seconds,
            None => self.timings.push(StageTiming {
                stage: stage.to_string(),
                seconds,
            }),
        }
    }

    pub fn merge(&mut self, other: ExperimentResult) {
        self.records.extend(other.records);
        for t in other.timings {
            self.timing(&t.stage, t.seconds);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown output format {other:?}"))),
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV text with a header row. Floats use the shortest round-trip form.
pub fn to_csv(result: &ExperimentResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(CSV_HEADER).map_err(ser)?;
    for r in &result.records {
        w.write_record([
            r.study.clone(),
            r.n_antennas.to_string(),
            r.n_users.to_string(),
            r.n_sectors.to_string(),
            r.angular_spread.to_string(),
            r.snr_linear.to_string(),
            opt(r.delta),
            r.trials.to_string(),
            r.scheme.clone(),
            r.metric.clone(),
            opt(r.ue),
            opt(r.sector),
            r.value.to_string(),
            r.seed.to_string(),
        ])
        .map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn to_json(result: &ExperimentResult) -> Result<String> {
    serde_json::to_string_pretty(result).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn from_json(s: &str) -> Result<ExperimentResult> {
    serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `<stem>.csv` or `<stem>.json` into `dir`, plus `<stem>.timings.json`.
/// Returns the paths written, main file first.
pub fn emit_results(result: &ExperimentResult, dir: &Path, stem: &str, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let main = match format {
        OutputFormat::Csv => {
            let p = dir.join(format!("{stem}.csv"));
            write(&p, &to_csv(result)?)?;
            p
        }
        OutputFormat::Json => {
            let p = dir.join(format!("{stem}.json"));
            write(&p, &to_json(result)?)?;
            p
        }
    };
    let timings = dir.join(format!("{stem}.timings.json"));
    let t = serde_json::to_string_pretty(&result.timings).map_err(|e| Error::Serialization(e.to_string()))?;
    write(&timings, &t)?;
    Ok(vec![main, timings])
}
