//! Append-only results log: one JSON document per line. Line 1 is a
//! header with the run configuration snapshot and code version; every
//! further line is one completed evaluation, in completion order, so a
//! run's archive can be rebuilt from the log alone.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::evolve::{Candidate, EvalEvent, FitnessVector};

pub const LOG_SCHEMA: &str = "results-log v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema: String,
    pub code_version: String,
    pub run_config: RunConfig,
}

impl LogHeader {
    pub fn new(run_config: &RunConfig) -> Self {
        LogHeader {
            schema: LOG_SCHEMA.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            run_config: run_config.clone(),
        }
    }
}

/// One completed evaluation; cache hits never produce records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    /// 0 for initialization, else the 1-based steady-state step.
    pub step: u64,
    pub candidate: Candidate,
    pub fitness: FitnessVector,
    pub eval_seconds: f64,
    pub worker: String,
}

impl LogRecord {
    pub fn from_event(event: &EvalEvent<'_>) -> Self {
        LogRecord {
            step: event.step,
            candidate: event.candidate.clone(),
            fitness: event.fitness.clone(),
            eval_seconds: event.eval_seconds,
            worker: event.worker.to_string(),
        }
    }
}

#[derive(Debug)]
pub enum LogError {
    Io(String),
    MissingHeader,
    CorruptRecord { line: usize, detail: String },
}

impl std::fmt::Display for LogError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LogError::Io(detail) => write!(f, "log io error: {}", detail),
            LogError::MissingHeader => write!(f, "log does not start with a header line"),
            LogError::CorruptRecord { line, detail } => {
                write!(f, "corrupt log record at line {}: {}", line, detail)
            }
        }
    }
}

impl std::error::Error for LogError {}

/// Serializing writer; call sites hold the single handle per file.
pub struct LogWriter<W: Write> {
    out: W,
    pub records_written: u64,
}

impl LogWriter<BufWriter<File>> {
    pub fn create(path: &Path, run_config: &RunConfig) -> io::Result<Self> {
        let file = File::create(path)?;
        LogWriter::from_writer(BufWriter::new(file), run_config)
    }
}

impl<W: Write> LogWriter<W> {
    pub fn from_writer(mut out: W, run_config: &RunConfig) -> io::Result<Self> {
        let header = LogHeader::new(run_config);
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(LogWriter { out, records_written: 0 })
    }

    /// Append one record and flush, so a crash loses at most the record
    /// being written.
    pub fn append(&mut self, record: &LogRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.records_written += 1;
        Ok(())
    }
}

/// A parsed line is either a header (concatenated logs carry several)or
/// a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum LogLine {
    Header(LogHeader),
    Record(LogRecord),
}

/// Read a log stream, accepting concatenations of whole logs: header
/// lines may recur and simply open the next segment.
pub fn read_log<R: BufRead>(reader: R) -> Result<(Vec<LogHeader>, Vec<LogRecord>), LogError> {
    let mut headers = Vec::new();
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| LogError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(&line)
            .map_err(|e| LogError::CorruptRecord { line: line_no, detail: e.to_string() })?;
        match parsed {
            LogLine::Header(h) => {
                if h.schema != LOG_SCHEMA {
                    return Err(LogError::CorruptRecord {
                        line: line_no,
                        detail: format!("unknown schema {:?}", h.schema),
                    });
                }
                headers.push(h);
            }
            LogLine::Record(r) => {
                if headers.is_empty() {
                    return Err(LogError::MissingHeader);
                }
                records.push(r);
            }
        }
    }
    if headers.is_empty() {
        return Err(LogError::MissingHeader);
    }
    Ok((headers, records))
}

pub fn load_log(path: &Path) -> Result<(Vec<LogHeader>, Vec<LogRecord>), LogError> {
    let file = File::open(path)
        .map_err(|e| LogError::Io(format!("{}: {}", path.display(), e)))?;
    read_log(BufReader::new(file))
}

/// Rebuild the evaluation archive a run held in memory.
pub fn replay_archive(records: &[LogRecord]) -> Vec<(Candidate, FitnessVector)> {
    records.iter().map(|r| (r.candidate.clone(), r.fitness.clone())).collect()
}
