//! Wire types shared by both transports. One structured-text (JSON)
//! document per message, length-prefixed on sockets; the in-process
//! transport carries the same values without serialization.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::evolve::{Candidate, EvalStatus, Objective};
use crate::mlp::TrainConfig;

/// Bumped on any incompatible message change; checked at registration.
pub const PROTOCOL_VERSION: u32 = 1;

/// Frames larger than this are treated as corruption.
pub const MAX_FRAME_BYTES: u32 = 16 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerKind {
    Simulation,
    HardwareDb,
    Physical,
}

impl WorkerKind {
    pub fn name(&self) -> &'static str {
        match self {
            WorkerKind::Simulation => "simulation",
            WorkerKind::HardwareDb => "hardware_db",
            WorkerKind::Physical => "physical",
        }
    }

    pub fn parse(s: &str) -> Option<WorkerKind> {
        match s {
            "simulation" => Some(WorkerKind::Simulation),
            "hardware_db" => Some(WorkerKind::HardwareDb),
            "physical" => Some(WorkerKind::Physical),
            _ => None,
        }
    }
}

impl std::fmt::Display for WorkerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Static objective routing: accuracy needs a trained network, so it
/// goes to simulation workers; model metrics go to the hardware
/// database. Nothing in the standard set routes to physical workers.
pub fn kind_for_objective(objective: Objective) -> WorkerKind {
    if objective.needs_training() {
        WorkerKind::Simulation
    } else {
        WorkerKind::HardwareDb
    }
}

/// How a simulation worker should split the named dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitSpec {
    /// k-fold cross-validation; accuracy is the fold mean.
    KFold { k: usize, seed: u64 },
    /// Single seeded shuffle split; accuracy measured on the held-out side.
    Holdout { test_fraction: f64, seed: u64 },
    /// Train and score on the full set (toy problems).
    TrainOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub name: String,
    pub split: SplitSpec,
}

/// One evaluation job as a worker sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRequest {
    pub job_id: u64,
    pub candidate: Candidate,
    /// The subset of the run's objectives this worker kind must measure.
    pub objectives: Vec<Objective>,
    pub dataset: DatasetRef,
    pub target: String,
    pub train: TrainConfig,
    /// Rows pushed through the accelerator in the throughput model.
    pub total_inputs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub objective: Objective,
    pub value: f64,
}

/// One wall-clock phase timing, e.g. ("train", 1.83).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub job_id: u64,
    pub status: EvalStatus,
    pub objectives: Vec<Measured>,
    pub timings: Vec<PhaseTiming>,
    pub worker: String,
    pub kind: WorkerKind,
    /// Kind-specific detail: per-fold accuracies, the full performance
    /// report, or the physical interface stub fields.
    pub payload: serde_json::Value,
}

impl EvalResult {
    pub fn failed(
        job_id: u64,
        worker: &str,
        kind: WorkerKind,
        reason: impl Into<String>,
    ) -> Self {
        EvalResult {
            job_id,
            status: EvalStatus::Failed(reason.into()),
            objectives: Vec::new(),
            timings: Vec::new(),
            worker: worker.to_string(),
            kind,
            payload: serde_json::Value::Null,
        }
    }

    pub fn value_of(&self, objective: Objective) -> Option<f64> {
        self.objectives.iter().find(|m| m.objective == objective).map(|m| m.value)
    }

    /// Copy with measured wall-clock durations zeroed. Everything else
    /// in a result is deterministic; comparisons of repeat or
    /// cross-transport evaluations go through this.
    pub fn with_zeroed_timings(&self) -> EvalResult {
        let mut out = self.clone();
        for t in &mut out.timings {
            t.seconds = 0.0;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerDescriptor {
    pub worker_id: String,
    pub kind: WorkerKind,
    /// Dataset names this worker holds (simulation kind).
    pub datasets: Vec<String>,
    /// Hardware target names this worker holds (hardware_db kind).
    pub targets: Vec<String>,
    pub slots: usize,
    pub protocol_version: u32,
}

impl WorkerDescriptor {
    pub fn validate(&self) -> Result<(), String> {
        if self.worker_id.is_empty() {
            return Err("worker_id must be non-empty".to_string());
        }
        if self.protocol_version != PROTOCOL_VERSION {
            return Err(format!(
                "protocol version mismatch: worker speaks v{}, master speaks v{}",
                self.protocol_version, PROTOCOL_VERSION
            ));
        }
        Ok(())
    }

    /// Whether this worker can serve the given request's resources.
    pub fn covers(&self, req: &EvalRequest) -> bool {
        match self.kind {
            WorkerKind::Simulation => self.datasets.iter().any(|d| *d == req.dataset.name),
            WorkerKind::HardwareDb => self.targets.iter().any(|t| *t == req.target),
            WorkerKind::Physical => false,
        }
    }
}

/// Messages flowing worker -> master.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "msg", rename_all = "snake_case")]
pub enum ToMaster {
    Register { descriptor: WorkerDescriptor },
    Heartbeat { worker_id: String },
    JobDone { worker_id: String, result: EvalResult },
}

/// Messages flowing master -> worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "msg", rename_all = "snake_case")]
pub enum ToWorker {
    RegisterAck { accepted: bool, reason: Option<String>, heartbeat_s: f64, lease_s: f64 },
    Job { request: EvalRequest },
    Shutdown,
}

#[derive(Debug)]
pub enum FrameError {
    Io(io::Error),
    TooLarge { len: u32 },
    BadJson(serde_json::Error),
}

impl std::fmt::Display for FrameError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrameError::Io(e) => write!(f, "frame io error: {}", e),
            FrameError::TooLarge { len } => {
                write!(f, "frame of {} bytes exceeds limit of {}", len, MAX_FRAME_BYTES)
            }
            FrameError::BadJson(e) => write!(f, "frame is not valid message json: {}", e),
        }
    }
}

impl std::error::Error for FrameError {}

impl From<io::Error> for FrameError {
    fn from(e: io::Error) -> Self {
        FrameError::Io(e)
    }
}

/// Write one length-prefixed JSON frame: 4-byte big-endian length, body.
pub fn write_frame<W: Write, T: Serialize>(w: &mut W, msg: &T) -> Result<(), FrameError> {
    let body = serde_json::to_vec(msg).map_err(FrameError::BadJson)?;
    let len = body.len() as u32;
    if len > MAX_FRAME_BYTES {
        return Err(FrameError::TooLarge { len });
    }
    w.write_all(&len.to_be_bytes())?;
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

/// Read one length-prefixed JSON frame.
pub fn read_frame<R: Read, T: for<'de> Deserialize<'de>>(r: &mut R) -> Result<T, FrameError> {
    let mut len_buf = [0u8; 4];
    r.read_exact(&mut len_buf)?;
    let len = u32::from_be_bytes(len_buf);
    if len > MAX_FRAME_BYTES {
        return Err(FrameError::TooLarge { len });
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body)?;
    serde_json::from_slice(&body).map_err(FrameError::BadJson)
}
