//! Master/worker evaluation fabric.
//!
//! A single-threaded master owns all scheduling state: leased workers,
//! a job queue, in-flight tracking, and retry accounting. Simulation
//! workers train and score networks, hardware-database workers run the
//! analytical model, and a physical-worker interface exists as a stub.
//! Two transports carry the same messages: in-process channels and
//! length-prefixed JSON over TCP.

mod inproc;
mod master;
mod protocol;
mod runner;
mod tcp;

pub use inproc::{spawn_inproc_worker, InprocWorker};
pub use master::{
    spawn_master, JobTemplate, MasterConfig, MasterController, MasterEvent, MasterHandle,
    WorkerSink,
};
pub use protocol::{
    kind_for_objective, read_frame, write_frame, DatasetRef, EvalRequest, EvalResult, FrameError,
    Measured, PhaseTiming, SplitSpec, ToMaster, ToWorker, WorkerDescriptor, WorkerKind,
    MAX_FRAME_BYTES, PROTOCOL_VERSION,
};
pub use runner::{
    hwdb_evaluate, physical_evaluate, simulation_evaluate, ContextRunner, JobRunner,
    WorkerContext,
};
pub use tcp::{run_tcp_worker, serve_master_tcp, TcpMasterPort, WorkerRunError};
