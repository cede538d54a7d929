//! In-process transport: workers are threads, messages are channel
//! sends. The default for tests and single-machine runs.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use super::master::MasterEvent;
use super::protocol::{ToWorker, WorkerDescriptor};
use super::runner::JobRunner;

/// Handle to a spawned worker thread. Dropping it detaches the thread;
/// the thread exits when the master shuts down or its lease channel
/// closes.
pub struct InprocWorker {
    pub worker_id: String,
    join: Option<JoinHandle<()>>,
}

impl InprocWorker {
    /// Block until the worker thread exits (crash or shutdown).
    pub fn wait(mut self) {
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }

    pub fn is_finished(&self) -> bool {
        self.join.as_ref().map(|j| j.is_finished()).unwrap_or(true)
    }
}

/// Register a worker with the master and run its message loop on a new
/// thread. Jobs run on their own threads so slow evaluations never block
/// heartbeats; a runner returning `None` simulates a crash: the worker
/// goes silent and its thread exits without notifying anyone.
pub fn spawn_inproc_worker(
    descriptor: WorkerDescriptor,
    runner: Arc<dyn JobRunner>,
    events: Sender<MasterEvent>,
) -> InprocWorker {
    let worker_id = descriptor.worker_id.clone();
    let thread_id = worker_id.clone();
    let join = std::thread::Builder::new()
        .name(format!("codesign-worker-{}", worker_id))
        .spawn(move || worker_loop(descriptor, runner, events, thread_id))
        .expect("worker thread spawns");
    InprocWorker { worker_id, join: Some(join) }
}

fn worker_loop(
    descriptor: WorkerDescriptor,
    runner: Arc<dyn JobRunner>,
    events: Sender<MasterEvent>,
    worker_id: String,
) {
    let (to_worker_tx, to_worker_rx) = mpsc::channel::<ToWorker>();
    if events
        .send(MasterEvent::Register { descriptor, sink: Box::new(to_worker_tx) })
        .is_err()
    {
        return;
    }
    let cadence = match to_worker_rx.recv_timeout(Duration::from_secs(5)) {
        Ok(ToWorker::RegisterAck { accepted: true, heartbeat_s, .. }) => {
            Duration::from_secs_f64(heartbeat_s.max(0.001))
        }
        _ => return,
    };

    let crashed = Arc::new(AtomicBool::new(false));
    let mut jobs: Vec<JoinHandle<()>> = Vec::new();
    loop {
        if crashed.load(Ordering::SeqCst) {
            // simulated process death: no goodbyes, no joins
            return;
        }
        match to_worker_rx.recv_timeout(cadence) {
            Ok(ToWorker::Job { request }) => {
                let runner = Arc::clone(&runner);
                let events = events.clone();
                let crashed = Arc::clone(&crashed);
                let worker_id = worker_id.clone();
                jobs.push(std::thread::spawn(move || {
                    match runner.run(&worker_id, &request) {
                        Some(result) => {
                            let _ = events.send(MasterEvent::JobDone { worker_id, result });
                        }
                        None => crashed.store(true, Ordering::SeqCst),
                    }
                }));
            }
            Ok(ToWorker::Shutdown) => break,
            Ok(ToWorker::RegisterAck { .. }) => {}
            Err(RecvTimeoutError::Timeout) => {
                if events
                    .send(MasterEvent::Heartbeat { worker_id: worker_id.clone() })
                    .is_err()
                {
                    return;
                }
            }
            Err(RecvTimeoutError::Disconnected) => return,
        }
        jobs.retain(|j| !j.is_finished());
    }
    for j in jobs {
        let _ = j.join();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{read_csv, LabelColumn};
    use crate::evolve::{Evaluator, Objective, ObjectiveSpec, ObjectiveTerm, Orientation};
    use crate::hw::HardwareTarget;
    use crate::mlp::TrainConfig;
    use crate::worker::master::{spawn_master, JobTemplate, MasterConfig};
    use crate::worker::protocol::{DatasetRef, SplitSpec, WorkerKind, PROTOCOL_VERSION};
    use crate::worker::runner::{ContextRunner, WorkerContext};

    #[test]
    fn worker_heartbeats_keep_the_lease_alive_while_idle() {
        let csv = "a,b,y\n0,0,0\n1,1,1\n";
        let ds = read_csv(csv.as_bytes(), "tiny", &LabelColumn::Name("y".to_string()), true)
            .unwrap();
        let ctx = WorkerContext::new()
            .with_dataset(ds)
            .with_target(HardwareTarget::arria10_like());
        let cfg = MasterConfig {
            retries: 2,
            heartbeat: Duration::from_millis(10),
            lease_timeout: Duration::from_millis(50),
        };
        let template = JobTemplate {
            dataset: DatasetRef { name: "tiny".to_string(), split: SplitSpec::TrainOnly },
            target: "arria10".to_string(),
            train: TrainConfig::default(),
            total_inputs: 2,
        };
        let (mut handle, controller) = spawn_master(cfg, template);
        let descriptor = WorkerDescriptor {
            worker_id: "hw".to_string(),
            kind: WorkerKind::HardwareDb,
            datasets: ctx.dataset_names(),
            targets: ctx.target_names(),
            slots: 1,
            protocol_version: PROTOCOL_VERSION,
        };
        let _w = spawn_inproc_worker(
            descriptor,
            Arc::new(ContextRunner { ctx, kind: WorkerKind::HardwareDb }),
            controller.event_sender(),
        );
        // idle across many lease windows, then the worker must still serve
        std::thread::sleep(Duration::from_millis(300));
        let spec = ObjectiveSpec::new(vec![ObjectiveTerm {
            objective: Objective::Efficiency,
            orientation: Orientation::Maximize,
            weight: 1.0,
        }]);
        let candidate = crate::evolve::Candidate {
            id: 1,
            parent_id: None,
            genome: crate::mlp::MlpGenome {
                input_size: 2,
                output_size: 2,
                hidden_layers: vec![],
            },
            grid: crate::hw::GridConfig::new(4, 4, 2, 2, 2),
            batch_m: 2,
        };
        handle.submit(1, &candidate, &spec);
        let (job, outcome) = handle.recv();
        assert_eq!(job, 1);
        assert!(outcome.fitness.status.is_ok(), "status: {:?}", outcome.fitness.status);
        controller.shutdown();
    }
}
