//! The master: a single coordinator thread owning all scheduling state.
//! Transports feed it events; it pushes jobs to leased worker slots,
//! requeues in-flight work when a lease lapses, retries up to a bound,
//! and delivers exactly one merged result per job id.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::protocol::{
    kind_for_objective, DatasetRef, EvalRequest, EvalResult, ToWorker, WorkerDescriptor,
    WorkerKind,
};
use crate::evolve::{
    Candidate, EvalOutcome, EvalStatus, Evaluator, FitnessVector, Objective, ObjectiveSpec,
    ObjectiveValue,
};
use crate::mlp::TrainConfig;

/// Fabric tuning. The defaults mirror the documented policy: two
/// retries, 5 s heartbeats, 15 s lease timeout.
#[derive(Debug, Clone)]
pub struct MasterConfig {
    pub retries: u32,
    pub heartbeat: Duration,
    pub lease_timeout: Duration,
}

impl Default for MasterConfig {
    fn default() -> Self {
        MasterConfig {
            retries: 2,
            heartbeat: Duration::from_secs(5),
            lease_timeout: Duration::from_secs(15),
        }
    }
}

/// Run-constant fields stamped onto every evaluation request.
#[derive(Debug, Clone)]
pub struct JobTemplate {
    pub dataset: DatasetRef,
    pub target: String,
    pub train: TrainConfig,
    pub total_inputs: u64,
}

/// Outbound channel to one worker; in-process and socket transports both
/// implement it.
pub trait WorkerSink: Send {
    fn send(&self, msg: ToWorker) -> Result<(), ()>;
}

impl WorkerSink for Sender<ToWorker> {
    fn send(&self, msg: ToWorker) -> Result<(), ()> {
        Sender::send(self, msg).map_err(|_| ())
    }
}

/// Everything the master reacts to.
pub enum MasterEvent {
    Register { descriptor: WorkerDescriptor, sink: Box<dyn WorkerSink> },
    Heartbeat { worker_id: String },
    JobDone { worker_id: String, result: EvalResult },
    /// Transport-level disconnect, detected before any lease expiry.
    WorkerGone { worker_id: String },
    Submit { id: u64, candidate: Candidate, spec: ObjectiveSpec },
    Shutdown,
}

struct QueuedSub {
    job_id: u64,
    kind: WorkerKind,
    request: EvalRequest,
    /// Failed dispatch attempts so far; bounded by `retries`.
    attempts: u32,
}

struct PendingJob {
    spec: ObjectiveSpec,
    kinds: Vec<WorkerKind>,
    results: HashMap<WorkerKind, EvalResult>,
}

struct WorkerState {
    descriptor: WorkerDescriptor,
    sink: Box<dyn WorkerSink>,
    last_seen: Instant,
    in_flight: HashMap<(u64, WorkerKind), QueuedSub>,
}

struct MasterState {
    cfg: MasterConfig,
    template: JobTemplate,
    workers: HashMap<String, WorkerState>,
    queue: VecDeque<QueuedSub>,
    jobs: HashMap<u64, PendingJob>,
    completed: HashSet<u64>,
    done_tx: Sender<(u64, EvalOutcome)>,
}

impl MasterState {
    fn handle(&mut self, event: MasterEvent) {
        match event {
            MasterEvent::Register { descriptor, sink } => self.register(descriptor, sink),
            MasterEvent::Heartbeat { worker_id } => {
                if let Some(w) = self.workers.get_mut(&worker_id) {
                    w.last_seen = Instant::now();
                }
            }
            MasterEvent::JobDone { worker_id, result } => self.job_done(worker_id, result),
            MasterEvent::WorkerGone { worker_id } => self.expire_worker(&worker_id),
            MasterEvent::Submit { id, candidate, spec } => self.submit(id, candidate, spec),
            MasterEvent::Shutdown => unreachable!("shutdown handled by the loop"),
        }
    }

    fn register(&mut self, descriptor: WorkerDescriptor, sink: Box<dyn WorkerSink>) {
        let reject = |sink: &dyn WorkerSink, reason: String| {
            let _ = sink.send(ToWorker::RegisterAck {
                accepted: false,
                reason: Some(reason),
                heartbeat_s: 0.0,
                lease_s: 0.0,
            });
        };
        if let Err(reason) = descriptor.validate() {
            reject(sink.as_ref(), reason);
            return;
        }
        if self.workers.contains_key(&descriptor.worker_id) {
            reject(
                sink.as_ref(),
                format!("worker identity {:?} is already registered", descriptor.worker_id),
            );
            return;
        }
        let ack = ToWorker::RegisterAck {
            accepted: true,
            reason: None,
            heartbeat_s: self.cfg.heartbeat.as_secs_f64(),
            lease_s: self.cfg.lease_timeout.as_secs_f64(),
        };
        if sink.send(ack).is_err() {
            return;
        }
        self.workers.insert(
            descriptor.worker_id.clone(),
            WorkerState { descriptor, sink, last_seen: Instant::now(), in_flight: HashMap::new() },
        );
    }

    fn job_done(&mut self, worker_id: String, result: EvalResult) {
        let key = (result.job_id, result.kind);
        let Some(w) = self.workers.get_mut(&worker_id) else {
            // expired or never-registered worker; stale result dropped
            return;
        };
        w.last_seen = Instant::now();
        if w.in_flight.remove(&key).is_none() {
            // requeued elsewhere in the meantime; this copy is stale
            return;
        }
        self.record_part(key.0, key.1, result);
    }

    fn record_part(&mut self, job_id: u64, kind: WorkerKind, result: EvalResult) {
        let Some(job) = self.jobs.get_mut(&job_id) else { return };
        job.results.insert(kind, result);
        if job.results.len() == job.kinds.len() {
            self.merge_and_deliver(job_id);
        }
    }

    fn merge_and_deliver(&mut self, job_id: u64) {
        let job = self.jobs.remove(&job_id).expect("merge called for a pending job");
        if !self.completed.insert(job_id) {
            return;
        }
        let mut parts: Vec<&EvalResult> = Vec::new();
        for kind in &job.kinds {
            parts.push(job.results.get(kind).expect("merge requires every part"));
        }

        let mut payloads = serde_json::Map::new();
        for part in &parts {
            if !part.payload.is_null() {
                payloads.insert(part.kind.name().to_string(), part.payload.clone());
            }
        }
        let eval_seconds: f64 =
            parts.iter().flat_map(|p| p.timings.iter().map(|t| t.seconds)).sum();
        let worker = parts.iter().map(|p| p.worker.as_str()).collect::<Vec<_>>().join("+");

        let failures: Vec<String> = parts
            .iter()
            .filter_map(|p| match &p.status {
                EvalStatus::Ok => None,
                EvalStatus::Failed(reason) => Some(format!("{}: {}", p.kind, reason)),
            })
            .collect();
        let fitness = if failures.is_empty() {
            match merged_values(&job.spec, &parts) {
                Ok(values) => FitnessVector { values, status: EvalStatus::Ok, payloads },
                Err(missing) => FitnessVector {
                    values: Vec::new(),
                    status: EvalStatus::Failed(format!(
                        "merge missing objective {}",
                        missing.name()
                    )),
                    payloads,
                },
            }
        } else {
            FitnessVector {
                values: Vec::new(),
                status: EvalStatus::Failed(failures.join("; ")),
                payloads,
            }
        };
        let _ = self.done_tx.send((job_id, EvalOutcome { fitness, eval_seconds, worker }));
    }

    fn submit(&mut self, id: u64, candidate: Candidate, spec: ObjectiveSpec) {
        assert!(
            !self.completed.contains(&id) && !self.jobs.contains_key(&id),
            "job ids must be unique per run"
        );
        let mut kinds: Vec<WorkerKind> = Vec::new();
        for objective in spec.objectives() {
            let kind = kind_for_objective(objective);
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        let mut subs = Vec::new();
        for &kind in &kinds {
            let objectives: Vec<Objective> = spec
                .objectives()
                .filter(|&o| kind_for_objective(o) == kind)
                .collect();
            let request = EvalRequest {
                job_id: id,
                candidate: candidate.clone(),
                objectives,
                dataset: self.template.dataset.clone(),
                target: self.template.target.clone(),
                train: self.template.train.clone(),
                total_inputs: self.template.total_inputs,
            };
            let capable = self
                .workers
                .values()
                .any(|w| w.descriptor.kind == kind && w.descriptor.covers(&request));
            if !capable {
                self.completed.insert(id);
                let _ = self.done_tx.send((
                    id,
                    EvalOutcome {
                        fitness: FitnessVector::failed(format!(
                            "no capable {} worker online",
                            kind
                        )),
                        eval_seconds: 0.0,
                        worker: "master".to_string(),
                    },
                ));
                return;
            }
            subs.push(QueuedSub { job_id: id, kind, request, attempts: 0 });
        }
        self.jobs.insert(id, PendingJob { spec, kinds, results: HashMap::new() });
        self.queue.extend(subs);
    }

    /// Remove a worker and requeue (or fail out) its in-flight jobs,
    /// each exactly once.
    fn expire_worker(&mut self, worker_id: &str) {
        let Some(w) = self.workers.remove(worker_id) else { return };
        for (_, sub) in w.in_flight {
            self.requeue_or_fail(sub);
        }
    }

    fn requeue_or_fail(&mut self, mut sub: QueuedSub) {
        sub.attempts += 1;
        if sub.attempts > self.cfg.retries {
            let result = EvalResult::failed(
                sub.job_id,
                "master",
                sub.kind,
                format!("retries exhausted after {} attempts", sub.attempts),
            );
            self.record_part(sub.job_id, sub.kind, result);
        } else {
            self.queue.push_back(sub);
        }
    }

    fn check_leases(&mut self) {
        let now = Instant::now();
        let expired: Vec<String> = self
            .workers
            .iter()
            .filter(|(_, w)| now.duration_since(w.last_seen) > self.cfg.lease_timeout)
            .map(|(id, _)| id.clone())
            .collect();
        for id in expired {
            self.expire_worker(&id);
        }
    }

    fn pick_worker(&self, sub: &QueuedSub) -> Option<String> {
        self.workers
            .values()
            .filter(|w| {
                w.descriptor.kind == sub.kind
                    && w.descriptor.covers(&sub.request)
                    && w.in_flight.len() < w.descriptor.slots
            })
            .max_by(|a, b| {
                let free_a = a.descriptor.slots - a.in_flight.len();
                let free_b = b.descriptor.slots - b.in_flight.len();
                free_a
                    .cmp(&free_b)
                    .then_with(|| b.descriptor.worker_id.cmp(&a.descriptor.worker_id))
            })
            .map(|w| w.descriptor.worker_id.clone())
    }

    fn schedule(&mut self) {
        let mut i = 0;
        while i < self.queue.len() {
            let Some(worker_id) = self.pick_worker(&self.queue[i]) else {
                i += 1;
                continue;
            };
            let sub = self.queue.remove(i).expect("index within queue");
            let w = self.workers.get_mut(&worker_id).expect("picked worker exists");
            let msg = ToWorker::Job { request: sub.request.clone() };
            if w.sink.send(msg).is_ok() {
                w.in_flight.insert((sub.job_id, sub.kind), sub);
            } else {
                // dead transport: drop the worker, charge one attempt
                self.expire_worker(&worker_id);
                self.requeue_or_fail(sub);
            }
        }
    }

    fn shutdown(&mut self) {
        for w in self.workers.values() {
            let _ = w.sink.send(ToWorker::Shutdown);
        }
    }
}

fn merged_values(
    spec: &ObjectiveSpec,
    parts: &[&EvalResult],
) -> Result<Vec<ObjectiveValue>, Objective> {
    let mut values = Vec::with_capacity(spec.terms.len());
    for term in &spec.terms {
        let mut found: Option<f64> = None;
        for part in parts {
            if let Some(v) = part.value_of(term.objective) {
                found = Some(v);
                break;
            }
        }
        match found {
            Some(value) => values.push(ObjectiveValue {
                objective: term.objective,
                orientation: term.orientation,
                value,
            }),
            None => return Err(term.objective),
        }
    }
    Ok(values)
}

/// Client half handed to the search engine.
pub struct MasterHandle {
    events: Sender<MasterEvent>,
    done: Receiver<(u64, EvalOutcome)>,
}

impl Evaluator for MasterHandle {
    fn submit(&mut self, job: u64, candidate: &Candidate, spec: &ObjectiveSpec) {
        self.events
            .send(MasterEvent::Submit {
                id: job,
                candidate: candidate.clone(),
                spec: spec.clone(),
            })
            .expect("master thread is alive");
    }

    fn recv(&mut self) -> (u64, EvalOutcome) {
        (&self.done).recv().expect("master thread is alive")
    }
}

/// Control half: lets transports register workers and stops the master.
pub struct MasterController {
    events: Sender<MasterEvent>,
    join: Option<JoinHandle<()>>,
}

impl MasterController {
    /// A sender transports use to feed the coordinator.
    pub fn event_sender(&self) -> Sender<MasterEvent> {
        self.events.clone()
    }

    pub fn shutdown(mut self) {
        let _ = self.events.send(MasterEvent::Shutdown);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

impl Drop for MasterController {
    fn drop(&mut self) {
        let _ = self.events.send(MasterEvent::Shutdown);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

/// Start the coordinator thread.
pub fn spawn_master(cfg: MasterConfig, template: JobTemplate) -> (MasterHandle, MasterController) {
    let (event_tx, event_rx) = mpsc::channel::<MasterEvent>();
    let (done_tx, done_rx) = mpsc::channel();
    let tick = (cfg.lease_timeout / 4).max(Duration::from_millis(1));
    let join = std::thread::Builder::new()
        .name("codesign-master".to_string())
        .spawn(move || master_loop(cfg, template, event_rx, done_tx, tick))
        .expect("master thread spawns");
    (
        MasterHandle { events: event_tx.clone(), done: done_rx },
        MasterController { events: event_tx, join: Some(join) },
    )
}

fn master_loop(
    cfg: MasterConfig,
    template: JobTemplate,
    events: Receiver<MasterEvent>,
    done_tx: Sender<(u64, EvalOutcome)>,
    tick: Duration,
) {
    let mut state = MasterState {
        cfg,
        template,
        workers: HashMap::new(),
        queue: VecDeque::new(),
        jobs: HashMap::new(),
        completed: HashSet::new(),
        done_tx,
    };
    loop {
        match events.recv_timeout(tick) {
            Ok(MasterEvent::Shutdown) => {
                state.shutdown();
                return;
            }
            Ok(event) => state.handle(event),
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => {
                state.shutdown();
                return;
            }
        }
        state.check_leases();
        state.schedule();
    }
}
