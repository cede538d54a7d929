//! Socket transport: the same messages as the in-process transport,
//! length-prefixed JSON over TCP, for multi-machine runs.

use std::io;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::Sender;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use super::master::{MasterEvent, WorkerSink};
use super::protocol::{
    read_frame, write_frame, FrameError, ToMaster, ToWorker, WorkerDescriptor,
};
use super::runner::JobRunner;

struct TcpSink {
    stream: Arc<Mutex<TcpStream>>,
}

impl WorkerSink for TcpSink {
    fn send(&self, msg: ToWorker) -> Result<(), ()> {
        let mut stream = self.stream.lock().expect("sink lock");
        write_frame(&mut *stream, &msg).map_err(|_| ())
    }
}

/// Listener half on the master machine. Connections feed the same event
/// channel as in-process workers, so the coordinator cannot tell the
/// transports apart.
pub struct TcpMasterPort {
    pub addr: SocketAddr,
    stop: Arc<AtomicBool>,
    join: Option<JoinHandle<()>>,
}

impl TcpMasterPort {
    pub fn stop(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

impl Drop for TcpMasterPort {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

/// Bind `addr` (e.g. "127.0.0.1:0") and forward every connected worker
/// into the master's event channel.
pub fn serve_master_tcp(addr: &str, events: Sender<MasterEvent>) -> io::Result<TcpMasterPort> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = Arc::clone(&stop);
    let join = std::thread::Builder::new()
        .name("codesign-master-tcp".to_string())
        .spawn(move || loop {
            if stop_flag.load(Ordering::SeqCst) {
                return;
            }
            match listener.accept() {
                Ok((stream, _)) => {
                    let events = events.clone();
                    std::thread::spawn(move || connection_loop(stream, events));
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(_) => return,
            }
        })
        .expect("listener thread spawns");
    Ok(TcpMasterPort { addr: local, stop, join: Some(join) })
}

fn connection_loop(stream: TcpStream, events: Sender<MasterEvent>) {
    let _ = stream.set_nonblocking(false);
    let _ = stream.set_nodelay(true);
    let mut reader = match stream.try_clone() {
        Ok(r) => r,
        Err(_) => return,
    };
    let worker_id = match read_frame::<_, ToMaster>(&mut reader) {
        Ok(ToMaster::Register { descriptor }) => {
            let id = descriptor.worker_id.clone();
            let sink = TcpSink { stream: Arc::new(Mutex::new(stream)) };
            if events
                .send(MasterEvent::Register { descriptor, sink: Box::new(sink) })
                .is_err()
            {
                return;
            }
            id
        }
        _ => return, // protocol breach: first frame must register
    };
    loop {
        match read_frame::<_, ToMaster>(&mut reader) {
            Ok(ToMaster::Heartbeat { worker_id }) => {
                if events.send(MasterEvent::Heartbeat { worker_id }).is_err() {
                    return;
                }
            }
            Ok(ToMaster::JobDone { worker_id, result }) => {
                if events.send(MasterEvent::JobDone { worker_id, result }).is_err() {
                    return;
                }
            }
            Ok(ToMaster::Register { .. }) => {} // ignored after the first
            Err(_) => {
                // disconnect beats lease expiry to the punch
                let _ = events.send(MasterEvent::WorkerGone { worker_id });
                return;
            }
        }
    }
}

#[derive(Debug)]
pub enum WorkerRunError {
    Frame(FrameError),
    Rejected(String),
}

impl std::fmt::Display for WorkerRunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WorkerRunError::Frame(e) => write!(f, "worker transport error: {}", e),
            WorkerRunError::Rejected(reason) => {
                write!(f, "master rejected registration: {}", reason)
            }
        }
    }
}

impl std::error::Error for WorkerRunError {}

impl From<FrameError> for WorkerRunError {
    fn from(e: FrameError) -> Self {
        WorkerRunError::Frame(e)
    }
}

/// Connect to a master, register, and serve jobs until shutdown. Blocks
/// for the worker's lifetime; returns Ok on orderly shutdown. A runner
/// returning `None` drops the connection abruptly, as a dying process
/// would.
pub fn run_tcp_worker(
    master_addr: &str,
    descriptor: WorkerDescriptor,
    runner: Arc<dyn JobRunner>,
) -> Result<(), WorkerRunError> {
    let stream = TcpStream::connect(master_addr).map_err(|e| FrameError::Io(e))?;
    let _ = stream.set_nodelay(true);
    let mut reader = stream.try_clone().map_err(|e| FrameError::Io(e))?;
    let writer = Arc::new(Mutex::new(stream));
    let worker_id = descriptor.worker_id.clone();

    {
        let mut w = writer.lock().expect("writer lock");
        write_frame(&mut *w, &ToMaster::Register { descriptor })?;
    }
    let cadence = match read_frame::<_, ToWorker>(&mut reader)? {
        ToWorker::RegisterAck { accepted: true, heartbeat_s, .. } => {
            Duration::from_secs_f64(heartbeat_s.max(0.001))
        }
        ToWorker::RegisterAck { accepted: false, reason, .. } => {
            return Err(WorkerRunError::Rejected(
                reason.unwrap_or_else(|| "no reason given".to_string()),
            ));
        }
        _ => {
            return Err(WorkerRunError::Rejected(
                "expected a registration ack first".to_string(),
            ))
        }
    };

    let stopping = Arc::new(AtomicBool::new(false));
    let crashed = Arc::new(AtomicBool::new(false));
    let beat_writer = Arc::clone(&writer);
    let beat_stop = Arc::clone(&stopping);
    let beat_id = worker_id.clone();
    let beater = std::thread::spawn(move || loop {
        std::thread::sleep(cadence);
        if beat_stop.load(Ordering::SeqCst) {
            return;
        }
        let mut w = beat_writer.lock().expect("writer lock");
        if write_frame(&mut *w, &ToMaster::Heartbeat { worker_id: beat_id.clone() }).is_err() {
            return;
        }
    });

    let mut jobs: Vec<JoinHandle<()>> = Vec::new();
    let run_result = loop {
        match read_frame::<_, ToWorker>(&mut reader) {
            Ok(ToWorker::Job { request }) => {
                let runner = Arc::clone(&runner);
                let writer = Arc::clone(&writer);
                let crashed = Arc::clone(&crashed);
                let worker_id = worker_id.clone();
                jobs.push(std::thread::spawn(move || {
                    match runner.run(&worker_id, &request) {
                        Some(result) => {
                            let mut w = writer.lock().expect("writer lock");
                            let _ =
                                write_frame(&mut *w, &ToMaster::JobDone { worker_id, result });
                        }
                        None => {
                            crashed.store(true, Ordering::SeqCst);
                            let w = writer.lock().expect("writer lock");
                            let _ = w.shutdown(Shutdown::Both);
                        }
                    }
                }));
            }
            Ok(ToWorker::Shutdown) => break Ok(()),
            Ok(ToWorker::RegisterAck { .. }) => {}
            Err(e) => {
                if crashed.load(Ordering::SeqCst) {
                    break Ok(()); // simulated crash severed the socket
                }
                break Err(WorkerRunError::Frame(e));
            }
        }
        jobs.retain(|j| !j.is_finished());
    };
    stopping.store(true, Ordering::SeqCst);
    for j in jobs {
        let _ = j.join();
    }
    let _ = beater.join();
    run_result
}
