//! TCP ingestion: newline-delimited CSV records in, warning events out.
//!
//! One thread per connection. Each driver has its own pipeline behind a
//! mutex, so records for one driver are processed one at a time while
//! distinct drivers proceed in parallel. Event lines are written to the
//! sink under a single lock and are never interleaved.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::error::Result;
use crate::monitor::{DriverPipeline, ModelSet, PipelineConfig, WarningEvent};
use crate::signals::parse_record;

const POLL: Duration = Duration::from_millis(50);

pub type Sink = Box<dyn Write + Send>;

type Lane = Arc<Mutex<DriverPipeline>>;

struct Shared {
    config: PipelineConfig,
    models: ModelSet,
    drivers: RwLock<HashMap<String, Lane>>,
    sink: Mutex<Sink>,
    shutdown: Arc<AtomicBool>,
}

impl Shared {
    fn lane(&self, driver_id: &str) -> Result<Lane> {
        if let Some(lane) = self.drivers.read().unwrap_or_else(|e| e.into_inner()).get(driver_id) {
            return Ok(lane.clone());
        }
        let mut drivers = self.drivers.write().unwrap_or_else(|e| e.into_inner());
        if let Some(lane) = drivers.get(driver_id) {
            return Ok(lane.clone());
        }
        let lane = Arc::new(Mutex::new(DriverPipeline::new(driver_id, &self.config)?));
        drivers.insert(driver_id.to_string(), lane.clone());
        Ok(lane)
    }

    /// Processes one wire line. Returns an error message for the client, if any.
    fn handle_line(&self, line: &str) -> Option<String> {
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') || line.starts_with("driver_id") {
            return None;
        }
        let outcome = parse_record(line).and_then(|sample| {
            let lane = self.lane(&sample.driver_id)?;
            let mut pipeline = lane.lock().unwrap_or_else(|e| e.into_inner());
            let step = pipeline.process_sample(&sample, &self.models, &self.config)?;
            // written while the lane is held so per-driver order is kept
            self.emit(&step.events)?;
            Ok(())
        });
        outcome.err().map(|e| e.to_string())
    }

    fn emit(&self, events: &[WarningEvent]) -> io::Result<()> {
        if events.is_empty() {
            return Ok(());
        }
        let mut sink = self.sink.lock().unwrap_or_else(|e| e.into_inner());
        for e in events {
            writeln!(sink, "{}", e.to_csv())?;
        }
        sink.flush()
    }
}

/// A running server. Dropping the handle without calling `shutdown` leaves
/// the accept thread running until the process exits.
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Flag that stops the server when set; safe to set from a signal handler.
    pub fn shutdown_flag(&self) -> Arc<AtomicBool> {
        self.shared.shutdown.clone()
    }

    /// Blocks until the shutdown flag is set, then drains connections and
    /// flushes the sink.
    pub fn wait(mut self) -> Result<()> {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
        let mut sink = self.shared.sink.lock().unwrap_or_else(|e| e.into_inner());
        sink.flush()?;
        Ok(())
    }

    pub fn shutdown(self) -> Result<()> {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        self.wait()
    }
}

/// Binds `bind` and starts accepting connections on a background thread.
pub fn serve(bind: &str, config: PipelineConfig, models: ModelSet, sink: Sink) -> Result<ServerHandle> {
    let listener = TcpListener::bind(bind)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let shared = Arc::new(Shared {
        config,
        models,
        drivers: RwLock::new(HashMap::new()),
        sink: Mutex::new(sink),
        shutdown: Arc::new(AtomicBool::new(false)),
    });
    let accept_shared = shared.clone();
    let accept = thread::Builder::new()
        .name("vitalguard-accept".into())
        .spawn(move || accept_loop(listener, accept_shared))?;
    log::info!("listening on {addr}");
    Ok(ServerHandle {
        addr,
        shared,
        accept: Some(accept),
    })
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>) {
    let mut workers: Vec<JoinHandle<()>> = Vec::new();
    while !shared.shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                log::debug!("connection from {peer}");
                let s = shared.clone();
                match thread::Builder::new()
                    .name(format!("vitalguard-conn-{peer}"))
                    .spawn(move || {
                        if let Err(e) = connection(stream, &s) {
                            log::warn!("connection {peer}: {e}");
                        }
                    }) {
                    Ok(h) => workers.push(h),
                    Err(e) => log::error!("cannot spawn connection thread: {e}"),
                }
                workers.retain(|h| !h.is_finished());
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                log::error!("accept failed: {e}");
                thread::sleep(POLL);
            }
        }
    }
    for h in workers {
        let _ = h.join();
    }
}

fn connection(stream: TcpStream, shared: &Shared) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(POLL))?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut buf = Vec::new();
    loop {
        // bytes read before a timeout stay in `buf`
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => {
                if !buf.is_empty() {
                    respond(shared, &buf, &mut writer)?;
                }
                return Ok(());
            }
            Ok(_) => {
                if buf.last() == Some(&b'\n') {
                    respond(shared, &buf, &mut writer)?;
                    buf.clear();
                }
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                if shared.shutdown.load(Ordering::SeqCst) {
                    return Ok(());
                }
            }
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
}

fn respond(shared: &Shared, raw: &[u8], writer: &mut TcpStream) -> io::Result<()> {
    let reply = match std::str::from_utf8(raw) {
        Ok(line) => shared.handle_line(line),
        Err(_) => Some("record is not valid UTF-8".to_string()),
    };
    if let Some(msg) = reply {
        writeln!(writer, "ERR {msg}")?;
    }
    Ok(())
}
