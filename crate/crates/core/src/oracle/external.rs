//! Client side of the external oracle protocol.
//!
//! The oracle runs as a child process speaking newline-delimited JSON over
//! stdin/stdout:
//!
//! ```text
//! -> {"type":"init","protocol":1,"model":{..},"instance":{"point":[..],"label":c},"norm":0|1|2|"inf"}
//! <- {"type":"ready"}                      | {"type":"error","msg":".."}
//! -> {"type":"check","id":7,"fixed":[1,3],"epsilon":1.5}
//! <- {"type":"result","id":7,"status":"adv","witness":[..]} | {"type":"result","id":7,"status":"robust"}
//! -> {"type":"cancel","id":7}
//! <- {"type":"result","id":7,"status":"cancelled"}
//! -> {"type":"shutdown"}
//! ```
//!
//! Requests are multiplexed by id; the first result for an id wins and
//! later ones are ignored.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{verify_witness, CancelToken, Capabilities, Oracle, OracleQuery, Verdict};
use crate::error::{Error, Result};
use crate::format::{point_to_json, ModelDocument};
use crate::problem::{ExplanationProblem, Norm, Point, DEFAULT_TOLERANCE};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_CHECK_TIMEOUT: Duration = Duration::from_secs(300);

const POLL_INTERVAL: Duration = Duration::from_millis(5);

#[derive(Debug, Clone)]
pub struct ExternalOracleConfig {
    pub check_timeout: Duration,
    pub handshake_timeout: Duration,
    pub tolerance: f64,
}

impl Default for ExternalOracleConfig {
    fn default() -> Self {
        ExternalOracleConfig {
            check_timeout: DEFAULT_CHECK_TIMEOUT,
            handshake_timeout: Duration::from_secs(30),
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

type Pending = Arc<Mutex<HashMap<u64, mpsc::Sender<Value>>>>;

pub struct ExternalOracle {
    name: String,
    problem: Arc<ExplanationProblem>,
    norm: Norm,
    config: ExternalOracleConfig,
    writer: Mutex<Option<Box<dyn Write + Send>>>,
    pending: Pending,
    next_id: AtomicU64,
    child: Option<Child>,
    reader: Option<JoinHandle<()>>,
}

pub fn norm_to_wire(norm: Norm) -> Value {
    match norm {
        Norm::L0 => json!(0),
        Norm::L1 => json!(1),
        Norm::L2 => json!(2),
        Norm::LInf => json!("inf"),
    }
}

impl ExternalOracle {
    /// Launches `command` through `sh -c` and completes the handshake.
    pub fn spawn(
        command: &str,
        problem: ExplanationProblem,
        norm: Norm,
        config: ExternalOracleConfig,
    ) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::OracleFailure(format!("cannot launch `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut oracle = Self::connect(stdout, stdin, problem, norm, config, format!("external:{command}"));
        if let Ok(o) = &mut oracle {
            o.child = Some(child);
        } else {
            let _ = child.kill();
            let _ = child.wait();
        }
        oracle
    }

    /// Runs the protocol over an arbitrary byte stream pair.
    pub fn connect<R, W>(
        reader: R,
        writer: W,
        problem: ExplanationProblem,
        norm: Norm,
        config: ExternalOracleConfig,
        name: String,
    ) -> Result<Self>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let pending: Pending = Arc::new(Mutex::new(HashMap::new()));
        let (control_tx, control_rx) = mpsc::channel::<Value>();
        let reader = {
            let pending = Arc::clone(&pending);
            std::thread::spawn(move || read_loop(reader, pending, control_tx))
        };
        let oracle = ExternalOracle {
            name,
            problem: Arc::new(problem),
            norm,
            config,
            writer: Mutex::new(Some(Box::new(writer))),
            pending,
            next_id: AtomicU64::new(1),
            child: None,
            reader: Some(reader),
        };
        let instance = oracle.problem.instance();
        let model = ModelDocument::from_problem(oracle.problem.problem());
        oracle.send(&json!({
            "type": "init",
            "protocol": PROTOCOL_VERSION,
            "model": model,
            "instance": {"point": point_to_json(&instance.point), "label": instance.label},
            "norm": norm_to_wire(norm),
        }))?;
        match control_rx.recv_timeout(oracle.config.handshake_timeout) {
            Ok(msg) => match msg.get("type").and_then(Value::as_str) {
                Some("ready") => Ok(oracle),
                Some("error") => Err(Error::OracleFailure(format!(
                    "oracle rejected init: {}",
                    msg.get("msg").and_then(Value::as_str).unwrap_or("no message")
                ))),
                _ => Err(Error::OracleFailure(format!("unexpected handshake reply {msg}"))),
            },
            Err(RecvTimeoutError::Timeout) => Err(Error::OracleFailure("handshake timed out".into())),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::OracleFailure("oracle closed its output during handshake".into()))
            }
        }
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    fn send(&self, msg: &Value) -> Result<()> {
        let mut guard = self.writer.lock().expect("writer poisoned");
        let writer = guard.as_mut().ok_or_else(|| Error::OracleFailure("session is shut down".into()))?;
        let mut line = msg.to_string();
        line.push('\n');
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.flush())
            .map_err(|e| Error::OracleFailure(format!("write to oracle failed: {e}")))
    }

    fn abandon(&self, id: u64) {
        self.pending.lock().expect("pending poisoned").remove(&id);
        // Best effort; the process may already be gone.
        let _ = self.send(&json!({"type": "cancel", "id": id}));
    }

    fn decode(&self, msg: &Value, query: &OracleQuery) -> Result<Verdict> {
        match msg.get("status").and_then(Value::as_str) {
            Some("robust") => Ok(Verdict::Robust),
            Some("adv") => {
                let witness = msg
                    .get("witness")
                    .and_then(Value::as_array)
                    .and_then(|coords| coords.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                    .map(Point)
                    .ok_or_else(|| Error::OracleFailure(format!("malformed witness in {msg}")))?;
                match verify_witness(&self.problem, &witness, query, self.config.tolerance) {
                    Ok(true) => Ok(Verdict::AdvFound(witness)),
                    Ok(false) => Err(Error::OracleFailure(format!("witness {witness} is not a valid adversarial example"))),
                    Err(e) => Err(Error::OracleFailure(format!("witness {witness} rejected: {e}"))),
                }
            }
            Some("cancelled") => Err(Error::OracleFailure("oracle cancelled a request that was not cancelled".into())),
            _ => Err(Error::OracleFailure(format!("malformed result {msg}"))),
        }
    }
}

fn read_loop<R: Read>(reader: R, pending: Pending, control: mpsc::Sender<Value>) {
    let reader = BufReader::new(reader);
    for line in reader.lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let Ok(msg) = serde_json::from_str::<Value>(&line) else {
            // Unparseable output poisons the session.
            break;
        };
        match (msg.get("type").and_then(Value::as_str), msg.get("id").and_then(Value::as_u64)) {
            (Some("result"), Some(id)) => {
                let waiter = pending.lock().expect("pending poisoned").remove(&id);
                if let Some(tx) = waiter {
                    let _ = tx.send(msg);
                }
            }
            _ => {
                let _ = control.send(msg);
            }
        }
    }
    // Dropping every sender wakes all waiters with a disconnect.
    pending.lock().expect("pending poisoned").clear();
}

impl Oracle for ExternalOracle {
    fn num_features(&self) -> usize {
        self.problem.num_features()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { name: self.name.clone(), exact: false, geometric_witnesses: true }
    }

    fn find_adv_ex(&self, query: &OracleQuery, cancel: &CancelToken) -> Result<Verdict> {
        query.validate(self.num_features())?;
        if query.norm != self.norm {
            return Err(Error::Unsupported(format!(
                "session was initialised for {} but the query uses {}",
                self.norm, query.norm
            )));
        }
        if cancel.is_cancelled() {
            return Err(Error::Cancelled);
        }
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = mpsc::channel();
        self.pending.lock().expect("pending poisoned").insert(id, tx);
        let fixed: Vec<usize> = query.fixed.iter().collect();
        if let Err(e) = self.send(&json!({"type": "check", "id": id, "fixed": fixed, "epsilon": query.epsilon})) {
            self.pending.lock().expect("pending poisoned").remove(&id);
            return Err(e);
        }
        let deadline = Instant::now() + self.config.check_timeout;
        loop {
            if cancel.is_cancelled() {
                self.abandon(id);
                return Err(Error::Cancelled);
            }
            let now = Instant::now();
            if now >= deadline {
                self.abandon(id);
                return Err(Error::OracleFailure(format!("check {id} timed out")));
            }
            match rx.recv_timeout(POLL_INTERVAL.min(deadline - now)) {
                Ok(msg) => return self.decode(&msg, query),
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::OracleFailure(format!("oracle exited before answering check {id}")))
                }
            }
        }
    }
}

impl Drop for ExternalOracle {
    fn drop(&mut self) {
        let _ = self.send(&json!({"type": "shutdown"}));
        self.writer.lock().map(|mut w| w.take()).ok();
        if let Some(mut child) = self.child.take() {
            let deadline = Instant::now() + Duration::from_secs(2);
            loop {
                match child.try_wait() {
                    Ok(Some(_)) => break,
                    Ok(None) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(10)),
                    _ => {
                        let _ = child.kill();
                        let _ = child.wait();
                        break;
                    }
                }
            }
        }
        // The reader exits on end of stream; in-process transports may keep
        // theirs open, so never block on it here.
        if let Some(handle) = self.reader.take() {
            if handle.is_finished() {
                let _ = handle.join();
            }
        }
    }
}
