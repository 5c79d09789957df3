//! Client for victims hosted in another process.
//!
//! Line-delimited JSON over a child's stdin/stdout or a TCP stream:
//!
//! ```text
//! → {"op":"hello"}
//! ← {"n":16,"m":4,"p":16,"heads":["cls","cls","cls","cls"]}
//! → {"id":0,"op":"query","z":[...]}
//! ← {"id":0,"attrs":[...],"conf":[...],"image":[...]}
//! ← {"id":0,"error":"..."}
//! ```
//!
//! Dimensions are fixed by the handshake. Requests are pipelined up to
//! `batch_size` at a time; responses may arrive in any order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{QueryResult, VictimError, VictimModel};
use crate::error::{Error, Result};
use crate::types::{AttributeVector, HeadKind, LatentPoint};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// Program and arguments of a child process.
    Command(Vec<String>),
    /// `host:port`
    Tcp(String),
}

impl Endpoint {
    /// `tcp://host:port`, or a whitespace-separated command line.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(addr) = s.strip_prefix("tcp://") {
            if addr.is_empty() {
                return Err(Error::InvalidArgument("empty tcp address".into()));
            }
            return Ok(Endpoint::Tcp(addr.to_string()));
        }
        let parts: Vec<String> = s.split_whitespace().map(str::to_string).collect();
        if parts.is_empty() {
            return Err(Error::InvalidArgument("empty endpoint".into()));
        }
        Ok(Endpoint::Command(parts))
    }

    pub fn describe(&self) -> String {
        match self {
            Endpoint::Command(c) => c.join(" "),
            Endpoint::Tcp(a) => format!("tcp://{a}"),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct Hello {
    pub n: usize,
    pub m: usize,
    pub p: Option<usize>,
    pub heads: Vec<HeadKind>,
}

#[derive(Debug, Deserialize)]
struct Response {
    id: Option<i64>,
    attrs: Option<Vec<f64>>,
    conf: Option<Vec<f64>>,
    image: Option<Vec<f64>>,
    error: Option<String>,
}

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    next_id: i64,
    poisoned: bool,
}

impl Connection {
    fn send(&mut self, value: &serde_json::Value) -> Result<(), VictimError> {
        let mut line = serde_json::to_vec(value).map_err(|e| VictimError::Malformed(e.to_string()))?;
        line.push(b'\n');
        self.writer.write_all(&line)?;
        Ok(())
    }

    fn recv(&mut self, deadline: Instant, timeout: Duration) -> Result<String, VictimError> {
        let left = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(left) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(VictimError::Io(e)),
            Err(RecvTimeoutError::Timeout) => {
                self.poisoned = true;
                Err(VictimError::Timeout(timeout))
            }
            Err(RecvTimeoutError::Disconnected) => Err(VictimError::Closed),
        }
    }
}

pub struct ExternalVictimClient {
    conn: Mutex<Connection>,
    child: Mutex<Option<Child>>,
    socket: Option<TcpStream>,
    n: usize,
    m: usize,
    p: Option<usize>,
    heads: Vec<HeadKind>,
    timeout: Duration,
    batch_size: usize,
    endpoint: Endpoint,
}

fn spawn_reader<R: Read + Send + 'static>(reader: R) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });
    rx
}

impl ExternalVictimClient {
    /// Opens the endpoint and performs the handshake.
    pub fn connect(endpoint: Endpoint, timeout: Duration, batch_size: usize) -> Result<Self, VictimError> {
        let batch_size = batch_size.max(1);
        let mut socket = None;
        let (writer, lines, child): (Box<dyn Write + Send>, _, _) = match &endpoint {
            Endpoint::Command(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()?;
                let stdin = child.stdin.take().ok_or(VictimError::Closed)?;
                let stdout = child.stdout.take().ok_or(VictimError::Closed)?;
                (Box::new(stdin), spawn_reader(stdout), Some(child))
            }
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)?;
                stream.set_nodelay(true).ok();
                let read_half = stream.try_clone()?;
                socket = Some(stream.try_clone()?);
                (Box::new(stream), spawn_reader(read_half), None)
            }
        };
        let mut conn = Connection {
            writer,
            lines,
            next_id: 0,
            poisoned: false,
        };
        conn.send(&json!({ "op": "hello" }))?;
        conn.writer.flush()?;
        let line = conn.recv(Instant::now() + timeout, timeout)?;
        let hello: Hello =
            serde_json::from_str(&line).map_err(|e| VictimError::Handshake(format!("{e}: {line}")))?;
        if hello.n == 0 || hello.m == 0 {
            return Err(VictimError::Handshake("dimensions must be positive".into()));
        }
        if hello.heads.len() != hello.m {
            return Err(VictimError::DimensionMismatch {
                field: "heads",
                expected: hello.m,
                actual: hello.heads.len(),
            });
        }
        Ok(Self {
            conn: Mutex::new(conn),
            child: Mutex::new(child),
            socket,
            n: hello.n,
            m: hello.m,
            p: hello.p,
            heads: hello.heads,
            timeout,
            batch_size,
            endpoint,
        })
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    fn parse_response(&self, line: &str) -> Result<(i64, QueryResult), VictimError> {
        let resp: Response =
            serde_json::from_str(line).map_err(|e| VictimError::Malformed(format!("{e}: {line}")))?;
        let id = resp
            .id
            .ok_or_else(|| VictimError::Malformed(format!("response without id: {line}")))?;
        if let Some(message) = resp.error {
            return Err(VictimError::Remote { id, message });
        }
        let attrs = resp
            .attrs
            .ok_or_else(|| VictimError::Malformed("response without attrs".into()))?;
        let conf = resp
            .conf
            .ok_or_else(|| VictimError::Malformed("response without conf".into()))?;
        if attrs.len() != self.m {
            return Err(VictimError::DimensionMismatch {
                field: "attrs",
                expected: self.m,
                actual: attrs.len(),
            });
        }
        if conf.len() != self.m {
            return Err(VictimError::DimensionMismatch {
                field: "conf",
                expected: self.m,
                actual: conf.len(),
            });
        }
        if conf.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(VictimError::Malformed("confidence outside [0, 1]".into()));
        }
        match (self.p, &resp.image) {
            (Some(p), Some(img)) if img.len() != p => {
                return Err(VictimError::DimensionMismatch {
                    field: "image",
                    expected: p,
                    actual: img.len(),
                })
            }
            (None, Some(img)) => {
                return Err(VictimError::DimensionMismatch {
                    field: "image",
                    expected: 0,
                    actual: img.len(),
                })
            }
            _ => {}
        }
        let attrs = AttributeVector::new(attrs).map_err(|e| VictimError::Malformed(e.to_string()))?;
        Ok((
            id,
            QueryResult {
                attrs,
                confidence: conf,
                image: resp.image,
            },
        ))
    }

    fn run_chunk(&self, conn: &mut Connection, zs: &[LatentPoint]) -> Result<Vec<QueryResult>, VictimError> {
        let first = conn.next_id;
        for z in zs {
            let id = conn.next_id;
            conn.next_id += 1;
            conn.send(&json!({ "id": id, "op": "query", "z": z.as_slice() }))?;
        }
        conn.writer.flush()?;
        let deadline = Instant::now() + self.timeout;
        let mut got: HashMap<i64, QueryResult> = HashMap::with_capacity(zs.len());
        while got.len() < zs.len() {
            let line = conn.recv(deadline, self.timeout)?;
            let (id, result) = self.parse_response(&line)?;
            if id < first || id >= conn.next_id {
                return Err(VictimError::Malformed(format!("unexpected response id {id}")));
            }
            got.insert(id, result);
        }
        Ok((first..conn.next_id)
            .map(|id| got.remove(&id).expect("all ids collected"))
            .collect())
    }
}

impl VictimModel for ExternalVictimClient {
    fn latent_dim(&self) -> usize {
        self.n
    }

    fn attribute_count(&self) -> usize {
        self.m
    }

    fn image_dim(&self) -> Option<usize> {
        self.p
    }

    fn heads(&self) -> &[HeadKind] {
        &self.heads
    }

    fn query(&self, z: &LatentPoint) -> Result<QueryResult, VictimError> {
        let mut out = self.query_batch(std::slice::from_ref(z))?;
        Ok(out.remove(0))
    }

    fn query_batch(&self, zs: &[LatentPoint]) -> Result<Vec<QueryResult>, VictimError> {
        for z in zs {
            super::check_latent(z, self.n)?;
        }
        let mut conn = self.conn.lock().map_err(|_| VictimError::Closed)?;
        if conn.poisoned {
            return Err(VictimError::Closed);
        }
        let mut out = Vec::with_capacity(zs.len());
        for chunk in zs.chunks(self.batch_size) {
            out.extend(self.run_chunk(&mut conn, chunk)?);
        }
        Ok(out)
    }

    fn descriptor(&self) -> serde_json::Value {
        json!({
            "kind": "external",
            "endpoint": self.endpoint.describe(),
            "n": self.n,
            "m": self.m,
            "p": self.p,
        })
    }
}

impl Drop for ExternalVictimClient {
    fn drop(&mut self) {
        if let Some(s) = &self.socket {
            s.shutdown(std::net::Shutdown::Both).ok();
        }
        if let Ok(mut guard) = self.child.lock() {
            if let Some(mut child) = guard.take() {
                child.kill().ok();
                child.wait().ok();
            }
        }
    }
}
