//! Line protocol: one JSON object per line.
//!
//! ```text
//! {"trace":"t1","activity":"A","lifecycle":"start","ts":"2020-01-01T00:00:00Z"}
//! ```
//!
//! Readers never stop on a bad line; it is logged and skipped.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::net::{SocketAddr, TcpListener, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::mpsc::{self, Receiver, SyncSender};
use std::thread;

use chrono::SecondsFormat;
use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{parse_timestamp, Event, Lifecycle};

#[derive(Debug, Error, PartialEq)]
pub enum LineError {
    #[error("blank line")]
    Blank,
    #[error("invalid UTF-8")]
    Utf8,
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("empty activity")]
    EmptyActivity,
    #[error("unparseable timestamp '{0}'")]
    Timestamp(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct WireEvent {
    trace: String,
    activity: String,
    lifecycle: String,
    ts: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attrs: BTreeMap<String, String>,
}

/// Serializes one event as a line-protocol record, without the trailing newline.
pub fn encode_line(event: &Event) -> String {
    let wire = WireEvent {
        trace: event.trace_id.clone(),
        activity: event.activity.clone(),
        lifecycle: event.lifecycle.as_str().to_string(),
        ts: event.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        attrs: event.attrs.clone(),
    };
    serde_json::to_string(&wire).expect("string-only record serializes")
}

pub fn decode_line(line: &str) -> Result<Event, LineError> {
    let line = line.trim();
    if line.is_empty() {
        return Err(LineError::Blank);
    }
    let wire: WireEvent =
        serde_json::from_str(line).map_err(|e| LineError::Json(e.to_string()))?;
    if wire.activity.is_empty() {
        return Err(LineError::EmptyActivity);
    }
    let timestamp = parse_timestamp(&wire.ts).ok_or(LineError::Timestamp(wire.ts.clone()))?;
    Ok(Event {
        trace_id: wire.trace,
        activity: wire.activity,
        lifecycle: Lifecycle::parse(&wire.lifecycle),
        timestamp,
        attrs: wire.attrs,
    })
}

/// Iterator over the well-formed events of a line-protocol reader.
pub struct LineEvents<R> {
    reader: R,
    buf: Vec<u8>,
    line_no: usize,
    skipped: usize,
    label: String,
}

impl<R: BufRead> LineEvents<R> {
    pub fn new(reader: R) -> Self {
        Self::with_label(reader, "stream")
    }

    pub fn with_label(reader: R, label: impl Into<String>) -> Self {
        LineEvents {
            reader,
            buf: Vec::with_capacity(256),
            line_no: 0,
            skipped: 0,
            label: label.into(),
        }
    }

    /// Lines skipped so far because they did not decode.
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl<R: BufRead> Iterator for LineEvents<R> {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    warn!("{}: read error after line {}: {e}", self.label, self.line_no);
                    return None;
                }
            }
            self.line_no += 1;
            let decoded = std::str::from_utf8(&self.buf)
                .map_err(|_| LineError::Utf8)
                .and_then(decode_line);
            match decoded {
                Ok(ev) => return Some(ev),
                Err(e) => {
                    self.skipped += 1;
                    warn!("{}: line {} skipped: {e}", self.label, self.line_no);
                }
            }
        }
    }
}

/// Where a live stream comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamSource {
    Stdin,
    File(PathBuf),
    /// Listen on this address; every accepted connection is one producer.
    Tcp(String),
}

impl StreamSource {
    /// `-` or `stdin`, `tcp:<host:port>`, anything else is a file path.
    pub fn parse(spec: &str) -> StreamSource {
        if spec == "-" || spec == "stdin" {
            StreamSource::Stdin
        } else if let Some(addr) = spec.strip_prefix("tcp:") {
            StreamSource::Tcp(addr.to_string())
        } else {
            StreamSource::File(PathBuf::from(spec))
        }
    }

    /// Starts the producer side and returns the consumer end of the channel.
    ///
    /// For TCP the listener is bound before returning, so an unusable address
    /// surfaces here. The returned address is the bound one (useful with port 0).
    pub fn spawn(&self, capacity: usize) -> io::Result<(Receiver<Event>, Option<SocketAddr>)> {
        let (tx, rx) = mpsc::sync_channel(capacity.max(1));
        match self {
            StreamSource::Stdin => {
                thread::spawn(move || {
                    let stdin = io::stdin();
                    pump(LineEvents::with_label(stdin.lock(), "stdin"), &tx);
                });
                Ok((rx, None))
            }
            StreamSource::File(path) => {
                let file = File::open(path)?;
                let label = path.display().to_string();
                thread::spawn(move || {
                    pump(LineEvents::with_label(BufReader::new(file), label), &tx);
                });
                Ok((rx, None))
            }
            StreamSource::Tcp(addr) => {
                let addr = addr
                    .to_socket_addrs()?
                    .next()
                    .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no address"))?;
                let listener = TcpListener::bind(addr)?;
                let bound = listener.local_addr()?;
                thread::spawn(move || accept_loop(listener, tx));
                Ok((rx, Some(bound)))
            }
        }
    }
}

fn pump<R: BufRead>(events: LineEvents<R>, tx: &SyncSender<Event>) {
    for ev in events {
        if tx.send(ev).is_err() {
            return;
        }
    }
}

fn accept_loop(listener: TcpListener, tx: SyncSender<Event>) {
    for conn in listener.incoming() {
        match conn {
            Ok(stream) => {
                let peer = stream
                    .peer_addr()
                    .map(|a| a.to_string())
                    .unwrap_or_else(|_| "peer".into());
                debug!("producer connected: {peer}");
                let tx = tx.clone();
                thread::spawn(move || {
                    pump(LineEvents::with_label(BufReader::new(stream), peer), &tx);
                });
            }
            Err(e) => warn!("accept failed: {e}"),
        }
    }
}
