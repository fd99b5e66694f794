// SPDX-License-Identifier: Apache-2.0

//! Duplex byte streams between the model side and the board side.
//!
//! An [`Endpoint`] splits into an independent [`ByteSink`] and
//! [`ByteSource`], so the transmit and receive paths can be driven
//! separately. Reads never block: a source reports what has arrived by the
//! current clock time. A physical serial port plugs in by implementing the
//! two traits.

mod clock;
mod loopback;
mod stream;

use std::io;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::SerialConfig;

pub use clock::{Clock, ClockError, ClockMode, Wakeup};
pub use loopback::{open_loopback, open_loopback_pair};
pub use stream::{connect_stream, listen_stream, normalize_address, StreamListener};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("stream closed")]
    Closed,
    #[error("connection to {addr} refused: {source}")]
    ConnectionRefused { addr: String, source: io::Error },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: io::Error },
    #[error("bad address `{0}` (expected host:port)")]
    BadAddress(String),
    #[error("serial configuration mismatch: {local:?} vs {peer:?}")]
    ConfigMismatch { local: SerialConfig, peer: SerialConfig },
    #[error("transport I/O: {0}")]
    Io(#[from] io::Error),
}

pub trait ByteSink: Send {
    fn write_bytes(&mut self, bytes: &[u8]) -> Result<(), TransportError>;
}

pub trait ByteSource: Send {
    /// Appends every byte available now to `out`; returns how many.
    /// `Err(Closed)` once the peer is gone and nothing is left to read.
    fn try_read(&mut self, out: &mut Vec<u8>) -> Result<usize, TransportError>;

    /// Earliest clock time at which a byte is (or will be) readable, if known.
    /// `None` means nothing is in flight.
    fn ready_at(&self) -> Option<u64>;
}

pub struct Endpoint {
    pub sink: Box<dyn ByteSink>,
    pub source: Box<dyn ByteSource>,
    pub config: SerialConfig,
    pub latency_ms: u64,
}

impl Endpoint {
    pub fn split(self) -> (Box<dyn ByteSink>, Box<dyn ByteSource>) {
        (self.sink, self.source)
    }

    /// Records every write through this endpoint under `label`.
    pub fn recorded(mut self, transcript: &Transcript, label: &str, clock: &Clock) -> Self {
        self.sink = Box::new(RecordingSink {
            inner: self.sink,
            transcript: transcript.clone(),
            label: label.to_string(),
            clock: clock.clone(),
        });
        self
    }
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint").field("config", &self.config).field("latency_ms", &self.latency_ms).finish()
    }
}

/// One write on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRecord {
    pub t_ms: u64,
    pub sender: String,
    pub bytes: String,
}

/// Shared, ordered log of wire writes.
#[derive(Debug, Clone, Default)]
pub struct Transcript(Arc<Mutex<Vec<WireRecord>>>);

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, t_ms: u64, sender: &str, bytes: &[u8]) {
        self.0.lock().unwrap().push(WireRecord {
            t_ms,
            sender: sender.to_string(),
            bytes: String::from_utf8_lossy(bytes).into_owned(),
        });
    }

    pub fn records(&self) -> Vec<WireRecord> {
        self.0.lock().unwrap().clone()
    }

    /// One line per record: `<t_ms> <sender> <bytes>`.
    pub fn render(&self) -> String {
        self.records().iter().map(|r| format!("{:>8} {} {}\n", r.t_ms, r.sender, r.bytes)).collect()
    }
}

struct RecordingSink {
    inner: Box<dyn ByteSink>,
    transcript: Transcript,
    label: String,
    clock: Clock,
}

impl ByteSink for RecordingSink {
    fn write_bytes(&mut self, bytes: &[u8]) -> Result<(), TransportError> {
        self.inner.write_bytes(bytes)?;
        self.transcript.record(self.clock.now_ms(), &self.label, bytes);
        Ok(())
    }
}
