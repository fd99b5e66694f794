// SPDX-License-Identifier: Apache-2.0

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use super::{ByteSink, ByteSource, Clock, Endpoint, TransportError};
use crate::protocol::SerialConfig;

#[derive(Debug)]
struct Pipe {
    /// (arrival time, byte)
    bytes: VecDeque<(u64, u8)>,
    writer_open: bool,
    reader_open: bool,
}

impl Pipe {
    fn new() -> Arc<Mutex<Pipe>> {
        Arc::new(Mutex::new(Pipe { bytes: VecDeque::new(), writer_open: true, reader_open: true }))
    }
}

struct PipeSink {
    pipe: Arc<Mutex<Pipe>>,
    clock: Clock,
    latency_ms: u64,
}

struct PipeSource {
    pipe: Arc<Mutex<Pipe>>,
    clock: Clock,
}

impl ByteSink for PipeSink {
    fn write_bytes(&mut self, bytes: &[u8]) -> Result<(), TransportError> {
        let mut p = self.pipe.lock().unwrap();
        if !p.reader_open {
            return Err(TransportError::Closed);
        }
        let arrival = self.clock.now_ms() + self.latency_ms;
        p.bytes.extend(bytes.iter().map(|&b| (arrival, b)));
        Ok(())
    }
}

impl Drop for PipeSink {
    fn drop(&mut self) {
        self.pipe.lock().unwrap().writer_open = false;
    }
}

impl ByteSource for PipeSource {
    fn try_read(&mut self, out: &mut Vec<u8>) -> Result<usize, TransportError> {
        let now = self.clock.now_ms();
        let mut p = self.pipe.lock().unwrap();
        let before = out.len();
        while let Some(&(t, b)) = p.bytes.front() {
            if t > now {
                break;
            }
            out.push(b);
            p.bytes.pop_front();
        }
        let n = out.len() - before;
        if n == 0 && p.bytes.is_empty() && !p.writer_open {
            return Err(TransportError::Closed);
        }
        Ok(n)
    }

    fn ready_at(&self) -> Option<u64> {
        self.pipe.lock().unwrap().bytes.front().map(|&(t, _)| t)
    }
}

impl Drop for PipeSource {
    fn drop(&mut self) {
        self.pipe.lock().unwrap().reader_open = false;
    }
}

/// Two cross-connected in-process endpoints. Bytes written on one side become
/// readable on the other `latency_ms` of clock time later, in both directions.
pub fn open_loopback(clock: &Clock, config: SerialConfig, latency_ms: u64) -> (Endpoint, Endpoint) {
    let ab = Pipe::new();
    let ba = Pipe::new();
    let side = |tx: &Arc<Mutex<Pipe>>, rx: &Arc<Mutex<Pipe>>| Endpoint {
        sink: Box::new(PipeSink { pipe: tx.clone(), clock: clock.clone(), latency_ms }),
        source: Box::new(PipeSource { pipe: rx.clone(), clock: clock.clone() }),
        config,
        latency_ms,
    };
    (side(&ab, &ba), side(&ba, &ab))
}

/// Like [`open_loopback`], but each side brings its own serial settings and
/// the pair only opens if they agree.
pub fn open_loopback_pair(
    clock: &Clock,
    a: SerialConfig,
    b: SerialConfig,
    latency_ms: u64,
) -> Result<(Endpoint, Endpoint), TransportError> {
    if a != b {
        return Err(TransportError::ConfigMismatch { local: a, peer: b });
    }
    Ok(open_loopback(clock, a, latency_ms))
}
