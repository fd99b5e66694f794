// SPDX-License-Identifier: Apache-2.0

//! TCP byte streams (`host:port`).

use std::io::{ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::{ByteSink, ByteSource, Clock, Endpoint, TransportError};
use crate::protocol::SerialConfig;

/// Accepts `host:port`, and `:port` as shorthand for all interfaces.
pub fn normalize_address(addr: &str) -> Result<String, TransportError> {
    let full = if addr.starts_with(':') { format!("0.0.0.0{addr}") } else { addr.to_string() };
    match full.rsplit_once(':') {
        Some((host, port)) if !host.is_empty() && port.parse::<u16>().is_ok() => Ok(full),
        _ => Err(TransportError::BadAddress(addr.to_string())),
    }
}

pub struct StreamListener {
    listener: TcpListener,
}

pub fn listen_stream(addr: &str) -> Result<StreamListener, TransportError> {
    let addr = normalize_address(addr)?;
    let listener = TcpListener::bind(&addr).map_err(|source| TransportError::Bind { addr, source })?;
    Ok(StreamListener { listener })
}

impl StreamListener {
    pub fn local_addr(&self) -> std::io::Result<std::net::SocketAddr> {
        self.listener.local_addr()
    }

    /// Blocks until a peer connects.
    pub fn accept(&self, clock: &Clock, config: SerialConfig) -> Result<Endpoint, TransportError> {
        self.listener.set_nonblocking(false)?;
        let (stream, _) = self.listener.accept()?;
        endpoint(stream, clock, config)
    }

    /// Returns `None` at once if no peer is waiting.
    pub fn try_accept(&self, clock: &Clock, config: SerialConfig) -> Result<Option<Endpoint>, TransportError> {
        self.listener.set_nonblocking(true)?;
        match self.listener.accept() {
            Ok((stream, _)) => endpoint(stream, clock, config).map(Some),
            Err(e) if e.kind() == ErrorKind::WouldBlock => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

pub fn connect_stream(addr: &str, clock: &Clock, config: SerialConfig) -> Result<Endpoint, TransportError> {
    let norm = normalize_address(addr)?;
    let mut last = None;
    for sa in norm.to_socket_addrs().map_err(|_| TransportError::BadAddress(addr.to_string()))? {
        match TcpStream::connect_timeout(&sa, Duration::from_secs(5)) {
            Ok(s) => return endpoint(s, clock, config),
            Err(e) => last = Some(e),
        }
    }
    Err(TransportError::ConnectionRefused {
        addr: norm,
        source: last.unwrap_or_else(|| ErrorKind::AddrNotAvailable.into()),
    })
}

fn endpoint(stream: TcpStream, clock: &Clock, config: SerialConfig) -> Result<Endpoint, TransportError> {
    stream.set_nodelay(true)?;
    stream.set_nonblocking(true)?;
    let reader = stream.try_clone()?;
    Ok(Endpoint {
        sink: Box::new(TcpSink(stream)),
        source: Box::new(TcpSource { stream: reader, clock: clock.clone(), eof: false }),
        config,
        latency_ms: 0,
    })
}

struct TcpSink(TcpStream);

impl ByteSink for TcpSink {
    fn write_bytes(&mut self, mut bytes: &[u8]) -> Result<(), TransportError> {
        while !bytes.is_empty() {
            match self.0.write(bytes) {
                Ok(0) => return Err(TransportError::Closed),
                Ok(n) => bytes = &bytes[n..],
                Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(Duration::from_millis(1)),
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) if is_disconnect(&e) => return Err(TransportError::Closed),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }
}

impl Drop for TcpSink {
    fn drop(&mut self) {
        let _ = self.0.shutdown(std::net::Shutdown::Write);
    }
}

struct TcpSource {
    stream: TcpStream,
    clock: Clock,
    eof: bool,
}

impl ByteSource for TcpSource {
    fn try_read(&mut self, out: &mut Vec<u8>) -> Result<usize, TransportError> {
        let mut buf = [0u8; 512];
        let mut n = 0;
        loop {
            if self.eof {
                return if n == 0 { Err(TransportError::Closed) } else { Ok(n) };
            }
            match self.stream.read(&mut buf) {
                Ok(0) => self.eof = true,
                Ok(k) => {
                    out.extend_from_slice(&buf[..k]);
                    n += k;
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => return Ok(n),
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) if is_disconnect(&e) => self.eof = true,
                Err(e) => return Err(e.into()),
            }
        }
    }

    fn ready_at(&self) -> Option<u64> {
        if self.eof {
            return Some(self.clock.now_ms());
        }
        match self.stream.peek(&mut [0u8; 1]) {
            Ok(_) => Some(self.clock.now_ms()),
            Err(e) if is_disconnect(&e) => Some(self.clock.now_ms()),
            Err(_) => None,
        }
    }
}

fn is_disconnect(e: &std::io::Error) -> bool {
    matches!(e.kind(), ErrorKind::BrokenPipe | ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Instant;

    fn read_until(ep: &mut Endpoint, n: usize) -> Vec<u8> {
        let start = Instant::now();
        let mut got = Vec::new();
        while got.len() < n && start.elapsed() < Duration::from_secs(5) {
            ep.source.try_read(&mut got).unwrap();
            std::thread::sleep(Duration::from_millis(1));
        }
        got
    }

    #[test]
    fn address_forms() {
        assert_eq!(normalize_address(":9000").unwrap(), "0.0.0.0:9000");
        assert_eq!(normalize_address("127.0.0.1:1").unwrap(), "127.0.0.1:1");
        assert!(normalize_address("localhost").is_err());
        assert!(normalize_address("host:notaport").is_err());
    }

    #[test]
    fn connect_and_exchange() {
        let clock = Clock::real();
        let listener = listen_stream("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let c2 = clock.clone();
        let server = std::thread::spawn(move || listener.accept(&c2, SerialConfig::default()).unwrap());
        let mut client = connect_stream(&addr, &clock, SerialConfig::default()).unwrap();
        let mut board = server.join().unwrap();
        client.sink.write_bytes(b"11").unwrap();
        assert_eq!(read_until(&mut board, 2), b"11");
        board.sink.write_bytes(b"31").unwrap();
        assert_eq!(read_until(&mut client, 2), b"31");
    }

    #[test]
    fn dead_address_is_refused() {
        // Bind then drop to find a port with no listener.
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let err = connect_stream(&format!("127.0.0.1:{port}"), &Clock::real(), SerialConfig::default());
        assert!(matches!(err, Err(TransportError::ConnectionRefused { .. })));
    }

    #[test]
    fn peer_close_surfaces_as_closed() {
        let clock = Clock::real();
        let listener = listen_stream("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let c2 = clock.clone();
        let server = std::thread::spawn(move || listener.accept(&c2, SerialConfig::default()).unwrap());
        let mut client = connect_stream(&addr, &clock, SerialConfig::default()).unwrap();
        drop(server.join().unwrap());
        let start = Instant::now();
        let mut buf = Vec::new();
        loop {
            match client.source.try_read(&mut buf) {
                Err(TransportError::Closed) => break,
                Ok(_) if start.elapsed() < Duration::from_secs(5) => std::thread::sleep(Duration::from_millis(2)),
                other => panic!("expected Closed, got {other:?}"),
            }
        }
    }

    #[test]
    fn try_accept_without_peer_is_none() {
        let clock = Clock::real();
        let listener = listen_stream("127.0.0.1:0").unwrap();
        assert!(listener.try_accept(&clock, SerialConfig::default()).unwrap().is_none());
        let addr = listener.local_addr().unwrap().to_string();
        let _client = connect_stream(&addr, &clock, SerialConfig::default()).unwrap();
        let start = Instant::now();
        loop {
            if listener.try_accept(&clock, SerialConfig::default()).unwrap().is_some() {
                break;
            }
            assert!(start.elapsed() < Duration::from_secs(5));
            std::thread::sleep(Duration::from_millis(2));
        }
    }

    #[test]
    fn bind_conflict_reported() {
        let a = listen_stream("127.0.0.1:0").unwrap();
        let addr = a.local_addr().unwrap().to_string();
        assert!(matches!(listen_stream(&addr), Err(TransportError::Bind { .. })));
    }
}
