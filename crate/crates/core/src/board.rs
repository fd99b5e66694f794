// SPDX-License-Identifier: Apache-2.0

//! Emulated hardware side.
//!
//! A virtual GPIO bank is wired to the chassis pins. Commands arriving on the
//! serial link drive the input GPIOs, the board circuit is re-evaluated with
//! the pure Boolean oracle, faults are applied to the result, and every output
//! GPIO that changed is reported straight away. The link is polled at a fixed
//! rate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{oracle_eval, LogicError, Netlist, Pin, PinVector, SignalLevel, PIN_COUNT};
use crate::protocol::{Direction, FrameReader, PinMessage};
use crate::transport::{ByteSink, ByteSource, Clock, Endpoint, TransportError};

pub const DEFAULT_POLL_HZ: f64 = 10.0;

#[derive(Debug, Error)]
pub enum BoardError {
    #[error("GPIO map is not a bijection: {0}")]
    BadMap(String),
    #[error("pin {0} already has a fault")]
    DuplicateFault(Pin),
    #[error("bad fault spec `{0}` (expected stuck_low:N, stuck_high:N, inverted:N or swap_wiring:A:B)")]
    BadFault(String),
    #[error("message {0} is not a command")]
    NotACommand(PinMessage),
    #[error("poll rate must be positive, got {0}")]
    BadPollRate(f64),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Assignment of virtual GPIO numbers to chassis pins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpioMap {
    inputs: [u8; PIN_COUNT],
    outputs: [u8; PIN_COUNT],
}

impl Default for GpioMap {
    /// Inputs 1..5 on GPIO 21..25, outputs 1..5 on GPIO 1..5.
    fn default() -> Self {
        Self { inputs: [21, 22, 23, 24, 25], outputs: [1, 2, 3, 4, 5] }
    }
}

impl GpioMap {
    pub fn new(inputs: [u8; PIN_COUNT], outputs: [u8; PIN_COUNT]) -> Result<Self, BoardError> {
        let mut all: Vec<u8> = inputs.iter().chain(&outputs).copied().collect();
        all.sort_unstable();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(BoardError::BadMap(format!("GPIO{} assigned twice", w[0])));
        }
        Ok(Self { inputs, outputs })
    }

    pub fn input_gpio(&self, pin: Pin) -> u8 {
        self.inputs[pin.slot()]
    }

    pub fn output_gpio(&self, pin: Pin) -> u8 {
        self.outputs[pin.slot()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultSpec {
    StuckLow(Pin),
    StuckHigh(Pin),
    Inverted(Pin),
    SwapWiring(Pin, Pin),
}

impl FaultSpec {
    pub fn pins(&self) -> Vec<Pin> {
        match *self {
            FaultSpec::StuckLow(p) | FaultSpec::StuckHigh(p) | FaultSpec::Inverted(p) => vec![p],
            FaultSpec::SwapWiring(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultSpec::StuckLow(p) => write!(f, "stuck_low:{p}"),
            FaultSpec::StuckHigh(p) => write!(f, "stuck_high:{p}"),
            FaultSpec::Inverted(p) => write!(f, "inverted:{p}"),
            FaultSpec::SwapWiring(a, b) => write!(f, "swap_wiring:{a}:{b}"),
        }
    }
}

impl FromStr for FaultSpec {
    type Err = BoardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BoardError::BadFault(s.to_string());
        let pin = |t: &str| t.trim().parse::<u8>().ok().and_then(Pin::new).ok_or_else(bad);
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "stuck_low" => Ok(FaultSpec::StuckLow(pin(rest)?)),
            "stuck_high" => Ok(FaultSpec::StuckHigh(pin(rest)?)),
            "inverted" => Ok(FaultSpec::Inverted(pin(rest)?)),
            "swap_wiring" | "swap" => {
                let (a, b) = rest.split_once([':', '-']).ok_or_else(bad)?;
                let (a, b) = (pin(a)?, pin(b)?);
                if a == b {
                    return Err(bad());
                }
                Ok(FaultSpec::SwapWiring(a, b))
            }
            _ => Err(bad()),
        }
    }
}

/// Applies faults to a fault-free output vector.
pub fn apply_faults(faults: &[FaultSpec], clean: PinVector) -> PinVector {
    let mut out = clean;
    for f in faults {
        if let FaultSpec::SwapWiring(a, b) = *f {
            out.set(a, clean.get(b));
            out.set(b, clean.get(a));
        }
    }
    for f in faults {
        match *f {
            FaultSpec::StuckLow(p) => out.set(p, SignalLevel::Low),
            FaultSpec::StuckHigh(p) => out.set(p, SignalLevel::High),
            FaultSpec::Inverted(p) => out.set(p, out.get(p).complement()),
            FaultSpec::SwapWiring(..) => {}
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct BoardState {
    gpio: BTreeMap<u8, SignalLevel>,
    circuit: Netlist,
    faults: Vec<FaultSpec>,
    map: GpioMap,
}

impl BoardState {
    /// All input GPIOs low, outputs evaluated from that.
    pub fn new(circuit: Netlist, map: GpioMap) -> Result<Self, BoardError> {
        let mut board = Self { gpio: BTreeMap::new(), circuit, faults: Vec::new(), map };
        for pin in Pin::all() {
            board.gpio.insert(board.map.input_gpio(pin), SignalLevel::Low);
        }
        board.refresh_outputs()?;
        Ok(board)
    }

    pub fn circuit(&self) -> &Netlist {
        &self.circuit
    }

    pub fn faults(&self) -> &[FaultSpec] {
        &self.faults
    }

    pub fn map(&self) -> &GpioMap {
        &self.map
    }

    pub fn gpio(&self, n: u8) -> Option<SignalLevel> {
        self.gpio.get(&n).copied()
    }

    pub fn input_vector(&self) -> PinVector {
        let mut v = PinVector::default();
        for p in Pin::all() {
            v.set(p, self.gpio[&self.map.input_gpio(p)]);
        }
        v
    }

    pub fn output_vector(&self) -> PinVector {
        let mut v = PinVector::default();
        for p in Pin::all() {
            v.set(p, self.gpio[&self.map.output_gpio(p)]);
        }
        v
    }

    /// Output LEDs, pin 1 first: `#` lit, `.` dark.
    pub fn led_view(&self) -> String {
        self.output_vector().0.iter().map(|l| if l.is_high() { '#' } else { '.' }).collect()
    }

    pub fn inject_fault(&mut self, fault: FaultSpec) -> Result<(), BoardError> {
        let taken: Vec<Pin> = self.faults.iter().flat_map(FaultSpec::pins).collect();
        if let Some(p) = fault.pins().into_iter().find(|p| taken.contains(p)) {
            return Err(BoardError::DuplicateFault(p));
        }
        self.faults.push(fault);
        self.refresh_outputs()?;
        Ok(())
    }

    /// Drives the mapped input GPIO, re-evaluates the circuit and returns one
    /// response per output pin whose level changed, plus log lines.
    pub fn apply_command(&mut self, msg: PinMessage) -> Result<(Vec<PinMessage>, Vec<String>), BoardError> {
        if msg.direction != Direction::Command {
            return Err(BoardError::NotACommand(msg));
        }
        let gpio = self.map.input_gpio(msg.pin);
        self.gpio.insert(gpio, msg.level);
        let mut lines = vec![format!("RX {msg} -> GPIO{gpio} {}", msg.level)];
        let changed = self.refresh_outputs()?;
        let responses: Vec<PinMessage> =
            changed.into_iter().map(|p| PinMessage::response(p, self.gpio[&self.map.output_gpio(p)])).collect();
        lines.extend(responses.iter().map(|r| format!("TX {r}")));
        Ok((responses, lines))
    }

    /// Current level of every output pin, pin 1 first.
    pub fn full_state_report(&self) -> Vec<PinMessage> {
        let out = self.output_vector();
        Pin::all().map(|p| PinMessage::response(p, out.get(p))).collect()
    }

    fn refresh_outputs(&mut self) -> Result<Vec<Pin>, BoardError> {
        let clean = oracle_eval(&self.circuit, self.input_vector())?;
        let out = apply_faults(&self.faults, clean);
        let mut changed = Vec::new();
        for p in Pin::all() {
            let gpio = self.map.output_gpio(p);
            if self.gpio.insert(gpio, out.get(p)) != Some(out.get(p)) {
                changed.push(p);
            }
        }
        Ok(changed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardLogEntry {
    pub t_ms: u64,
    pub line: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickOutcome {
    Continue,
    Closed,
}

/// Board event loop bound to one transport session.
pub struct BoardServer {
    board: BoardState,
    sink: Box<dyn ByteSink>,
    source: Box<dyn ByteSource>,
    framer: FrameReader,
    poll_period_ms: u64,
    next_tick: u64,
    started: bool,
    closed: bool,
    log: Vec<BoardLogEntry>,
}

pub fn poll_period_ms(poll_hz: f64) -> Result<u64, BoardError> {
    if !(poll_hz > 0.0 && poll_hz.is_finite()) {
        return Err(BoardError::BadPollRate(poll_hz));
    }
    Ok(((1000.0 / poll_hz).round() as u64).max(1))
}

impl BoardServer {
    /// First poll happens at `start_ms`; the session-start report goes out then.
    pub fn new(board: BoardState, endpoint: Endpoint, poll_hz: f64, start_ms: u64) -> Result<Self, BoardError> {
        let poll_period_ms = poll_period_ms(poll_hz)?;
        let (sink, source) = endpoint.split();
        Ok(Self {
            board,
            sink,
            source,
            framer: FrameReader::new(),
            poll_period_ms,
            next_tick: start_ms,
            started: false,
            closed: false,
            log: Vec::new(),
        })
    }

    pub fn board(&self) -> &BoardState {
        &self.board
    }

    pub fn poll_period(&self) -> u64 {
        self.poll_period_ms
    }

    pub fn log(&self) -> &[BoardLogEntry] {
        &self.log
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn next_wake(&self) -> Option<u64> {
        (!self.closed).then_some(self.next_tick)
    }

    /// One polling step; a no-op before the next scheduled tick.
    pub fn tick(&mut self, now: u64) -> Result<TickOutcome, BoardError> {
        if self.closed {
            return Ok(TickOutcome::Closed);
        }
        if now < self.next_tick {
            return Ok(TickOutcome::Continue);
        }
        while self.next_tick <= now {
            self.next_tick += self.poll_period_ms;
        }
        if !self.started {
            self.started = true;
            let report = self.board.full_state_report();
            if self.send(now, &report).is_err() {
                return Ok(self.close(now));
            }
        }

        let mut bytes = Vec::new();
        let closed = match self.source.try_read(&mut bytes) {
            Ok(_) => false,
            Err(TransportError::Closed) => true,
            Err(e) => return Err(e.into()),
        };
        for frame in self.framer.push(&bytes) {
            let msg = match PinMessage::decode(&frame, Direction::Command) {
                Ok(m) => m,
                Err(e) => {
                    self.push_log(now, format!("ERR {:?}: {e}", String::from_utf8_lossy(&frame)));
                    continue;
                }
            };
            let (responses, lines) = self.board.apply_command(msg)?;
            if let Some(first) = lines.first() {
                self.push_log(now, first.clone());
            }
            // Output changes are reported at once, not on the next poll.
            if self.send(now, &responses).is_err() {
                return Ok(self.close(now));
            }
        }
        if closed {
            return Ok(self.close(now));
        }
        Ok(TickOutcome::Continue)
    }

    /// Runs the polling loop until the peer closes or `stop` is set.
    pub fn serve(mut self, clock: &Clock, stop: &AtomicBool, mut on_line: impl FnMut(&BoardLogEntry)) -> Result<BoardState, BoardError> {
        let mut shown = 0;
        while !stop.load(Ordering::Relaxed) {
            let Some(at) = self.next_wake() else { break };
            clock.sleep_until(at);
            let outcome = self.tick(clock.now_ms())?;
            for entry in &self.log[shown..] {
                on_line(entry);
            }
            shown = self.log.len();
            if outcome == TickOutcome::Closed {
                break;
            }
        }
        Ok(self.board)
    }

    fn send(&mut self, now: u64, msgs: &[PinMessage]) -> Result<(), TransportError> {
        for m in msgs {
            self.sink.write_bytes(&m.frame())?;
            self.push_log(now, format!("TX {m}"));
        }
        Ok(())
    }

    fn close(&mut self, now: u64) -> TickOutcome {
        self.closed = true;
        if let Some(b) = self.framer.pending() {
            self.push_log(now, format!("ERR truncated frame {:?}", b as char));
        }
        self.push_log(now, "link closed".into());
        TickOutcome::Closed
    }

    fn push_log(&mut self, now: u64, line: String) {
        log::info!("{line}");
        self.log.push(BoardLogEntry { t_ms: now, line });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::reference_netlist;
    use crate::protocol::SerialConfig;
    use crate::transport::open_loopback;
    use SignalLevel::{High, Low};

    fn p(n: u8) -> Pin {
        Pin::new(n).unwrap()
    }

    fn board() -> BoardState {
        BoardState::new(reference_netlist(), GpioMap::default()).unwrap()
    }

    fn cmd(pin: u8, level: SignalLevel) -> PinMessage {
        PinMessage::command(p(pin), level)
    }

    #[test]
    fn input_mapping_21_to_25() {
        let mut b = board();
        for n in 1..=5u8 {
            let (_, lines) = b.apply_command(cmd(n, High)).unwrap();
            assert_eq!(lines[0], format!("RX {n}1 -> GPIO{} HIGH", 20 + n));
            assert_eq!(b.gpio(20 + n), Some(High));
        }
    }

    #[test]
    fn flipping_in1_reports_only_out3() {
        let mut b = board();
        b.apply_command(cmd(1, High)).unwrap();
        let before = b.output_vector();
        // in1 high, in3 low, in5 low: XOR high and NOT in5 high, so out3 is low.
        assert_eq!(before.get(p(3)), Low);
        let (responses, _) = b.apply_command(cmd(1, Low)).unwrap();
        let frames: Vec<String> = responses.iter().map(ToString::to_string).collect();
        assert_eq!(frames, vec!["31"]);
    }

    #[test]
    fn reasserting_level_is_silent() {
        let mut b = board();
        b.apply_command(cmd(2, High)).unwrap();
        let (responses, _) = b.apply_command(cmd(2, High)).unwrap();
        assert!(responses.is_empty());
    }

    #[test]
    fn stuck_low_never_reports_high() {
        let mut b = board();
        b.inject_fault(FaultSpec::StuckLow(p(3))).unwrap();
        for v in PinVector::all() {
            for pin in Pin::all() {
                let (responses, _) = b.apply_command(PinMessage::command(pin, v.get(pin))).unwrap();
                assert!(responses.iter().all(|r| r.to_string() != "31"));
            }
        }
    }

    #[test]
    fn fault_definitions() {
        let clean = PinVector([High, Low, High, Low, Low]);
        assert_eq!(apply_faults(&[FaultSpec::StuckHigh(p(2))], clean).get(p(2)), High);
        assert_eq!(apply_faults(&[FaultSpec::Inverted(p(1))], clean).get(p(1)), Low);
        let swapped = apply_faults(&[FaultSpec::SwapWiring(p(1), p(2))], clean);
        assert_eq!((swapped.get(p(1)), swapped.get(p(2))), (Low, High));
    }

    #[test]
    fn duplicate_fault_rejected() {
        let mut b = board();
        b.inject_fault(FaultSpec::SwapWiring(p(1), p(2))).unwrap();
        assert!(matches!(b.inject_fault(FaultSpec::StuckLow(p(2))), Err(BoardError::DuplicateFault(_))));
        assert!(b.inject_fault(FaultSpec::StuckLow(p(3))).is_ok());
    }

    #[test]
    fn fault_spec_parsing() {
        assert_eq!("stuck_low:3".parse::<FaultSpec>().unwrap(), FaultSpec::StuckLow(p(3)));
        assert_eq!("swap_wiring:1:2".parse::<FaultSpec>().unwrap(), FaultSpec::SwapWiring(p(1), p(2)));
        assert_eq!("swap:4-5".parse::<FaultSpec>().unwrap(), FaultSpec::SwapWiring(p(4), p(5)));
        for bad in ["stuck_low:6", "melted:1", "swap_wiring:2:2", "inverted"] {
            assert!(bad.parse::<FaultSpec>().is_err(), "{bad}");
        }
        let f = FaultSpec::SwapWiring(p(1), p(2));
        assert_eq!(f.to_string().parse::<FaultSpec>().unwrap(), f);
    }

    #[test]
    fn full_report_and_idempotence() {
        let mut b = BoardState::new(reference_netlist(), GpioMap::default()).unwrap();
        b.inject_fault(FaultSpec::StuckLow(p(1))).unwrap();
        b.inject_fault(FaultSpec::StuckLow(p(2))).unwrap();
        b.inject_fault(FaultSpec::StuckLow(p(3))).unwrap();
        b.inject_fault(FaultSpec::StuckLow(p(4))).unwrap();
        let report: Vec<String> = b.full_state_report().iter().map(ToString::to_string).collect();
        assert_eq!(report, vec!["10", "20", "30", "40", "50"]);
        assert_eq!(b.full_state_report(), b.full_state_report());
    }

    #[test]
    fn map_must_be_bijective() {
        assert!(GpioMap::new([21, 22, 23, 24, 25], [1, 2, 3, 4, 21]).is_err());
        assert!(GpioMap::new([21, 22, 23, 24, 25], [5, 6, 7, 8, 9]).is_ok());
    }

    #[test]
    fn server_applies_within_one_poll_period() {
        let clock = Clock::new_virtual();
        let (mut model, board_ep) = open_loopback(&clock, SerialConfig::default(), 0);
        let mut server = BoardServer::new(board(), board_ep, 10.0, 0).unwrap();
        server.tick(0).unwrap();
        let mut buf = Vec::new();
        model.source.try_read(&mut buf).unwrap();
        assert_eq!(buf.len(), 10, "session-start report");

        clock.advance_to(30).unwrap();
        model.sink.write_bytes(b"21").unwrap();
        assert_eq!(server.next_wake(), Some(100));
        clock.advance_to(100).unwrap();
        server.tick(100).unwrap();
        assert_eq!(server.board().gpio(22), Some(High));
        let rx = server.log().iter().find(|e| e.line.starts_with("RX")).unwrap();
        assert_eq!(rx.t_ms, 100);
        assert_eq!(rx.line, "RX 21 -> GPIO22 HIGH");
    }

    #[test]
    fn server_exits_when_peer_closes() {
        let clock = Clock::new_virtual();
        let (model, board_ep) = open_loopback(&clock, SerialConfig::default(), 0);
        let server = BoardServer::new(board(), board_ep, 10.0, 0).unwrap();
        drop(model);
        let stop = AtomicBool::new(false);
        let state = server.serve(&clock, &stop, |_| {}).unwrap();
        assert_eq!(state.input_vector(), PinVector::default());
    }

    #[test]
    fn malformed_command_is_logged_and_skipped() {
        let clock = Clock::new_virtual();
        let (mut model, board_ep) = open_loopback(&clock, SerialConfig::default(), 0);
        let mut server = BoardServer::new(board(), board_ep, 10.0, 0).unwrap();
        model.sink.write_bytes(b"7151").unwrap();
        server.tick(0).unwrap();
        assert!(server.log().iter().any(|e| e.line.starts_with("ERR")));
        assert_eq!(server.board().gpio(25), Some(High));
    }

    #[test]
    fn bad_poll_rate() {
        assert!(poll_period_ms(0.0).is_err());
        assert_eq!(poll_period_ms(10.0).unwrap(), 100);
    }
}
