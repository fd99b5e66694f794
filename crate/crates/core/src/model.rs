// SPDX-License-Identifier: Apache-2.0

//! Model-side server: the test-harness statechart.
//!
//! Three orthogonal regions share one [`HarnessState`]:
//!
//! * **listen** (`Idle`/`Monitor`) takes operator events from the panel,
//!   updates the input attribute and either stimulates the in-process model
//!   (MOM) or queues an outgoing message and raises `UpdateOutgoing` (MRM);
//! * **transmit** (`Initialise` → `WaitForChange` ⇄ `SendChanges`) writes
//!   each queued message and raises `WaitForReply`;
//! * **receive** (`Initialise` → `Idle` → `Delay` → `ReceiveChanges`) waits
//!   the configured delay after a transmission, then decodes every frame that
//!   has arrived into the output attributes.
//!
//! Regions communicate through an internal event queue and run each event to
//! completion. Time-driven steps happen in [`ModelServer::poll`].

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{LogicError, Netlist, Pin, PinVector, SignalLevel, Simulator};
use crate::protocol::{Direction, FrameReader, PinMessage, SerialConfig};
use crate::transport::{ByteSink, ByteSource, Endpoint, TransportError};

pub const DEFAULT_DELAY_MS: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Model only: the in-process model answers.
    #[serde(rename = "MOM")]
    Mom,
    /// Model replacement: stimuli go to the board, replies come back.
    #[serde(rename = "MRM")]
    Mrm,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mom => "MOM",
            Mode::Mrm => "MRM",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MOM" => Ok(Mode::Mom),
            "MRM" => Ok(Mode::Mrm),
            _ => Err(format!("unknown mode `{s}` (expected MOM or MRM)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxState {
    Initialise,
    WaitForChange,
    SendChanges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RxState {
    Initialise,
    Idle,
    Delay,
    ReceiveChanges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ListenState {
    Idle,
    Monitor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarnessEvent {
    PinHigh(Pin),
    PinLow(Pin),
    SetMode(Mode),
    UpdateOutgoing,
    WaitForReply,
}

impl HarnessEvent {
    pub fn pin(pin: Pin, level: SignalLevel) -> Self {
        match level {
            SignalLevel::High => HarnessEvent::PinHigh(pin),
            SignalLevel::Low => HarnessEvent::PinLow(pin),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessState {
    pub mode: Mode,
    pub input_attrs: PinVector,
    pub output_attrs: PinVector,
    pub outgoing: VecDeque<PinMessage>,
    pub tx_state: TxState,
    pub rx_state: RxState,
    pub listen_state: ListenState,
}

impl Default for HarnessState {
    fn default() -> Self {
        Self {
            mode: Mode::Mom,
            input_attrs: PinVector::default(),
            output_attrs: PinVector::default(),
            outgoing: VecDeque::new(),
            tx_state: TxState::Initialise,
            rx_state: RxState::Initialise,
            listen_state: ListenState::Idle,
        }
    }
}

impl HarnessState {
    /// Listen region. Updates the addressed input attribute and decides by
    /// mode: MOM stimulates `model` and refreshes the outputs, MRM queues the
    /// outgoing message and raises `UpdateOutgoing`. Returns raised events.
    pub fn on_panel_event(&mut self, ev: HarnessEvent, model: &mut Simulator) -> Result<Vec<HarnessEvent>, LogicError> {
        self.listen_state = ListenState::Monitor;
        let mut raised = Vec::new();
        match ev {
            HarnessEvent::PinHigh(pin) | HarnessEvent::PinLow(pin) => {
                let level = if matches!(ev, HarnessEvent::PinHigh(_)) { SignalLevel::High } else { SignalLevel::Low };
                self.input_attrs.set(pin, level);
                match self.mode {
                    Mode::Mom => self.output_attrs = model.set_input(pin, level)?,
                    Mode::Mrm => {
                        self.outgoing.push_back(PinMessage::command(pin, level));
                        raised.push(HarnessEvent::UpdateOutgoing);
                    }
                }
            }
            HarnessEvent::SetMode(mode) if mode != self.mode => {
                self.mode = mode;
                match mode {
                    Mode::Mrm => {
                        // The board state is unknown: resend every input.
                        self.tx_state = TxState::Initialise;
                        self.rx_state = RxState::Initialise;
                        for pin in Pin::all() {
                            self.outgoing.push_back(PinMessage::command(pin, self.input_attrs.get(pin)));
                            raised.push(HarnessEvent::UpdateOutgoing);
                        }
                    }
                    Mode::Mom => {
                        self.outgoing.clear();
                        self.tx_state = TxState::Initialise;
                        self.rx_state = RxState::Initialise;
                        self.output_attrs = model.apply(self.input_attrs)?.outputs;
                    }
                }
            }
            HarnessEvent::SetMode(_) | HarnessEvent::UpdateOutgoing | HarnessEvent::WaitForReply => {}
        }
        self.listen_state = ListenState::Idle;
        Ok(raised)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "detail", rename_all = "snake_case")]
pub enum SessionStatus {
    /// MOM; no transport in use.
    Local,
    /// MRM entered, nothing heard from the board yet.
    AwaitingBoard,
    /// At least one valid reply received.
    Live,
    Faulted(String),
}

impl SessionStatus {
    pub fn is_live(&self) -> bool {
        matches!(self, SessionStatus::Live)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogKind {
    Mode { mode: Mode },
    Tx { frame: String },
    /// Entered `ReceiveChanges`.
    Read,
    Rx { frame: String },
    ProtocolError { detail: String },
    ReplyTimeout,
    Fault { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessLogEntry {
    pub t_ms: u64,
    #[serde(flatten)]
    pub kind: LogKind,
}

/// What an external caller observes from one step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Effects {
    pub raised: Vec<HarnessEvent>,
    pub frames: Vec<String>,
    pub notices: Vec<LogKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarnessConfig {
    pub delay_ms: u64,
    /// Window after the delay in which a reply must start arriving.
    pub reply_timeout_ms: u64,
    pub serial: SerialConfig,
}

impl HarnessConfig {
    /// Reply timeout of twice the delay, floored at 200 ms.
    pub fn with_delay(delay_ms: u64) -> Self {
        Self { delay_ms, reply_timeout_ms: (2 * delay_ms).max(200), serial: SerialConfig::default() }
    }
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self::with_delay(DEFAULT_DELAY_MS)
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Point-in-time copy for the operator panel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelView {
    pub mode: Mode,
    pub inputs: PinVector,
    pub outputs: PinVector,
    /// Internal node levels; only available while the local model runs (MOM).
    pub internals: Option<BTreeMap<String, SignalLevel>>,
    pub session: SessionStatus,
    pub listen_state: ListenState,
    pub tx_state: TxState,
    pub rx_state: RxState,
    pub reply_timeouts: u64,
}

struct Link {
    sink: Box<dyn ByteSink>,
    source: Box<dyn ByteSource>,
    config: SerialConfig,
    framer: FrameReader,
}

pub struct ModelServer {
    state: HarnessState,
    model: Simulator,
    netlist: String,
    config: HarnessConfig,
    link: Option<Link>,
    session: SessionStatus,
    queue: VecDeque<HarnessEvent>,
    /// Delay deadline in `Delay`; end of the reply window in `ReceiveChanges`.
    rx_deadline: u64,
    reply_timeouts: u64,
    log: Vec<HarnessLogEntry>,
}

impl ModelServer {
    /// Fresh harness in MOM with all pins low and the model powered on.
    pub fn new(net: &Netlist, config: HarnessConfig) -> Result<Self, HarnessError> {
        let model = Simulator::new(net)?;
        let state = HarnessState { output_attrs: model.outputs(), ..HarnessState::default() };
        Ok(Self {
            state,
            model,
            netlist: net.name.clone(),
            config,
            link: None,
            session: SessionStatus::Local,
            queue: VecDeque::new(),
            rx_deadline: 0,
            reply_timeouts: 0,
            log: Vec::new(),
        })
    }

    /// Connects the transport used in MRM.
    pub fn attach(&mut self, endpoint: Endpoint) {
        let config = endpoint.config;
        let (sink, source) = endpoint.split();
        self.link = Some(Link { sink, source, config, framer: FrameReader::new() });
    }

    pub fn state(&self) -> &HarnessState {
        &self.state
    }

    pub fn config(&self) -> &HarnessConfig {
        &self.config
    }

    pub fn session(&self) -> &SessionStatus {
        &self.session
    }

    pub fn netlist_name(&self) -> &str {
        &self.netlist
    }

    pub fn log(&self) -> &[HarnessLogEntry] {
        &self.log
    }

    pub fn reply_timeouts(&self) -> u64 {
        self.reply_timeouts
    }

    pub fn snapshot(&self) -> PanelView {
        PanelView {
            mode: self.state.mode,
            inputs: self.state.input_attrs,
            outputs: self.state.output_attrs,
            internals: (self.state.mode == Mode::Mom).then(|| self.model.snapshot().nodes),
            session: self.session.clone(),
            listen_state: self.state.listen_state,
            tx_state: self.state.tx_state,
            rx_state: self.state.rx_state,
            reply_timeouts: self.reply_timeouts,
        }
    }

    /// Delivers an operator event and runs every region to completion.
    pub fn handle_panel_event(&mut self, ev: HarnessEvent, now: u64) -> Result<Effects, HarnessError> {
        let mut fx = Effects::default();
        let before = self.state.mode;
        let raised = self.state.on_panel_event(ev, &mut self.model)?;
        if self.state.mode != before {
            self.note(now, LogKind::Mode { mode: self.state.mode }, &mut fx);
            match self.state.mode {
                Mode::Mrm => self.enter_mrm(now, &mut fx),
                Mode::Mom => self.session = SessionStatus::Local,
            }
        }
        self.queue.extend(raised);
        self.run_queue(now, &mut fx);
        self.poll_into(now, &mut fx);
        Ok(fx)
    }

    /// Advances the time-driven parts of the receive region to `now`.
    pub fn poll(&mut self, now: u64) -> Effects {
        let mut fx = Effects::default();
        self.poll_into(now, &mut fx);
        fx
    }

    /// Next clock time at which [`poll`](Self::poll) has work to do.
    pub fn next_wake(&self) -> Option<u64> {
        if self.state.mode != Mode::Mrm {
            return None;
        }
        match self.state.rx_state {
            RxState::Delay => Some(self.rx_deadline),
            RxState::ReceiveChanges => {
                let arrival = self.link.as_ref().and_then(|l| l.source.ready_at());
                Some(arrival.map_or(self.rx_deadline, |a| a.min(self.rx_deadline)))
            }
            _ => None,
        }
    }

    fn enter_mrm(&mut self, now: u64, fx: &mut Effects) {
        self.session = SessionStatus::AwaitingBoard;
        // Transmit region Initialise: the port must mirror the harness settings.
        match &self.link {
            None => return self.fault(now, "no transport attached".into(), fx),
            Some(link) if link.config != self.config.serial => {
                let detail = TransportError::ConfigMismatch { local: self.config.serial, peer: link.config }.to_string();
                return self.fault(now, detail, fx);
            }
            Some(_) => {}
        }
        self.state.tx_state = TxState::WaitForChange;
        self.state.rx_state = RxState::Idle;
    }

    fn run_queue(&mut self, now: u64, fx: &mut Effects) {
        while let Some(ev) = self.queue.pop_front() {
            fx.raised.push(ev);
            match ev {
                HarnessEvent::UpdateOutgoing => self.transmit(now, fx),
                HarnessEvent::WaitForReply => self.await_reply(now),
                other => {
                    let raised = self.state.on_panel_event(other, &mut self.model).unwrap_or_default();
                    self.queue.extend(raised);
                }
            }
        }
    }

    /// Transmit region: `WaitForChange` → `SendChanges` → `WaitForChange`.
    fn transmit(&mut self, now: u64, fx: &mut Effects) {
        if self.state.tx_state != TxState::WaitForChange {
            // Not initialised (faulted or MOM): the message cannot be sent.
            self.state.outgoing.pop_front();
            return;
        }
        let Some(msg) = self.state.outgoing.pop_front() else { return };
        self.state.tx_state = TxState::SendChanges;
        let link = self.link.as_mut().expect("initialised transmit region has a link");
        match link.sink.write_bytes(&msg.frame()) {
            Ok(()) => {
                let frame = msg.to_string();
                fx.frames.push(frame.clone());
                self.log.push(HarnessLogEntry { t_ms: now, kind: LogKind::Tx { frame } });
                self.state.tx_state = TxState::WaitForChange;
                self.queue.push_back(HarnessEvent::WaitForReply);
            }
            Err(e) => self.fault(now, format!("write failed: {e}"), fx),
        }
    }

    /// Receive region reaction to `WaitForReply`: (re)start the delay.
    fn await_reply(&mut self, now: u64) {
        if self.state.rx_state == RxState::Initialise {
            return;
        }
        self.state.rx_state = RxState::Delay;
        self.rx_deadline = now + self.config.delay_ms;
    }

    fn poll_into(&mut self, now: u64, fx: &mut Effects) {
        if self.state.mode != Mode::Mrm {
            return;
        }
        if self.state.rx_state == RxState::Delay && now >= self.rx_deadline {
            self.state.rx_state = RxState::ReceiveChanges;
            self.rx_deadline = now + self.config.reply_timeout_ms;
            self.log.push(HarnessLogEntry { t_ms: now, kind: LogKind::Read });
        }
        if self.state.rx_state != RxState::ReceiveChanges {
            return;
        }
        let received = self.receive(now, fx);
        if self.state.rx_state != RxState::ReceiveChanges {
            return;
        }
        if received > 0 {
            self.state.rx_state = RxState::Idle;
        } else if now >= self.rx_deadline {
            self.reply_timeouts += 1;
            self.note(now, LogKind::ReplyTimeout, fx);
            self.state.rx_state = RxState::Idle;
        }
    }

    /// Reads and decodes every frame available now. Returns the number of
    /// valid replies applied.
    fn receive(&mut self, now: u64, fx: &mut Effects) -> usize {
        let Some(link) = self.link.as_mut() else { return 0 };
        let mut bytes = Vec::new();
        let closed = matches!(link.source.try_read(&mut bytes), Err(TransportError::Closed));
        let frames = link.framer.push(&bytes);
        let mut applied = 0;
        for frame in frames {
            match PinMessage::decode(&frame, Direction::Response) {
                Ok(msg) => {
                    self.state.output_attrs.set(msg.pin, msg.level);
                    self.log.push(HarnessLogEntry { t_ms: now, kind: LogKind::Rx { frame: msg.to_string() } });
                    applied += 1;
                }
                Err(e) => {
                    log::warn!("dropping reply {:?}: {e}", String::from_utf8_lossy(&frame));
                    self.note(now, LogKind::ProtocolError { detail: e.to_string() }, fx);
                }
            }
        }
        if applied > 0 && self.session == SessionStatus::AwaitingBoard {
            self.session = SessionStatus::Live;
        }
        if closed {
            self.fault(now, "board closed the stream".into(), fx);
        }
        applied
    }

    fn fault(&mut self, now: u64, detail: String, fx: &mut Effects) {
        log::error!("session fault: {detail}");
        self.session = SessionStatus::Faulted(detail.clone());
        self.state.tx_state = TxState::Initialise;
        self.state.rx_state = RxState::Initialise;
        self.state.outgoing.clear();
        self.note(now, LogKind::Fault { detail }, fx);
    }

    fn note(&mut self, now: u64, kind: LogKind, fx: &mut Effects) {
        fx.notices.push(kind.clone());
        self.log.push(HarnessLogEntry { t_ms: now, kind });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{oracle_eval, reference_netlist};
    use crate::transport::{open_loopback, Clock};
    use SignalLevel::{High, Low};

    fn p(n: u8) -> Pin {
        Pin::new(n).unwrap()
    }

    fn mrm_server(delay: u64) -> (ModelServer, Endpoint, Clock) {
        let clock = Clock::new_virtual();
        let (a, b) = open_loopback(&clock, SerialConfig::default(), 0);
        let mut s = ModelServer::new(&reference_netlist(), HarnessConfig::with_delay(delay)).unwrap();
        s.attach(a);
        (s, b, clock)
    }

    fn drain(ep: &mut Endpoint) -> Vec<u8> {
        let mut v = Vec::new();
        ep.source.try_read(&mut v).unwrap();
        v
    }

    #[test]
    fn mom_pin_high_matches_oracle() {
        let net = reference_netlist();
        let mut s = ModelServer::new(&net, HarnessConfig::default()).unwrap();
        let fx = s.handle_panel_event(HarnessEvent::PinHigh(p(1)), 0).unwrap();
        assert!(fx.frames.is_empty());
        let expected = oracle_eval(&net, PinVector([High, Low, Low, Low, Low])).unwrap();
        assert_eq!(s.state().output_attrs, expected);
        assert_eq!(s.state().input_attrs.get(p(1)), High);
    }

    #[test]
    fn mrm_listen_region_prepares_message() {
        let net = reference_netlist();
        let mut model = Simulator::new(&net).unwrap();
        let mut st = HarnessState { mode: Mode::Mrm, output_attrs: model.outputs(), ..Default::default() };
        let outputs = st.output_attrs;
        let raised = st.on_panel_event(HarnessEvent::PinHigh(p(2)), &mut model).unwrap();
        assert_eq!(raised, vec![HarnessEvent::UpdateOutgoing]);
        assert_eq!(st.outgoing.front().unwrap().to_string(), "21");
        assert_eq!(st.output_attrs, outputs);
        // The local model was not stimulated.
        assert_eq!(model.inputs(), PinVector::default());
    }

    #[test]
    fn redundant_event_still_transmits_in_mrm() {
        let (mut s, mut board, _clock) = mrm_server(500);
        s.handle_panel_event(HarnessEvent::SetMode(Mode::Mrm), 0).unwrap();
        drain(&mut board);
        s.handle_panel_event(HarnessEvent::PinHigh(p(3)), 0).unwrap();
        let fx = s.handle_panel_event(HarnessEvent::PinHigh(p(3)), 0).unwrap();
        assert_eq!(fx.frames, vec!["31"]);
        assert_eq!(drain(&mut board), b"3131");
    }

    #[test]
    fn mode_switch_resynchronises_all_inputs() {
        let (mut s, mut board, _clock) = mrm_server(500);
        s.handle_panel_event(HarnessEvent::PinHigh(p(4)), 0).unwrap();
        let fx = s.handle_panel_event(HarnessEvent::SetMode(Mode::Mrm), 0).unwrap();
        assert_eq!(fx.frames, vec!["10", "20", "30", "41", "50"]);
        assert_eq!(drain(&mut board), b"1020304150");
        assert_eq!(s.state().tx_state, TxState::WaitForChange);
        assert_eq!(s.state().rx_state, RxState::Delay);
        assert!(s.state().outgoing.is_empty());
        assert_eq!(s.session(), &SessionStatus::AwaitingBoard);
    }

    #[test]
    fn one_frame_per_event_in_order() {
        let (mut s, mut board, _clock) = mrm_server(500);
        s.handle_panel_event(HarnessEvent::SetMode(Mode::Mrm), 0).unwrap();
        drain(&mut board);
        s.handle_panel_event(HarnessEvent::PinHigh(p(1)), 0).unwrap();
        s.handle_panel_event(HarnessEvent::PinHigh(p(5)), 0).unwrap();
        assert_eq!(drain(&mut board), b"1151");
    }

    #[test]
    fn replies_update_outputs_after_delay() {
        let (mut s, mut board, clock) = mrm_server(500);
        s.handle_panel_event(HarnessEvent::SetMode(Mode::Mrm), 0).unwrap();
        board.sink.write_bytes(b"3140").unwrap();
        clock.advance_to(499).unwrap();
        s.poll(499);
        assert_eq!(s.state().rx_state, RxState::Delay);
        assert_eq!(s.next_wake(), Some(500));
        clock.advance_to(500).unwrap();
        s.poll(500);
        assert_eq!(s.state().output_attrs.get(p(3)), High);
        assert_eq!(s.state().output_attrs.get(p(4)), Low);
        assert_eq!(s.state().rx_state, RxState::Idle);
        assert!(s.session().is_live());
    }

    #[test]
    fn silence_raises_reply_timeout() {
        let (mut s, _board, clock) = mrm_server(500);
        s.handle_panel_event(HarnessEvent::SetMode(Mode::Mrm), 0).unwrap();
        clock.advance_to(500).unwrap();
        s.poll(500);
        assert_eq!(s.state().rx_state, RxState::ReceiveChanges);
        assert_eq!(s.next_wake(), Some(1500));
        clock.advance_to(1500).unwrap();
        let fx = s.poll(1500);
        assert_eq!(fx.notices, vec![LogKind::ReplyTimeout]);
        assert_eq!(s.state().rx_state, RxState::Idle);
        assert_eq!(s.session(), &SessionStatus::AwaitingBoard);
    }

    #[test]
    fn malformed_reply_is_skipped() {
        let (mut s, mut board, clock) = mrm_server(0);
        s.handle_panel_event(HarnessEvent::SetMode(Mode::Mrm), 0).unwrap();
        board.sink.write_bytes(b"9x21").unwrap();
        clock.advance(1).unwrap();
        let fx = s.poll(1);
        assert!(matches!(fx.notices[..], [LogKind::ProtocolError { .. }]));
        assert_eq!(s.state().output_attrs.get(p(2)), High);
    }

    #[test]
    fn closed_transport_faults_the_session() {
        let (mut s, board, _clock) = mrm_server(500);
        drop(board);
        let fx = s.handle_panel_event(HarnessEvent::SetMode(Mode::Mrm), 0).unwrap();
        assert!(fx.frames.is_empty());
        assert!(matches!(s.session(), SessionStatus::Faulted(_)));
        assert_eq!(s.state().tx_state, TxState::Initialise);
        // Further events do not write.
        let fx = s.handle_panel_event(HarnessEvent::PinHigh(p(1)), 0).unwrap();
        assert!(fx.frames.is_empty());
    }

    #[test]
    fn mom_never_touches_the_transport() {
        let (mut s, mut board, _clock) = mrm_server(500);
        for n in 1..=5 {
            s.handle_panel_event(HarnessEvent::PinHigh(p(n)), 0).unwrap();
        }
        assert!(drain(&mut board).is_empty());
    }

    #[test]
    fn snapshot_views() {
        let (mut s, _board, _clock) = mrm_server(500);
        let fresh = s.snapshot();
        assert_eq!(fresh.mode, Mode::Mom);
        assert_eq!(fresh.inputs, PinVector::default());
        assert_eq!(fresh.listen_state, ListenState::Idle);
        assert_eq!(fresh.session, SessionStatus::Local);
        s.handle_panel_event(HarnessEvent::PinHigh(p(1)), 0).unwrap();
        let v = s.snapshot();
        assert_eq!(v.inputs.get(p(1)), High);
        assert_eq!(v.internals.as_ref().unwrap()["ext.in1"], High);
        s.handle_panel_event(HarnessEvent::SetMode(Mode::Mrm), 0).unwrap();
        assert!(s.snapshot().internals.is_none());
    }

    #[test]
    fn returning_to_mom_resettles_model() {
        let net = reference_netlist();
        let (mut s, _board, _clock) = mrm_server(500);
        s.handle_panel_event(HarnessEvent::SetMode(Mode::Mrm), 0).unwrap();
        s.handle_panel_event(HarnessEvent::PinHigh(p(1)), 0).unwrap();
        s.handle_panel_event(HarnessEvent::PinHigh(p(2)), 0).unwrap();
        s.handle_panel_event(HarnessEvent::SetMode(Mode::Mom), 0).unwrap();
        let v = PinVector([High, High, Low, Low, Low]);
        assert_eq!(s.state().output_attrs, oracle_eval(&net, v).unwrap());
        assert_eq!(s.session(), &SessionStatus::Local);
    }
}
