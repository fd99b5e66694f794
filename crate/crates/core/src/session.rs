// SPDX-License-Identifier: Apache-2.0

//! A harness and (optionally) an emulated board driven from one clock.
//!
//! [`Session::run_until`] is a small discrete-event loop: service the board,
//! service the harness, then jump to the earliest time either of them has
//! work. Under a virtual clock this runs as fast as the CPU allows and is
//! fully deterministic. Under a real clock it sleeps between steps.

use thiserror::Error;

use crate::board::{poll_period_ms, BoardError, BoardServer, BoardState, FaultSpec, GpioMap, DEFAULT_POLL_HZ};
use crate::logic::{Netlist, Pin, PinVector};
use crate::model::{Effects, HarnessConfig, HarnessError, HarnessEvent, ModelServer, RxState};
use crate::transport::{connect_stream, open_loopback, Clock, Endpoint, Transcript, TransportError};

/// Longest real-time sleep between two service passes.
const REAL_STEP_MS: u64 = 5;

/// Slack added on top of the computed reply time for each stimulus.
pub const SETTLE_MARGIN_MS: u64 = 20;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Emulated board settings for an in-process session.
#[derive(Debug, Clone)]
pub struct BoardOptions {
    /// Circuit on the board; the harness netlist when `None`.
    pub circuit: Option<Netlist>,
    pub faults: Vec<FaultSpec>,
    pub poll_hz: f64,
    pub latency_ms: u64,
    pub map: GpioMap,
}

impl Default for BoardOptions {
    fn default() -> Self {
        Self { circuit: None, faults: Vec::new(), poll_hz: DEFAULT_POLL_HZ, latency_ms: 0, map: GpioMap::default() }
    }
}

pub struct Session {
    clock: Clock,
    model: ModelServer,
    board: Option<BoardServer>,
    transcript: Transcript,
    latency_ms: u64,
    board_poll_ms: u64,
}

impl Session {
    /// Harness only, no transport (MOM use).
    pub fn local(net: &Netlist, config: HarnessConfig, clock: Clock) -> Result<Self, SessionError> {
        Ok(Self {
            model: ModelServer::new(net, config)?,
            clock,
            board: None,
            transcript: Transcript::new(),
            latency_ms: 0,
            board_poll_ms: poll_period_ms(DEFAULT_POLL_HZ)?,
        })
    }

    /// Harness wired to an in-process emulated board over a loopback link.
    pub fn loopback(net: &Netlist, config: HarnessConfig, board: BoardOptions, clock: Clock) -> Result<Self, SessionError> {
        let mut state = BoardState::new(board.circuit.unwrap_or_else(|| net.clone()), board.map)?;
        for f in board.faults {
            state.inject_fault(f)?;
        }
        let transcript = Transcript::new();
        let (m, b) = open_loopback(&clock, config.serial, board.latency_ms);
        let server = BoardServer::new(state, b.recorded(&transcript, "board", &clock), board.poll_hz, clock.now_ms())?;
        let mut s = Self::local(net, config, clock)?;
        s.model.attach(m.recorded(&transcript, "model", &s.clock));
        s.board_poll_ms = server.poll_period();
        s.latency_ms = board.latency_ms;
        s.board = Some(server);
        s.transcript = transcript;
        Ok(s)
    }

    /// Harness connected to a board server at `addr` (`host:port`).
    pub fn remote(net: &Netlist, config: HarnessConfig, addr: &str, board_poll_hz: f64, clock: Clock) -> Result<Self, SessionError> {
        let ep = connect_stream(addr, &clock, config.serial)?;
        Self::with_endpoint(net, config, ep, board_poll_hz, clock)
    }

    /// Harness attached to an arbitrary transport.
    pub fn with_endpoint(
        net: &Netlist,
        config: HarnessConfig,
        ep: Endpoint,
        board_poll_hz: f64,
        clock: Clock,
    ) -> Result<Self, SessionError> {
        let mut s = Self::local(net, config, clock)?;
        s.latency_ms = ep.latency_ms;
        s.board_poll_ms = poll_period_ms(board_poll_hz)?;
        let ep = ep.recorded(&s.transcript, "model", &s.clock);
        s.model.attach(ep);
        Ok(s)
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn now(&self) -> u64 {
        self.clock.now_ms()
    }

    pub fn model(&self) -> &ModelServer {
        &self.model
    }

    pub fn board(&self) -> Option<&BoardServer> {
        self.board.as_ref()
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn latency_ms(&self) -> u64 {
        self.latency_ms
    }

    pub fn board_poll_ms(&self) -> u64 {
        self.board_poll_ms
    }

    /// Time to wait after a stimulus before its reply is surely in.
    pub fn settle_wait_ms(&self) -> u64 {
        let board = self.board_poll_ms + 2 * self.latency_ms;
        self.model.config().delay_ms.max(board) + SETTLE_MARGIN_MS
    }

    /// Delivers an operator event at the current time.
    pub fn handle(&mut self, ev: HarnessEvent) -> Result<Effects, SessionError> {
        let now = self.now();
        self.service(now)?;
        Ok(self.model.handle_panel_event(ev, now)?)
    }

    /// Issues pin events for every input that differs from `v`, pin 1 first.
    pub fn drive(&mut self, v: PinVector) -> Result<usize, SessionError> {
        let current = self.model.state().input_attrs;
        let mut n = 0;
        for p in Pin::all().filter(|&p| current.get(p) != v.get(p)) {
            self.handle(HarnessEvent::pin(p, v.get(p)))?;
            n += 1;
        }
        Ok(n)
    }

    /// Runs the board and harness until clock time `t`.
    pub fn run_until(&mut self, t: u64) -> Result<(), SessionError> {
        loop {
            let now = self.now();
            self.service(now)?;
            if now >= t {
                return Ok(());
            }
            let wake = [self.board.as_ref().and_then(|b| b.next_wake()), self.model.next_wake()]
                .into_iter()
                .flatten()
                .min()
                .unwrap_or(t);
            let mut next = wake.clamp(now + 1, t);
            if !self.clock.is_virtual() {
                next = next.min(now + REAL_STEP_MS);
            }
            self.clock.run_to(next);
        }
    }

    /// Waits out one stimulus: the settle time, then any read still in
    /// progress in the receive region.
    pub fn await_settled(&mut self) -> Result<(), SessionError> {
        let target = self.now() + self.settle_wait_ms();
        self.run_until(target)?;
        while matches!(self.model.state().rx_state, RxState::Delay | RxState::ReceiveChanges) {
            let now = self.now();
            let t = self.model.next_wake().unwrap_or(now + 1).max(now + 1);
            self.run_until(t)?;
        }
        Ok(())
    }

    fn service(&mut self, now: u64) -> Result<(), SessionError> {
        if let Some(b) = self.board.as_mut() {
            b.tick(now)?;
        }
        self.model.poll(now);
        Ok(())
    }
}
