// SPDX-License-Identifier: Apache-2.0

//! Operator panel service.
//!
//! One model actor thread owns the [`Session`] and is the only writer. Every
//! connected client's commands go through a single queue to that thread, in
//! arrival order. After each step the actor compares the harness snapshot
//! with the last one it published and, if anything changed, broadcasts a
//! `state` message with the next sequence number.

mod messages;

use std::net::SocketAddr;
use std::sync::mpsc;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use thiserror::Error;
use tokio::sync::broadcast;

use shia_core::logic::Netlist;
use shia_core::model::{HarnessEvent, Mode, PanelView};
use shia_core::session::Session;
use shia_core::verify::{compare, mom_sweep, mrm_sweep, TruthTable};

pub use messages::{ClientMessage, ServerMessage, StateMessage, SweepSummary};

pub const DEFAULT_BIND: &str = "127.0.0.1:8743";

/// Harness log lines carried in each broadcast.
const LOG_TAIL: usize = 16;

const ACTOR_STEP: Duration = Duration::from_millis(5);

const INDEX_HTML: &str = include_str!("../static/index.html");
const APP_JS: &str = include_str!("../static/app.js");
const PANEL_CSS: &str = include_str!("../static/panel.css");

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("panel requires a real-time clock")]
    VirtualClock,
    #[error("panel I/O: {0}")]
    Io(#[from] std::io::Error),
}

enum Command {
    Event(HarnessEvent),
    Sweep(Mode),
}

#[derive(Clone)]
struct Shared {
    commands: mpsc::Sender<Command>,
    updates: broadcast::Sender<String>,
    latest: Arc<Mutex<String>>,
}

pub struct PanelServer {
    listener: tokio::net::TcpListener,
    shared: Shared,
    stop: Arc<AtomicBool>,
    actor: Option<thread::JoinHandle<()>>,
}

impl PanelServer {
    /// Binds the listener and starts the model actor. The session must run
    /// on a real clock.
    pub async fn bind(session: Session, net: Netlist, addr: &str) -> Result<Self, PanelError> {
        if session.clock().is_virtual() {
            return Err(PanelError::VirtualClock);
        }
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|source| PanelError::Bind { addr: addr.to_string(), source })?;
        let (commands, rx) = mpsc::channel();
        let (updates, _) = broadcast::channel(256);
        let mut actor = Actor { session, net, seq: 0, last: None, updates: updates.clone(), latest: Arc::default() };
        actor.publish();
        let latest = actor.latest.clone();
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let handle = thread::Builder::new().name("panel-model".into()).spawn(move || actor.run(rx, &flag))?;
        Ok(Self { listener, shared: Shared { commands, updates, latest }, stop, actor: Some(handle) })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn url(&self) -> String {
        match self.local_addr() {
            Ok(a) => format!("http://{a}/"),
            Err(_) => "http://(unbound)/".into(),
        }
    }

    /// Serves until `shutdown` resolves, then stops the model actor.
    pub async fn run_until(mut self, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> Result<(), PanelError> {
        let app = router(self.shared.clone());
        axum::serve(self.listener, app).with_graceful_shutdown(shutdown).await?;
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.actor.take() {
            let _ = tokio::task::spawn_blocking(move || h.join()).await;
        }
        Ok(())
    }
}

fn router(shared: Shared) -> Router {
    Router::new()
        .route("/", get(|| async { ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], INDEX_HTML) }))
        .route("/app.js", get(|| async { ([(header::CONTENT_TYPE, "text/javascript")], APP_JS) }))
        .route("/panel.css", get(|| async { ([(header::CONTENT_TYPE, "text/css")], PANEL_CSS) }))
        .route("/ws", get(ws_upgrade))
        .with_state(shared)
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(shared): State<Shared>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, shared))
}

async fn client(mut socket: WebSocket, shared: Shared) {
    let mut updates = shared.updates.subscribe();
    let hello = shared.latest.lock().unwrap().clone();
    if socket.send(Message::Text(hello.into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                    Some(Ok(_)) => continue,
                };
                let reply = match ClientMessage::parse(&text) {
                    Err(detail) => Some(ServerMessage::Error { detail }.to_json()),
                    Ok(ClientMessage::RequestSnapshot) => Some(shared.latest.lock().unwrap().clone()),
                    Ok(msg) => {
                        let cmd = match msg {
                            ClientMessage::SetPin { pin, level } => Command::Event(HarnessEvent::pin(pin, level)),
                            ClientMessage::SetMode { mode } => Command::Event(HarnessEvent::SetMode(mode)),
                            ClientMessage::RunSweep { mode } => Command::Sweep(mode),
                            ClientMessage::RequestSnapshot => unreachable!(),
                        };
                        shared.commands.send(cmd).err().map(|_| ServerMessage::Error { detail: "model stopped".into() }.to_json())
                    }
                };
                if let Some(r) = reply {
                    if socket.send(Message::Text(r.into())).await.is_err() {
                        return;
                    }
                }
            }
            update = updates.recv() => {
                match update {
                    Ok(text) => if socket.send(Message::Text(text.into())).await.is_err() { return },
                    Err(broadcast::error::RecvError::Lagged(_)) => {
                        let latest = shared.latest.lock().unwrap().clone();
                        if socket.send(Message::Text(latest.into())).await.is_err() { return }
                    }
                    Err(broadcast::error::RecvError::Closed) => return,
                }
            }
        }
    }
}

struct Actor {
    session: Session,
    net: Netlist,
    seq: u64,
    last: Option<PanelView>,
    updates: broadcast::Sender<String>,
    latest: Arc<Mutex<String>>,
}

impl Actor {
    fn run(&mut self, rx: mpsc::Receiver<Command>, stop: &AtomicBool) {
        while !stop.load(Ordering::Relaxed) {
            match rx.recv_timeout(ACTOR_STEP) {
                Ok(cmd) => self.apply(cmd),
                Err(mpsc::RecvTimeoutError::Timeout) => {}
                Err(mpsc::RecvTimeoutError::Disconnected) => return,
            }
            let now = self.session.now();
            if let Err(e) = self.session.run_until(now) {
                self.send(ServerMessage::Error { detail: e.to_string() }.to_json());
            }
            self.publish();
        }
    }

    fn apply(&mut self, cmd: Command) {
        match cmd {
            Command::Event(ev) => {
                if let Err(e) = self.session.handle(ev) {
                    self.send(ServerMessage::Error { detail: e.to_string() }.to_json());
                }
            }
            Command::Sweep(mode) => {
                let msg = match self.sweep(mode) {
                    Ok(s) => ServerMessage::SweepResult(s),
                    Err(detail) => ServerMessage::Error { detail },
                };
                self.publish();
                self.send(msg.to_json());
            }
        }
    }

    fn sweep(&mut self, mode: Mode) -> Result<SweepSummary, String> {
        let reference = mom_sweep(&self.net).map_err(|e| e.to_string())?;
        let table: TruthTable = match mode {
            Mode::Mom => reference.clone(),
            Mode::Mrm => mrm_sweep(&mut self.session).map_err(|e| e.to_string())?,
        };
        let verdict = compare(&reference, &table).map_err(|e| e.to_string())?.verdict;
        Ok(SweepSummary { mode, verdict, csv: table.to_csv() })
    }

    /// Broadcasts the snapshot if it differs from the last one published.
    fn publish(&mut self) {
        let view = self.session.model().snapshot();
        if self.last.as_ref() == Some(&view) {
            return;
        }
        self.seq += 1;
        let log = self.session.model().log();
        let tail = log[log.len().saturating_sub(LOG_TAIL)..].iter().map(messages::render_log).collect();
        let text = ServerMessage::State(StateMessage::from_view(self.seq, &view, tail)).to_json();
        *self.latest.lock().unwrap() = text.clone();
        self.last = Some(view);
        self.send(text);
    }

    fn send(&self, text: String) {
        let _ = self.updates.send(text);
    }
}
