// SPDX-License-Identifier: Apache-2.0

//! JSON message schema shared with the browser panel.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use shia_core::logic::{Pin, PinVector, SignalLevel};
use shia_core::model::{HarnessLogEntry, LogKind, Mode, PanelView, SessionStatus};
use shia_core::verify::Verdict;

/// Client to server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientMessage {
    SetPin { pin: Pin, level: SignalLevel },
    SetMode { mode: Mode },
    RunSweep { mode: Mode },
    RequestSnapshot,
}

impl ClientMessage {
    /// Parses and validates one message; the error text goes back to the
    /// sender as-is.
    pub fn parse(text: &str) -> Result<Self, String> {
        let v: Value = serde_json::from_str(text).map_err(|e| format!("not JSON: {e}"))?;
        let ty = v.get("type").and_then(Value::as_str).ok_or("missing `type`")?;
        let mode = || -> Result<Mode, String> {
            v.get("mode").and_then(Value::as_str).ok_or_else(|| "missing `mode`".to_string())?.parse()
        };
        match ty {
            "set_pin" => {
                let pin = v
                    .get("pin")
                    .and_then(Value::as_u64)
                    .and_then(|n| u8::try_from(n).ok())
                    .and_then(Pin::new)
                    .ok_or("`pin` must be an integer 1..5")?;
                let level = match v.get("level") {
                    Some(Value::Number(n)) if n.as_u64() == Some(0) => SignalLevel::Low,
                    Some(Value::Number(n)) if n.as_u64() == Some(1) => SignalLevel::High,
                    Some(Value::Bool(b)) => SignalLevel::from_bool(*b),
                    _ => return Err("`level` must be 0 or 1".into()),
                };
                Ok(ClientMessage::SetPin { pin, level })
            }
            "set_mode" => Ok(ClientMessage::SetMode { mode: mode()? }),
            "run_sweep" => Ok(ClientMessage::RunSweep { mode: mode()? }),
            "request_snapshot" => Ok(ClientMessage::RequestSnapshot),
            other => Err(format!("unknown message type `{other}`")),
        }
    }

    pub fn to_json(&self) -> String {
        let v = match self {
            ClientMessage::SetPin { pin, level } => {
                serde_json::json!({"type": "set_pin", "pin": pin.get(), "level": level.bit()})
            }
            ClientMessage::SetMode { mode } => serde_json::json!({"type": "set_mode", "mode": mode}),
            ClientMessage::RunSweep { mode } => serde_json::json!({"type": "run_sweep", "mode": mode}),
            ClientMessage::RequestSnapshot => serde_json::json!({"type": "request_snapshot"}),
        };
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateMessage {
    pub seq: u64,
    pub mode: Mode,
    pub inputs: [u8; 5],
    pub outputs: [u8; 5],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internals: Option<BTreeMap<String, u8>>,
    /// `local`, `awaiting_board`, `live` or `faulted`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status_detail: Option<String>,
    pub reply_timeouts: u64,
    pub log: Vec<String>,
}

fn bits(v: PinVector) -> [u8; 5] {
    v.0.map(|l| l.bit())
}

impl StateMessage {
    pub fn from_view(seq: u64, view: &PanelView, log: Vec<String>) -> Self {
        let (status, status_detail) = match &view.session {
            SessionStatus::Local => ("local", None),
            SessionStatus::AwaitingBoard => ("awaiting_board", None),
            SessionStatus::Live => ("live", None),
            SessionStatus::Faulted(d) => ("faulted", Some(d.clone())),
        };
        Self {
            seq,
            mode: view.mode,
            inputs: bits(view.inputs),
            outputs: bits(view.outputs),
            internals: view.internals.as_ref().map(|m| m.iter().map(|(k, l)| (k.clone(), l.bit())).collect()),
            status: status.into(),
            status_detail,
            reply_timeouts: view.reply_timeouts,
            log,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub mode: Mode,
    /// Against a fresh local-model sweep.
    pub verdict: Verdict,
    pub csv: String,
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State(StateMessage),
    Error { detail: String },
    SweepResult(SweepSummary),
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("message is serialisable")
    }
}

pub(crate) fn render_log(e: &HarnessLogEntry) -> String {
    let what = match &e.kind {
        LogKind::Mode { mode } => format!("mode {mode}"),
        LogKind::Tx { frame } => format!("TX {frame}"),
        LogKind::Read => "read".into(),
        LogKind::Rx { frame } => format!("RX {frame}"),
        LogKind::ProtocolError { detail } => format!("protocol error: {detail}"),
        LogKind::ReplyTimeout => "reply timeout".into(),
        LogKind::Fault { detail } => format!("fault: {detail}"),
    };
    format!("{} {what}", e.t_ms)
}
