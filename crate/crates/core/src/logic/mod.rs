// SPDX-License-Identifier: Apache-2.0

//! Executable model of the chassis: gate statecharts, netlists, the
//! event-driven simulator and the pure Boolean oracle.

mod file;
mod gate;
mod netlist;
mod oracle;
pub mod random;
mod sim;

pub use file::{emit_netlist, load_netlist, load_netlist_file, reference_netlist, REFERENCE_NETLIST};
pub use gate::{eval_gate, BlockInstance, GateKind, PortEvent, SignalLevel};
pub use netlist::{
    validate_netlist, BlockDecl, Connector, InputVector, Netlist, OutputVector, Pin, PinVector, PortRef, Violation,
    PIN_COUNT,
};
pub use oracle::{oracle_eval, oracle_table};
pub use sim::{settle, SettleSnapshot, Simulator, EVENT_CAP_FACTOR};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogicError {
    #[error("unknown gate kind `{0}`")]
    UnknownKind(String),
    #[error("{0} is not a Boolean function")]
    NotAFunction(GateKind),
    #[error("{kind} takes {expected} input(s), got {got}")]
    InvalidArity { kind: GateKind, expected: usize, got: usize },
    #[error("block `{block}` has no port `{port}`")]
    UnknownPort { block: String, port: String },
    #[error("pin {0} outside 1..=5")]
    InvalidPin(u8),
    #[error("malformed port name `{0}`")]
    BadPortName(String),
    #[error("invalid netlist: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("netlist did not quiesce within {cap} events")]
    NonQuiescent { cap: usize },
    #[error("netlist parse error: {0}")]
    Parse(String),
    #[error("reading netlist: {0}")]
    Io(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
