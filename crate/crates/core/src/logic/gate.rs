// SPDX-License-Identifier: Apache-2.0

//! Signal levels, gate kinds and the per-block statechart.
//!
//! A block mirrors the two orthogonal regions of a powered gate: the lower
//! region latches incoming port events into input-state variables, the upper
//! region re-evaluates the guarded `OutputLow`/`OutputHigh` choice and emits a
//! signal out of each output port whose level changed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LogicError;

/// Binary signal level. `Low < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum SignalLevel {
    #[default]
    Low,
    High,
}

impl SignalLevel {
    pub const fn from_bool(b: bool) -> Self {
        if b {
            SignalLevel::High
        } else {
            SignalLevel::Low
        }
    }

    pub const fn is_high(self) -> bool {
        matches!(self, SignalLevel::High)
    }

    /// `0` or `1`.
    pub const fn bit(self) -> u8 {
        self.is_high() as u8
    }

    pub const fn complement(self) -> Self {
        Self::from_bool(!self.is_high())
    }
}

impl From<bool> for SignalLevel {
    fn from(b: bool) -> Self {
        Self::from_bool(b)
    }
}

impl fmt::Display for SignalLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalLevel::Low => "LOW",
            SignalLevel::High => "HIGH",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Nand,
    And,
    Or,
    Not,
    Xor,
    Splitter,
}

impl GateKind {
    pub const ALL: [GateKind; 6] = [
        GateKind::Nand,
        GateKind::And,
        GateKind::Or,
        GateKind::Not,
        GateKind::Xor,
        GateKind::Splitter,
    ];

    pub const fn input_arity(self) -> usize {
        match self {
            GateKind::Not | GateKind::Splitter => 1,
            _ => 2,
        }
    }

    pub const fn output_arity(self) -> usize {
        match self {
            GateKind::Splitter => 2,
            _ => 1,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            GateKind::Nand => "NAND",
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Not => "NOT",
            GateKind::Xor => "XOR",
            GateKind::Splitter => "SPLITTER",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = LogicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| LogicError::UnknownKind(s.to_string()))
    }
}

/// Evaluates the Boolean function of a logic gate.
///
/// NAND is high for every input pair except (high, high). Splitters are not
/// Boolean functions and are rejected here.
pub fn eval_gate(kind: GateKind, inputs: &[SignalLevel]) -> Result<SignalLevel, LogicError> {
    if kind == GateKind::Splitter {
        return Err(LogicError::NotAFunction(kind));
    }
    if inputs.len() != kind.input_arity() {
        return Err(LogicError::InvalidArity {
            kind,
            expected: kind.input_arity(),
            got: inputs.len(),
        });
    }
    let a = inputs[0].is_high();
    let out = match kind {
        GateKind::Not => !a,
        GateKind::Nand => !(a && inputs[1].is_high()),
        GateKind::And => a && inputs[1].is_high(),
        GateKind::Or => a || inputs[1].is_high(),
        GateKind::Xor => a ^ inputs[1].is_high(),
        GateKind::Splitter => unreachable!(),
    };
    Ok(SignalLevel::from_bool(out))
}

/// A signal event travelling into or out of a block port (0-based index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortEvent {
    pub port: usize,
    pub level: SignalLevel,
}

/// One instantiated block with its latched inputs and current outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInstance {
    pub id: String,
    pub kind: GateKind,
    input_state: Vec<SignalLevel>,
    output_state: Vec<SignalLevel>,
}

impl BlockInstance {
    /// Power-on: all latches low and every output in its `OutputLow` default.
    pub fn new(id: impl Into<String>, kind: GateKind) -> Self {
        Self {
            id: id.into(),
            kind,
            input_state: vec![SignalLevel::Low; kind.input_arity()],
            output_state: vec![SignalLevel::Low; kind.output_arity()],
        }
    }

    pub fn inputs(&self) -> &[SignalLevel] {
        &self.input_state
    }

    pub fn outputs(&self) -> &[SignalLevel] {
        &self.output_state
    }

    /// Lower region: store the event level in the addressed input latch.
    /// Returns whether the latch changed.
    pub fn latch(&mut self, event: PortEvent) -> Result<bool, LogicError> {
        let slot = self
            .input_state
            .get_mut(event.port)
            .ok_or_else(|| LogicError::UnknownPort {
                block: self.id.clone(),
                port: format!("in{}", event.port + 1),
            })?;
        let changed = *slot != event.level;
        *slot = event.level;
        Ok(changed)
    }

    /// Upper region: evaluate the guards against the latched inputs and emit
    /// one event per output port whose level changed.
    pub fn evaluate(&mut self) -> Vec<PortEvent> {
        let target: Vec<SignalLevel> = match self.kind {
            GateKind::Splitter => vec![self.input_state[0]; 2],
            kind => vec![eval_gate(kind, &self.input_state).expect("latch arity matches kind")],
        };
        let mut emitted = Vec::new();
        for (port, (cur, new)) in self.output_state.iter_mut().zip(target).enumerate() {
            if *cur != new {
                *cur = new;
                emitted.push(PortEvent { port, level: new });
            }
        }
        emitted
    }

    /// Run one incoming event to completion through both regions.
    pub fn step(&mut self, event: PortEvent) -> Result<Vec<PortEvent>, LogicError> {
        self.latch(event)?;
        Ok(self.evaluate())
    }
}
