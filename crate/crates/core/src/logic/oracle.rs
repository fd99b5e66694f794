// SPDX-License-Identifier: Apache-2.0

//! Pure Boolean evaluation of a netlist, used as ground truth.
//!
//! Each external output is resolved backwards through its driver chain as an
//! expression over the input vector. No latches, no events, no ordering.

use std::collections::HashMap;

use super::gate::{eval_gate, GateKind, SignalLevel};
use super::netlist::{InputVector, Netlist, OutputVector, Pin, PinVector, PortRef};
use super::LogicError;

pub fn oracle_eval(net: &Netlist, v: InputVector) -> Result<OutputVector, LogicError> {
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(LogicError::Invalid(violations));
    }
    let driver: HashMap<&PortRef, &PortRef> = net.connectors.iter().map(|c| (&c.to, &c.from)).collect();
    let kinds: HashMap<&str, GateKind> = net.blocks.iter().map(|b| (b.id.as_str(), b.kind)).collect();
    let mut memo: HashMap<&str, SignalLevel> = HashMap::new();

    let mut out = PinVector::default();
    for pin in Pin::all() {
        let sink = PortRef::ExtOut(pin.get());
        let level = value_of(driver[&sink], v, &driver, &kinds, &mut memo);
        out.set(pin, level);
    }
    Ok(out)
}

/// Value presented by a source port. Splitter outputs both equal the splitter input,
/// so one memo entry per block suffices.
fn value_of<'a>(
    source: &'a PortRef,
    v: InputVector,
    driver: &HashMap<&'a PortRef, &'a PortRef>,
    kinds: &HashMap<&'a str, GateKind>,
    memo: &mut HashMap<&'a str, SignalLevel>,
) -> SignalLevel {
    match source {
        PortRef::ExtIn(n) => v.0[*n as usize - 1],
        PortRef::BlockOut { block, .. } => {
            if let Some(&l) = memo.get(block.as_str()) {
                return l;
            }
            let kind = kinds[block.as_str()];
            let args: Vec<SignalLevel> = (0..kind.input_arity())
                .map(|i| {
                    let sink = PortRef::block_in(block, i);
                    value_of(driver[&sink], v, driver, kinds, memo)
                })
                .collect();
            let level = match kind {
                GateKind::Splitter => args[0],
                k => eval_gate(k, &args).expect("arity checked by validation"),
            };
            memo.insert(block.as_str(), level);
            level
        }
        _ => unreachable!("validated netlists only drive from sources"),
    }
}

/// Oracle outputs for all 32 vectors, ascending.
pub fn oracle_table(net: &Netlist) -> Result<Vec<(InputVector, OutputVector)>, LogicError> {
    PinVector::all().map(|v| oracle_eval(net, v).map(|o| (v, o))).collect()
}
