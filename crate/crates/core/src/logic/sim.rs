// SPDX-License-Identifier: Apache-2.0

//! Event-driven execution of a netlist built from block statecharts.
//!
//! Signal events are queued per destination block and drained in topological
//! rank order, FIFO among blocks of equal rank. A block drains every event
//! addressed to it (port-index order) into its latches before its output
//! region is evaluated once. Each block is therefore evaluated at most once
//! per input batch, and each connector carries at most one event.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::gate::{BlockInstance, PortEvent, SignalLevel};
use super::netlist::{InputVector, Netlist, OutputVector, Pin, PinVector, PortRef, PIN_COUNT};
use super::LogicError;

/// Multiplier on the connector count giving the event budget of one batch.
pub const EVENT_CAP_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy)]
enum Dest {
    Block { block: usize, port: usize },
    ExtOut(usize),
}

/// Result of driving the chassis to quiescence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettleSnapshot {
    pub outputs: OutputVector,
    /// Level of every port, keyed by its text form (`g1.in1`, `ext.out3`, ...).
    pub nodes: BTreeMap<String, SignalLevel>,
    /// Connector deliveries in the last batch.
    pub events: usize,
}

/// Stateful executor; keeps latches between batches so single-pin changes
/// propagate incrementally.
#[derive(Debug, Clone)]
pub struct Simulator {
    blocks: Vec<BlockInstance>,
    rank: Vec<usize>,
    ext_in_dest: [Option<Dest>; PIN_COUNT],
    block_out_dest: Vec<Vec<Option<Dest>>>,
    ext_in: PinVector,
    ext_out: PinVector,
    event_cap: usize,
    last_events: usize,
}

impl Simulator {
    /// Powers the chassis on: every latch low, then one settle pass.
    pub fn new(net: &Netlist) -> Result<Self, LogicError> {
        let violations = net.validate();
        if !violations.is_empty() {
            return Err(LogicError::Invalid(violations));
        }
        let order = net.topological_order()?;
        let mut rank = vec![0; net.blocks.len()];
        for (r, &b) in order.iter().enumerate() {
            rank[b] = r;
        }
        let index: HashMap<&str, usize> = net.blocks.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();

        let mut ext_in_dest = [None; PIN_COUNT];
        let mut block_out_dest: Vec<Vec<Option<Dest>>> =
            net.blocks.iter().map(|b| vec![None; b.kind.output_arity()]).collect();
        for c in &net.connectors {
            let dest = match &c.to {
                PortRef::BlockIn { block, index: port } => Dest::Block { block: index[block.as_str()], port: *port },
                PortRef::ExtOut(n) => Dest::ExtOut(*n as usize - 1),
                _ => unreachable!("validated"),
            };
            match &c.from {
                PortRef::ExtIn(n) => ext_in_dest[*n as usize - 1] = Some(dest),
                PortRef::BlockOut { block, index: port } => block_out_dest[index[block.as_str()]][*port] = Some(dest),
                _ => unreachable!("validated"),
            }
        }

        let mut sim = Simulator {
            blocks: net.blocks.iter().map(|b| BlockInstance::new(&b.id, b.kind)).collect(),
            rank,
            ext_in_dest,
            block_out_dest,
            ext_in: PinVector::default(),
            ext_out: PinVector::default(),
            event_cap: EVENT_CAP_FACTOR * net.connectors.len().max(1),
            last_events: 0,
        };
        let all: Vec<usize> = (0..sim.blocks.len()).collect();
        sim.run_batch(&[], &all)?;
        Ok(sim)
    }

    /// Overrides the event budget of one batch.
    pub fn with_event_cap(mut self, cap: usize) -> Self {
        self.event_cap = cap;
        self
    }

    pub fn inputs(&self) -> PinVector {
        self.ext_in
    }

    pub fn outputs(&self) -> PinVector {
        self.ext_out
    }

    /// Drives a single external input pin and propagates to quiescence.
    pub fn set_input(&mut self, pin: Pin, level: SignalLevel) -> Result<OutputVector, LogicError> {
        if self.ext_in.get(pin) != level {
            self.ext_in.set(pin, level);
            self.run_batch(&[pin], &[])?;
        } else {
            self.last_events = 0;
        }
        Ok(self.ext_out)
    }

    /// Drives all external inputs to `v` as one batch and propagates to quiescence.
    pub fn apply(&mut self, v: InputVector) -> Result<SettleSnapshot, LogicError> {
        let changed: Vec<Pin> = Pin::all().filter(|&p| self.ext_in.get(p) != v.get(p)).collect();
        self.ext_in = v;
        self.run_batch(&changed, &[])?;
        Ok(self.snapshot())
    }

    pub fn snapshot(&self) -> SettleSnapshot {
        let mut nodes = BTreeMap::new();
        for p in Pin::all() {
            nodes.insert(PortRef::ExtIn(p.get()).to_string(), self.ext_in.get(p));
            nodes.insert(PortRef::ExtOut(p.get()).to_string(), self.ext_out.get(p));
        }
        for b in &self.blocks {
            for (i, l) in b.inputs().iter().enumerate() {
                nodes.insert(PortRef::block_in(&b.id, i).to_string(), *l);
            }
            for (i, l) in b.outputs().iter().enumerate() {
                nodes.insert(PortRef::block_out(&b.id, i).to_string(), *l);
            }
        }
        SettleSnapshot { outputs: self.ext_out, nodes, events: self.last_events }
    }

    fn run_batch(&mut self, changed_pins: &[Pin], activate: &[usize]) -> Result<(), LogicError> {
        let mut pending: BTreeMap<(usize, usize), Vec<PortEvent>> = BTreeMap::new();
        for &b in activate {
            pending.entry((self.rank[b], b)).or_default();
        }
        let mut events = 0usize;
        for &pin in changed_pins {
            if let Some(dest) = self.ext_in_dest[pin.slot()] {
                self.deliver(dest, self.ext_in.get(pin), &mut pending, &mut events)?;
            }
        }
        while let Some(((_, b), mut evs)) = pending.pop_first() {
            evs.sort_by_key(|e| e.port);
            for e in evs {
                self.blocks[b].latch(e)?;
            }
            for e in self.blocks[b].evaluate() {
                if let Some(dest) = self.block_out_dest[b][e.port] {
                    self.deliver(dest, e.level, &mut pending, &mut events)?;
                }
            }
        }
        self.last_events = events;
        Ok(())
    }

    fn deliver(
        &mut self,
        dest: Dest,
        level: SignalLevel,
        pending: &mut BTreeMap<(usize, usize), Vec<PortEvent>>,
        events: &mut usize,
    ) -> Result<(), LogicError> {
        *events += 1;
        if *events > self.event_cap {
            return Err(LogicError::NonQuiescent { cap: self.event_cap });
        }
        match dest {
            Dest::ExtOut(slot) => self.ext_out.0[slot] = level,
            Dest::Block { block, port } => {
                pending.entry((self.rank[block], block)).or_default().push(PortEvent { port, level })
            }
        }
        Ok(())
    }
}

/// Powers the netlist on, drives the inputs to `v` and runs to quiescence.
pub fn settle(net: &Netlist, v: InputVector) -> Result<SettleSnapshot, LogicError> {
    Simulator::new(net)?.apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::gate::GateKind;
    use crate::logic::netlist::{BlockDecl, Connector};
    use SignalLevel::{High, Low};

    fn c(from: &str, to: &str) -> Connector {
        Connector::new(from.parse().unwrap(), to.parse().unwrap())
    }

    fn labels() -> Vec<String> {
        (1..=5).map(|i| format!("p{i}")).collect()
    }

    /// NAND on inputs 1,2 driving output 1; inputs 3..5 pass through to outputs 2..4,
    /// output 5 tied to the complement of input 3 via a splitter.
    fn single_nand() -> Netlist {
        Netlist {
            name: "nand".into(),
            inputs: labels(),
            outputs: labels(),
            blocks: vec![
                BlockDecl { id: "g".into(), kind: GateKind::Nand },
                BlockDecl { id: "s".into(), kind: GateKind::Splitter },
                BlockDecl { id: "n".into(), kind: GateKind::Not },
            ],
            connectors: vec![
                c("ext.in1", "g.in1"),
                c("ext.in2", "g.in2"),
                c("g.out1", "ext.out1"),
                c("ext.in3", "s.in1"),
                c("s.out1", "ext.out2"),
                c("s.out2", "n.in1"),
                c("n.out1", "ext.out5"),
                c("ext.in4", "ext.out3"),
                c("ext.in5", "ext.out4"),
            ],
        }
    }

    #[test]
    fn nand_output_low_only_when_both_high() {
        let net = single_nand();
        let hh = settle(&net, PinVector([High, High, Low, Low, Low])).unwrap();
        assert_eq!(hh.outputs.0[0], Low);
        let lh = settle(&net, PinVector([Low, High, Low, Low, Low])).unwrap();
        assert_eq!(lh.outputs.0[0], High);
    }

    #[test]
    fn power_on_propagates_constant_highs() {
        let sim = Simulator::new(&single_nand()).unwrap();
        // NAND(low, low) = high, NOT(low) = high
        assert_eq!(sim.outputs(), PinVector([High, Low, Low, Low, High]));
        assert_eq!(sim.snapshot().nodes["n.out1"], High);
    }

    #[test]
    fn repeated_settle_is_identical() {
        let net = single_nand();
        let v = PinVector([High, Low, High, Low, High]);
        assert_eq!(settle(&net, v).unwrap(), settle(&net, v).unwrap());
    }

    #[test]
    fn unchanged_input_produces_no_events() {
        let mut sim = Simulator::new(&single_nand()).unwrap();
        let p = Pin::new(1).unwrap();
        sim.set_input(p, High).unwrap();
        assert!(sim.snapshot().events > 0);
        sim.set_input(p, High).unwrap();
        assert_eq!(sim.snapshot().events, 0);
    }

    #[test]
    fn reconvergent_paths_settle_glitch_free() {
        // in1 splits into NAND.in1 and NOT -> NAND.in2; output is constantly high.
        let net = Netlist {
            name: "reconverge".into(),
            inputs: labels(),
            outputs: labels(),
            blocks: vec![
                BlockDecl { id: "s".into(), kind: GateKind::Splitter },
                BlockDecl { id: "n".into(), kind: GateKind::Not },
                BlockDecl { id: "g".into(), kind: GateKind::Nand },
            ],
            connectors: vec![
                c("ext.in1", "s.in1"),
                c("s.out1", "g.in1"),
                c("s.out2", "n.in1"),
                c("n.out1", "g.in2"),
                c("g.out1", "ext.out1"),
                c("ext.in2", "ext.out2"),
                c("ext.in3", "ext.out3"),
                c("ext.in4", "ext.out4"),
                c("ext.in5", "ext.out5"),
            ],
        };
        let mut sim = Simulator::new(&net).unwrap();
        for level in [High, Low, High] {
            sim.set_input(Pin::new(1).unwrap(), level).unwrap();
            let snap = sim.snapshot();
            assert_eq!(snap.outputs.0[0], High);
            assert!(snap.events <= net.connectors.len());
            // The NAND output never changes, so its connector stays silent.
            assert_eq!(snap.events, 4);
        }
    }

    #[test]
    fn event_cap_reports_non_quiescence() {
        let sim = Simulator::new(&single_nand()).unwrap().with_event_cap(1);
        let mut sim = sim;
        let err = sim.apply(PinVector([High, High, High, High, High])).unwrap_err();
        assert!(matches!(err, LogicError::NonQuiescent { cap: 1 }));
    }

    #[test]
    fn invalid_netlist_is_refused() {
        let mut net = single_nand();
        net.connectors.pop();
        assert!(matches!(Simulator::new(&net), Err(LogicError::Invalid(_))));
    }
}
