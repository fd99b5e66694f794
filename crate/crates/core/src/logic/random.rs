// SPDX-License-Identifier: Apache-2.0

//! Random valid netlists for equivalence testing.

use rand::seq::SliceRandom;
use rand::Rng;

use super::gate::GateKind;
use super::netlist::{BlockDecl, Connector, Netlist, PortRef, PIN_COUNT};

/// Generates a valid, acyclic 5-in/5-out netlist with between 1 and
/// `max_blocks` blocks. Fan-out always goes through splitters.
pub fn random_netlist<R: Rng + ?Sized>(rng: &mut R, max_blocks: usize) -> Netlist {
    assert!(max_blocks >= 1);
    loop {
        if let Some(net) = attempt(rng, max_blocks) {
            debug_assert!(net.validate().is_empty(), "{:?}", net.validate());
            return net;
        }
    }
}

fn attempt<R: Rng + ?Sized>(rng: &mut R, max_blocks: usize) -> Option<Netlist> {
    const KINDS: [GateKind; 6] = GateKind::ALL;
    let target = rng.random_range(1..=max_blocks);

    // Undriven source ports, ext inputs first, block outputs appended as created.
    let mut free: Vec<PortRef> = (1..=PIN_COUNT as u8).map(PortRef::ExtIn).collect();
    let mut blocks = Vec::new();
    let mut connectors = Vec::new();

    for i in 0..target {
        let mut kind = KINDS[rng.random_range(0..KINDS.len())];
        if kind.input_arity() > free.len() {
            kind = GateKind::Splitter;
        }
        let id = format!("b{i}");
        for port in 0..kind.input_arity() {
            let src = free.swap_remove(rng.random_range(0..free.len()));
            connectors.push(Connector::new(src, PortRef::block_in(&id, port)));
        }
        free.extend((0..kind.output_arity()).map(|p| PortRef::block_out(&id, p)));
        blocks.push(BlockDecl { id, kind });
    }

    if free.len() < PIN_COUNT {
        return None;
    }
    // Prefer block outputs so the outputs exercise the logic.
    let (mut chosen, mut rest): (Vec<PortRef>, Vec<PortRef>) = free.into_iter().partition(PortRef::is_source_block);
    chosen.shuffle(rng);
    rest.shuffle(rng);
    chosen.extend(rest);
    chosen.truncate(PIN_COUNT);
    chosen.shuffle(rng);
    for (slot, src) in chosen.into_iter().enumerate() {
        connectors.push(Connector::new(src, PortRef::ExtOut(slot as u8 + 1)));
    }

    let labels = |p: &str| (1..=PIN_COUNT).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    Some(Netlist {
        name: format!("random-{}", blocks.len()),
        inputs: labels("in"),
        outputs: labels("out"),
        blocks,
        connectors,
    })
}

impl PortRef {
    fn is_source_block(&self) -> bool {
        matches!(self, PortRef::BlockOut { .. })
    }
}
