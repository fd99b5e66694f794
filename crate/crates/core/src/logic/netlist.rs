// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::gate::{GateKind, SignalLevel};
use super::LogicError;

/// Number of external input pins and of external output pins on the chassis.
pub const PIN_COUNT: usize = 5;

/// Chassis pin number, 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Pin(u8);

impl Pin {
    pub fn new(n: u8) -> Option<Pin> {
        (1..=PIN_COUNT as u8).contains(&n).then_some(Pin(n))
    }

    pub const fn get(self) -> u8 {
        self.0
    }

    /// 0-based slot for indexing pin arrays.
    pub const fn slot(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = Pin> {
        (1..=PIN_COUNT as u8).map(Pin)
    }
}

impl TryFrom<u8> for Pin {
    type Error = LogicError;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        Pin::new(n).ok_or(LogicError::InvalidPin(n))
    }
}

impl From<Pin> for u8 {
    fn from(p: Pin) -> u8 {
        p.0
    }
}

impl fmt::Display for Pin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Levels of the five chassis pins, pin 1 first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct PinVector(pub [SignalLevel; PIN_COUNT]);

pub type InputVector = PinVector;
pub type OutputVector = PinVector;

impl PinVector {
    pub const COMBINATIONS: usize = 1 << PIN_COUNT;

    /// Decodes a row index in `0..32`; pin 1 is the most significant bit.
    pub fn from_index(index: usize) -> PinVector {
        assert!(index < Self::COMBINATIONS, "vector index {index} out of range");
        let mut bits = [SignalLevel::Low; PIN_COUNT];
        for (slot, bit) in bits.iter_mut().enumerate() {
            *bit = SignalLevel::from_bool(index >> (PIN_COUNT - 1 - slot) & 1 == 1);
        }
        PinVector(bits)
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, l| acc << 1 | l.bit() as usize)
    }

    /// All 32 vectors in ascending binary order.
    pub fn all() -> impl Iterator<Item = PinVector> {
        (0..Self::COMBINATIONS).map(PinVector::from_index)
    }

    pub fn get(&self, pin: Pin) -> SignalLevel {
        self.0[pin.slot()]
    }

    pub fn set(&mut self, pin: Pin, level: SignalLevel) {
        self.0[pin.slot()] = level;
    }

    pub fn bits(&self) -> String {
        self.0.iter().map(|l| char::from(b'0' + l.bit())).collect()
    }
}

impl fmt::Display for PinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bits())
    }
}

/// A port on the chassis boundary or on a block.
///
/// Text form: `ext.in<N>`, `ext.out<N>`, `<block-id>.<in1|in2|out1|out2>`.
/// External pin numbers are kept raw so that out-of-range pins surface as
/// validation violations rather than parse failures.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PortRef {
    ExtIn(u8),
    ExtOut(u8),
    BlockIn { block: String, index: usize },
    BlockOut { block: String, index: usize },
}

impl PortRef {
    pub fn block_in(block: &str, index: usize) -> PortRef {
        PortRef::BlockIn { block: block.to_string(), index }
    }

    pub fn block_out(block: &str, index: usize) -> PortRef {
        PortRef::BlockOut { block: block.to_string(), index }
    }

    /// Drives a connector (block output or external input).
    pub fn is_source(&self) -> bool {
        matches!(self, PortRef::ExtIn(_) | PortRef::BlockOut { .. })
    }

    pub fn block(&self) -> Option<&str> {
        match self {
            PortRef::BlockIn { block, .. } | PortRef::BlockOut { block, .. } => Some(block),
            _ => None,
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortRef::ExtIn(n) => write!(f, "ext.in{n}"),
            PortRef::ExtOut(n) => write!(f, "ext.out{n}"),
            PortRef::BlockIn { block, index } => write!(f, "{block}.in{}", index + 1),
            PortRef::BlockOut { block, index } => write!(f, "{block}.out{}", index + 1),
        }
    }
}

impl FromStr for PortRef {
    type Err = LogicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LogicError::BadPortName(s.to_string());
        let (owner, port) = s.rsplit_once('.').ok_or_else(bad)?;
        if owner.is_empty() {
            return Err(bad());
        }
        if owner == "ext" {
            let (pfx, num) = if let Some(n) = port.strip_prefix("in") {
                (true, n)
            } else if let Some(n) = port.strip_prefix("out") {
                (false, n)
            } else {
                return Err(bad());
            };
            let n: u8 = num.parse().map_err(|_| bad())?;
            return Ok(if pfx { PortRef::ExtIn(n) } else { PortRef::ExtOut(n) });
        }
        let block = owner.to_string();
        match port {
            "in1" => Ok(PortRef::BlockIn { block, index: 0 }),
            "in2" => Ok(PortRef::BlockIn { block, index: 1 }),
            "out1" => Ok(PortRef::BlockOut { block, index: 0 }),
            "out2" => Ok(PortRef::BlockOut { block, index: 1 }),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for PortRef {
    type Error = LogicError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PortRef> for String {
    fn from(p: PortRef) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDecl {
    pub id: String,
    pub kind: GateKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Connector {
    pub from: PortRef,
    pub to: PortRef,
}

impl Connector {
    pub fn new(from: PortRef, to: PortRef) -> Self {
        Self { from, to }
    }
}

impl fmt::Display for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.from, self.to)
    }
}

/// The chassis model: blocks, connectors and the external pins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub name: String,
    /// Labels of the external input pins, pin 1 first.
    pub inputs: Vec<String>,
    /// Labels of the external output pins, pin 1 first.
    pub outputs: Vec<String>,
    #[serde(default)]
    pub blocks: Vec<BlockDecl>,
    #[serde(default)]
    pub connectors: Vec<Connector>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InputCount(usize),
    OutputCount(usize),
    DuplicateBlock(String),
    ReservedBlockId(String),
    UnknownBlock { port: PortRef },
    NoSuchPort { port: PortRef, kind: GateKind },
    PinOutOfRange { port: PortRef },
    /// Connector runs from a sink or into a source.
    WrongDirection { connector: Connector },
    Undriven { port: PortRef },
    MultipleDrivers { port: PortRef, drivers: usize },
    /// A source port wired to more than one destination; fan-out needs a splitter.
    FanOut { port: PortRef, destinations: usize },
    Cycle { blocks: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InputCount(n) => write!(f, "expected {PIN_COUNT} external inputs, found {n}"),
            Violation::OutputCount(n) => write!(f, "expected {PIN_COUNT} external outputs, found {n}"),
            Violation::DuplicateBlock(id) => write!(f, "duplicate block id `{id}`"),
            Violation::ReservedBlockId(id) => write!(f, "block id `{id}` is reserved"),
            Violation::UnknownBlock { port } => write!(f, "{port}: no such block"),
            Violation::NoSuchPort { port, kind } => write!(f, "{port}: {kind} has no such port"),
            Violation::PinOutOfRange { port } => write!(f, "{port}: external pin out of range 1..={PIN_COUNT}"),
            Violation::WrongDirection { connector } => {
                write!(f, "{connector}: connectors must run from an output/ext.in to an input/ext.out")
            }
            Violation::Undriven { port } => write!(f, "{port}: not driven"),
            Violation::MultipleDrivers { port, drivers } => write!(f, "{port}: driven by {drivers} connectors"),
            Violation::FanOut { port, destinations } => {
                write!(f, "{port}: drives {destinations} destinations (use a splitter)")
            }
            Violation::Cycle { blocks } => write!(f, "cycle through {}", blocks.join(" -> ")),
        }
    }
}

impl Netlist {
    pub fn block(&self, id: &str) -> Option<&BlockDecl> {
        self.blocks.iter().find(|b| b.id == id)
    }

    /// Checks every structural invariant. An empty list means the netlist is
    /// usable by the simulator and the oracle.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.inputs.len() != PIN_COUNT {
            out.push(Violation::InputCount(self.inputs.len()));
        }
        if self.outputs.len() != PIN_COUNT {
            out.push(Violation::OutputCount(self.outputs.len()));
        }

        let mut kinds: HashMap<&str, GateKind> = HashMap::new();
        for b in &self.blocks {
            if b.id == "ext" {
                out.push(Violation::ReservedBlockId(b.id.clone()));
            } else if kinds.insert(&b.id, b.kind).is_some() {
                out.push(Violation::DuplicateBlock(b.id.clone()));
            }
        }

        // A port reference is well-formed when its block exists and has the port.
        let check_port = |p: &PortRef, out: &mut Vec<Violation>| -> bool {
            match p {
                PortRef::ExtIn(n) | PortRef::ExtOut(n) => {
                    if Pin::new(*n).is_none() {
                        out.push(Violation::PinOutOfRange { port: p.clone() });
                        return false;
                    }
                    true
                }
                PortRef::BlockIn { block, index } | PortRef::BlockOut { block, index } => {
                    let Some(&kind) = kinds.get(block.as_str()) else {
                        out.push(Violation::UnknownBlock { port: p.clone() });
                        return false;
                    };
                    let arity = if p.is_source() { kind.output_arity() } else { kind.input_arity() };
                    if *index >= arity {
                        out.push(Violation::NoSuchPort { port: p.clone(), kind });
                        return false;
                    }
                    true
                }
            }
        };

        let mut drivers: BTreeMap<PortRef, usize> = BTreeMap::new();
        let mut fanout: BTreeMap<PortRef, usize> = BTreeMap::new();
        let mut edges: Vec<(&str, &str)> = Vec::new();
        for c in &self.connectors {
            let from_ok = check_port(&c.from, &mut out);
            let to_ok = check_port(&c.to, &mut out);
            if !c.from.is_source() || c.to.is_source() {
                out.push(Violation::WrongDirection { connector: c.clone() });
                continue;
            }
            if from_ok {
                *fanout.entry(c.from.clone()).or_default() += 1;
            }
            if to_ok {
                *drivers.entry(c.to.clone()).or_default() += 1;
            }
            if let (true, true, Some(a), Some(b)) = (from_ok, to_ok, c.from.block(), c.to.block()) {
                edges.push((a, b));
            }
        }

        let mut sinks: Vec<PortRef> = Vec::new();
        for b in &self.blocks {
            if kinds.get(b.id.as_str()) == Some(&b.kind) {
                sinks.extend((0..b.kind.input_arity()).map(|i| PortRef::block_in(&b.id, i)));
            }
        }
        sinks.extend(Pin::all().map(|p| PortRef::ExtOut(p.get())));
        sinks.sort();
        sinks.dedup();
        for port in sinks {
            match drivers.get(&port).copied().unwrap_or(0) {
                0 => out.push(Violation::Undriven { port }),
                1 => {}
                n => out.push(Violation::MultipleDrivers { port, drivers: n }),
            }
        }
        for (port, n) in fanout {
            if n > 1 {
                out.push(Violation::FanOut { port, destinations: n });
            }
        }

        out.extend(find_cycles(&self.blocks, &edges).into_iter().map(|blocks| Violation::Cycle { blocks }));
        out
    }

    /// Blocks ordered so that every block comes after all blocks feeding it.
    pub(crate) fn topological_order(&self) -> Result<Vec<usize>, LogicError> {
        let index: HashMap<&str, usize> = self.blocks.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
        let mut indegree = vec![0usize; self.blocks.len()];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); self.blocks.len()];
        for c in &self.connectors {
            if let (Some(a), Some(b)) = (c.from.block(), c.to.block()) {
                let (a, b) = (index[a], index[b]);
                succ[a].push(b);
                indegree[b] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..self.blocks.len()).filter(|&i| indegree[i] == 0).rev().collect();
        let mut order = Vec::with_capacity(self.blocks.len());
        while let Some(i) = ready.pop() {
            order.push(i);
            for &j in &succ[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
        if order.len() != self.blocks.len() {
            return Err(LogicError::Invalid(vec![Violation::Cycle { blocks: vec![] }]));
        }
        Ok(order)
    }
}

/// Depth-first search for back edges; reports each cycle as a block path that
/// starts and ends on the same block.
fn find_cycles(blocks: &[BlockDecl], edges: &[(&str, &str)]) -> Vec<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }

    let ids: Vec<&str> = blocks.iter().map(|b| b.id.as_str()).collect();
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    for (a, b) in edges {
        if let (Some(&a), Some(&b)) = (index.get(a), index.get(b)) {
            succ[a].push(b);
        }
    }

    let mut mark = vec![Mark::New; ids.len()];
    let mut cycles = Vec::new();
    for root in 0..ids.len() {
        if mark[root] != Mark::New {
            continue;
        }
        // (node, next successor to visit)
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&s) = succ[node].get(*next) {
                *next += 1;
                match mark[s] {
                    Mark::New => {
                        mark[s] = Mark::Active;
                        stack.push((s, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|&(n, _)| n == s).unwrap();
                        let mut path: Vec<String> = stack[start..].iter().map(|&(n, _)| ids[n].to_string()).collect();
                        path.push(ids[s].to_string());
                        cycles.push(path);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    cycles
}

pub fn validate_netlist(net: &Netlist) -> Vec<Violation> {
    net.validate()
}
