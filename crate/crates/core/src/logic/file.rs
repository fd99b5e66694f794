// SPDX-License-Identifier: Apache-2.0

//! TOML netlist documents.
//!
//! ```toml
//! name = "example"
//! inputs = ["A", "B", "C", "D", "E"]
//! outputs = ["Y1", "Y2", "Y3", "Y4", "Y5"]
//! blocks = [{ id = "g1", kind = "NAND" }]
//! connectors = [{ from = "ext.in1", to = "g1.in1" }, ...]
//! ```

use std::path::Path;

use super::netlist::Netlist;
use super::LogicError;

/// Source of the shipped reference chassis.
pub const REFERENCE_NETLIST: &str = include_str!("../../netlists/reference.toml");

/// Parses and validates a netlist document.
pub fn load_netlist(document: &str) -> Result<Netlist, LogicError> {
    let net: Netlist = toml::from_str(document).map_err(|e| LogicError::Parse(e.to_string()))?;
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(LogicError::Invalid(violations));
    }
    Ok(net)
}

pub fn load_netlist_file(path: impl AsRef<Path>) -> Result<Netlist, LogicError> {
    load_netlist(&std::fs::read_to_string(path)?)
}

pub fn emit_netlist(net: &Netlist) -> String {
    toml::to_string(net).expect("netlist serialises")
}

pub fn reference_netlist() -> Netlist {
    load_netlist(REFERENCE_NETLIST).expect("shipped reference netlist is valid")
}
