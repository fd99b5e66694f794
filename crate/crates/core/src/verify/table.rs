// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::logic::{oracle_table, LogicError, Netlist, PinVector, PIN_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Mom,
    Mrm,
    Oracle,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Mom => "mom",
            Provenance::Mrm => "mrm",
            Provenance::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub inputs: PinVector,
    pub outputs: PinVector,
    /// No trustworthy reading was obtained for this row.
    pub failed: bool,
}

/// All 32 input combinations, ascending, with the observed outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTable {
    pub provenance: Provenance,
    pub netlist: String,
    /// Clock time at which the last row was captured.
    pub captured_at_ms: u64,
    rows: Vec<TruthRow>,
}

impl TruthTable {
    pub fn new(provenance: Provenance, netlist: &str, captured_at_ms: u64, rows: Vec<TruthRow>) -> Result<Self, VerifyError> {
        if rows.len() != PinVector::COMBINATIONS {
            return Err(VerifyError::RowCount(rows.len()));
        }
        if let Some((i, _)) = rows.iter().enumerate().find(|(i, r)| r.inputs.index() != *i) {
            return Err(VerifyError::RowOrder(i));
        }
        Ok(Self { provenance, netlist: netlist.to_string(), captured_at_ms, rows })
    }

    pub fn from_oracle(net: &Netlist) -> Result<Self, LogicError> {
        let rows = oracle_table(net)?
            .into_iter()
            .map(|(inputs, outputs)| TruthRow { inputs, outputs, failed: false })
            .collect();
        Ok(Self::new(Provenance::Oracle, &net.name, 0, rows).expect("oracle covers all vectors in order"))
    }

    pub fn rows(&self) -> &[TruthRow] {
        &self.rows
    }

    pub fn row(&self, v: PinVector) -> &TruthRow {
        &self.rows[v.index()]
    }

    pub fn is_complete(&self) -> bool {
        self.rows.iter().all(|r| !r.failed)
    }

    pub fn failed_rows(&self) -> Vec<PinVector> {
        self.rows.iter().filter(|r| r.failed).map(|r| r.inputs).collect()
    }

    /// Same outputs on every row, ignoring provenance and timing.
    pub fn same_outputs(&self, other: &TruthTable) -> bool {
        self.rows.iter().zip(&other.rows).all(|(a, b)| a.outputs == b.outputs && a.failed == b.failed)
    }

    /// `in1..in5,out1..out5` header, then 32 rows of `0`/`1`. Outputs of a
    /// failed row are written as `x`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let head: Vec<String> = (1..=PIN_COUNT)
            .map(|i| format!("in{i}"))
            .chain((1..=PIN_COUNT).map(|i| format!("out{i}")))
            .collect();
        s.push_str(&head.join(","));
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r
                .inputs
                .0
                .iter()
                .map(|l| l.bit().to_string())
                .chain(r.outputs.0.iter().map(|l| if r.failed { "x".into() } else { l.bit().to_string() }))
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}
