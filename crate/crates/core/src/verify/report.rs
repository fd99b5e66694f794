// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::kmap::{build_kmaps, diff_kmaps, DiffMap, KarnaughMap};
use super::table::{Provenance, TruthTable};
use super::VerifyError;
use crate::logic::{Pin, PinVector};
use crate::transport::ClockMode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// Every difference map is zero.
    Match,
    Mismatch { cells: usize },
    /// At least one table has failed rows; no maps could be built.
    Incomplete { failed_rows: usize },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Match)
    }
}

/// Cell-wise comparison of two truth tables, `left - right`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub left: Provenance,
    pub right: Provenance,
    pub diffs: Vec<DiffMap>,
    pub verdict: Verdict,
}

pub fn compare(left: &TruthTable, right: &TruthTable) -> Result<Comparison, VerifyError> {
    let failed_rows = left.failed_rows().len() + right.failed_rows().len();
    if failed_rows > 0 {
        let verdict = Verdict::Incomplete { failed_rows };
        return Ok(Comparison { left: left.provenance, right: right.provenance, diffs: Vec::new(), verdict });
    }
    let (a, b) = (build_kmaps(left)?, build_kmaps(right)?);
    let diffs = a.iter().zip(&b).map(|(x, y)| diff_kmaps(x, y)).collect::<Result<Vec<_>, _>>()?;
    let cells: usize = diffs.iter().map(|d| d.nonzero_vectors().len()).sum();
    let verdict = if cells == 0 { Verdict::Match } else { Verdict::Mismatch { cells } };
    Ok(Comparison { left: left.provenance, right: right.provenance, diffs, verdict })
}

impl Comparison {
    /// Differing input vectors per output pin; pins without differences are left out.
    pub fn nonzero_cells(&self) -> BTreeMap<Pin, Vec<PinVector>> {
        self.diffs
            .iter()
            .filter(|d| !d.is_zero)
            .map(|d| (d.output_pin, d.nonzero_vectors()))
            .collect()
    }

    pub fn render(&self) -> String {
        let mut s = format!("{} - {}\n", self.left, self.right);
        for d in &self.diffs {
            s.push_str(&d.render());
        }
        s.push_str(&format!("overall: {}\n", serde_json::to_string(&self.verdict).unwrap_or_default()));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub clock: ClockMode,
    pub delay_ms: u64,
    pub board_poll_ms: u64,
    pub latency_ms: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub netlist: String,
    pub tables: Vec<TruthTable>,
    pub comparison: Option<Comparison>,
    pub timing: Option<Timing>,
}

#[derive(Serialize)]
struct ReportIndex<'a> {
    netlist: &'a str,
    tables: Vec<TableEntry<'a>>,
    verdict: Option<&'a Verdict>,
    timing: &'a Option<Timing>,
    artifacts: Vec<String>,
}

#[derive(Serialize)]
struct TableEntry<'a> {
    provenance: Provenance,
    captured_at_ms: u64,
    complete: bool,
    csv: &'a str,
}

/// Writes every artifact of `report` into `dir` (created if missing) and
/// returns the paths written, `report.json` last.
pub fn emit_report(dir: &Path, report: &Report) -> Result<Vec<PathBuf>, VerifyError> {
    if report.tables.is_empty() {
        return Err(VerifyError::EmptyReport);
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<String, VerifyError> {
        let path = dir.join(&name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(name)
    };

    let mut csv_names = Vec::new();
    for t in &report.tables {
        csv_names.push(put(format!("truth_{}.csv", t.provenance), t.to_csv())?);
        if t.is_complete() {
            let maps: Vec<KarnaughMap> = build_kmaps(t)?;
            for m in &maps {
                put(format!("kmap_{}_out{}.txt", t.provenance, m.output_pin), m.render())?;
            }
            put(format!("kmaps_{}.json", t.provenance), serde_json::to_string_pretty(&maps)?)?;
        }
    }
    if let Some(c) = &report.comparison {
        put("diff.json".into(), serde_json::to_string_pretty(c)?)?;
        put("diff.txt".into(), c.render())?;
    }

    let artifacts = written.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    let index = ReportIndex {
        netlist: &report.netlist,
        tables: report
            .tables
            .iter()
            .zip(&csv_names)
            .map(|(t, csv)| TableEntry { provenance: t.provenance, captured_at_ms: t.captured_at_ms, complete: t.is_complete(), csv })
            .collect(),
        verdict: report.comparison.as_ref().map(|c| &c.verdict),
        timing: &report.timing,
        artifacts,
    };
    let body = serde_json::to_string_pretty(&index)?;
    let path = dir.join("report.json");
    fs::write(&path, body)?;
    written.push(path);
    Ok(written)
}
