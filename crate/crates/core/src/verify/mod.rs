// SPDX-License-Identifier: Apache-2.0

//! Truth-table capture, Karnaugh maps and the comparison report.

mod kmap;
mod report;
mod sweep;
mod table;

use thiserror::Error;

use crate::logic::Pin;
use crate::model::HarnessError;
use crate::session::SessionError;

pub use kmap::{build_kmap, build_kmaps, cell_of, diff_kmaps, vector_at, DiffMap, Grid, KarnaughMap, GRAY2};
pub use report::{compare, emit_report, Comparison, Report, Timing, Verdict};
pub use sweep::{mom_sweep, mrm_sweep, sweep};
pub use table::{Provenance, TruthRow, TruthTable};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("a truth table needs 32 rows, got {0}")]
    RowCount(usize),
    #[error("row {0} is out of order")]
    RowOrder(usize),
    #[error("truth table has {0} failed rows")]
    IncompleteTable(usize),
    #[error("cannot diff maps of out{0} and out{1}")]
    PinMismatch(Pin, Pin),
    #[error("nothing to report")]
    EmptyReport,
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("report I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("report encoding: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<HarnessError> for VerifyError {
    fn from(e: HarnessError) -> Self {
        VerifyError::Session(e.into())
    }
}
