// SPDX-License-Identifier: Apache-2.0

//! Five-variable Karnaugh maps.
//!
//! Each map is two 4x4 grids, one per level of input 5. Rows run over
//! inputs (1,2) and columns over inputs (3,4), both in Gray order
//! 00, 01, 11, 10, so horizontally or vertically adjacent cells differ in
//! exactly one input.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::table::TruthTable;
use super::VerifyError;
use crate::logic::{Pin, PinVector, SignalLevel};

/// Gray sequence for two variables.
pub const GRAY2: [u8; 4] = [0b00, 0b01, 0b11, 0b10];

pub type Grid<T> = [[[T; 4]; 4]; 2];

/// Grid position `(in5, row, col)` of an input vector.
pub fn cell_of(v: PinVector) -> (usize, usize, usize) {
    let b = |n: u8| v.get(Pin::new(n).unwrap()).bit();
    let gray_pos = |hi: u8, lo: u8| GRAY2.iter().position(|&g| g == (hi << 1 | lo)).unwrap();
    (b(5) as usize, gray_pos(b(1), b(2)), gray_pos(b(3), b(4)))
}

/// Inverse of [`cell_of`].
pub fn vector_at(grid: usize, row: usize, col: usize) -> PinVector {
    let (r, c) = (GRAY2[row], GRAY2[col]);
    let lv = |bit: u8| SignalLevel::from_bool(bit != 0);
    PinVector([lv(r >> 1), lv(r & 1), lv(c >> 1), lv(c & 1), lv(grid as u8)])
}

fn cells() -> impl Iterator<Item = (usize, usize, usize)> {
    (0..2).flat_map(|g| (0..4).flat_map(move |r| (0..4).map(move |c| (g, r, c))))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KarnaughMap {
    pub output_pin: Pin,
    pub cells: Grid<u8>,
}

pub fn build_kmap(table: &TruthTable, pin: Pin) -> Result<KarnaughMap, VerifyError> {
    if !table.is_complete() {
        return Err(VerifyError::IncompleteTable(table.failed_rows().len()));
    }
    let mut grid = [[[0u8; 4]; 4]; 2];
    for row in table.rows() {
        let (g, r, c) = cell_of(row.inputs);
        grid[g][r][c] = row.outputs.get(pin).bit();
    }
    Ok(KarnaughMap { output_pin: pin, cells: grid })
}

/// Maps for all five output pins.
pub fn build_kmaps(table: &TruthTable) -> Result<Vec<KarnaughMap>, VerifyError> {
    Pin::all().map(|p| build_kmap(table, p)).collect()
}

impl KarnaughMap {
    pub fn cell(&self, v: PinVector) -> u8 {
        let (g, r, c) = cell_of(v);
        self.cells[g][r][c]
    }

    /// Cell values indexed by input vector (ascending binary order).
    pub fn flatten(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (g, r, c) in cells() {
            out[vector_at(g, r, c).index()] = self.cells[g][r][c];
        }
        out
    }

    pub fn render(&self) -> String {
        render_grid(&format!("out{}", self.output_pin), &self.cells, |v| v.to_string())
    }
}

/// Cell-wise difference of two maps of the same output pin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffMap {
    pub output_pin: Pin,
    pub cells: Grid<i8>,
    pub is_zero: bool,
}

pub fn diff_kmaps(a: &KarnaughMap, b: &KarnaughMap) -> Result<DiffMap, VerifyError> {
    if a.output_pin != b.output_pin {
        return Err(VerifyError::PinMismatch(a.output_pin, b.output_pin));
    }
    let mut grid = [[[0i8; 4]; 4]; 2];
    for (g, r, c) in cells() {
        grid[g][r][c] = a.cells[g][r][c] as i8 - b.cells[g][r][c] as i8;
    }
    let is_zero = cells().all(|(g, r, c)| grid[g][r][c] == 0);
    Ok(DiffMap { output_pin: a.output_pin, cells: grid, is_zero })
}

impl DiffMap {
    /// Input vectors whose cells differ, ascending.
    pub fn nonzero_vectors(&self) -> Vec<PinVector> {
        let mut v: Vec<PinVector> =
            cells().filter(|&(g, r, c)| self.cells[g][r][c] != 0).map(|(g, r, c)| vector_at(g, r, c)).collect();
        v.sort();
        v
    }

    pub fn render(&self) -> String {
        let mut s = render_grid(&format!("diff out{}", self.output_pin), &self.cells, |v| format!("{v:+}").replace("+0", "0"));
        let _ = writeln!(s, "verdict: {}", if self.is_zero { "ZERO" } else { "NONZERO" });
        s
    }
}

fn render_grid<T: Copy>(title: &str, grid: &Grid<T>, fmt: impl Fn(T) -> String) -> String {
    let label = |g: u8| format!("{}{}", g >> 1, g & 1);
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    for (g, rows) in grid.iter().enumerate() {
        let _ = writeln!(s, "  in5={g}   in3in4");
        let _ = write!(s, "  in1in2");
        for c in GRAY2 {
            let _ = write!(s, "{:>4}", label(c));
        }
        s.push('\n');
        for (r, row) in rows.iter().enumerate() {
            let _ = write!(s, "  {:>6} ", label(GRAY2[r]));
            for v in row {
                let _ = write!(s, "{:>4}", fmt(*v));
            }
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::reference_netlist;
    use crate::verify::{Provenance, TruthRow};

    fn table_with(f: impl Fn(PinVector) -> PinVector) -> TruthTable {
        let rows = PinVector::all().map(|v| TruthRow { inputs: v, outputs: f(v), failed: false }).collect();
        TruthTable::new(Provenance::Mom, "t", 0, rows).unwrap()
    }

    #[test]
    fn cell_mapping_is_a_bijection() {
        let mut seen = std::collections::HashSet::new();
        for v in PinVector::all() {
            let (g, r, c) = cell_of(v);
            assert_eq!(vector_at(g, r, c), v);
            assert!(seen.insert((g, r, c)));
        }
        assert_eq!(seen.len(), 32);
    }

    #[test]
    fn neighbours_differ_in_one_input() {
        let hamming = |a: PinVector, b: PinVector| (a.index() ^ b.index()).count_ones();
        for (g, r, c) in cells() {
            let here = vector_at(g, r, c);
            assert_eq!(hamming(here, vector_at(g, (r + 1) % 4, c)), 1);
            assert_eq!(hamming(here, vector_at(g, r, (c + 1) % 4)), 1);
            assert_eq!(hamming(here, vector_at(1 - g, r, c)), 1);
        }
    }

    #[test]
    fn constant_low_column_gives_zero_map() {
        let t = table_with(|_| PinVector::default());
        let m = build_kmap(&t, Pin::new(1).unwrap()).unwrap();
        assert!(m.flatten().iter().all(|&c| c == 0));
        assert_eq!(m.cells.iter().flatten().flatten().count(), 32);
    }

    #[test]
    fn rebuild_is_deterministic_and_flatten_inverts() {
        let t = TruthTable::from_oracle(&reference_netlist()).unwrap();
        let maps = build_kmaps(&t).unwrap();
        assert_eq!(maps, build_kmaps(&t).unwrap());
        for v in PinVector::all() {
            for m in &maps {
                assert_eq!(m.flatten()[v.index()], t.row(v).outputs.get(m.output_pin).bit());
            }
        }
    }

    #[test]
    fn self_diff_is_zero_and_pins_must_match() {
        let t = TruthTable::from_oracle(&reference_netlist()).unwrap();
        let maps = build_kmaps(&t).unwrap();
        let d = diff_kmaps(&maps[0], &maps[0]).unwrap();
        assert!(d.is_zero);
        assert!(d.nonzero_vectors().is_empty());
        assert!(matches!(diff_kmaps(&maps[0], &maps[1]), Err(VerifyError::PinMismatch(..))));
    }

    #[test]
    fn incomplete_table_refused() {
        let rows = PinVector::all().map(|v| TruthRow { inputs: v, outputs: v, failed: v.index() == 7 }).collect();
        let t = TruthTable::new(Provenance::Mrm, "t", 0, rows).unwrap();
        assert!(matches!(build_kmap(&t, Pin::new(1).unwrap()), Err(VerifyError::IncompleteTable(1))));
    }

    #[test]
    fn rendering_has_gray_headers() {
        let t = TruthTable::from_oracle(&reference_netlist()).unwrap();
        let text = build_kmap(&t, Pin::new(1).unwrap()).unwrap().render();
        assert!(text.contains("  00  01  11  10"));
        assert_eq!(text.lines().count(), 1 + 2 * 6);
    }
}
