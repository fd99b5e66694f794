// SPDX-License-Identifier: Apache-2.0

//! Python module `shia`.
//!
//! Input vectors are accepted either as an integer 0..31 (pin 1 is the most
//! significant bit) or as a sequence of five 0/1 values. Outputs come back as
//! lists of five ints.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use shia_core::board::FaultSpec;
use shia_core::logic::{self, GateKind, Pin, PinVector, SignalLevel};
use shia_core::model::HarnessConfig;
use shia_core::protocol;
use shia_core::session::{BoardOptions, Session};
use shia_core::transport::Clock;
use shia_core::verify::{self, build_kmap, Verdict};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn level(bit: u8) -> PyResult<SignalLevel> {
    match bit {
        0 => Ok(SignalLevel::Low),
        1 => Ok(SignalLevel::High),
        other => Err(PyValueError::new_err(format!("level must be 0 or 1, got {other}"))),
    }
}

fn to_vector(obj: &Bound<'_, PyAny>) -> PyResult<PinVector> {
    if let Ok(i) = obj.extract::<usize>() {
        if i >= PinVector::COMBINATIONS {
            return Err(PyValueError::new_err(format!("vector index {i} outside 0..32")));
        }
        return Ok(PinVector::from_index(i));
    }
    let bits: Vec<u8> = obj.extract()?;
    let arr: [u8; 5] = bits.try_into().map_err(|b: Vec<u8>| PyValueError::new_err(format!("need 5 levels, got {}", b.len())))?;
    let mut v = PinVector::default();
    for (p, b) in Pin::all().zip(arr) {
        v.set(p, level(b)?);
    }
    Ok(v)
}

fn bits(v: PinVector) -> Vec<u8> {
    v.0.iter().map(|l| l.bit()).collect()
}

#[pyclass(name = "Netlist", module = "shia", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyNetlist {
    inner: logic::Netlist,
}

#[pymethods]
impl PyNetlist {
    /// The bundled reference chassis.
    #[staticmethod]
    fn reference() -> Self {
        Self { inner: logic::reference_netlist() }
    }

    /// Parses and validates a TOML netlist document.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        logic::load_netlist(text).map(|inner| Self { inner }).map_err(err)
    }

    fn to_toml(&self) -> String {
        logic::emit_netlist(&self.inner)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn block_count(&self) -> usize {
        self.inner.blocks.len()
    }

    /// Violation messages; empty when valid.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(ToString::to_string).collect()
    }

    /// Output levels after the event-driven settle.
    fn settle(&self, vector: &Bound<'_, PyAny>) -> PyResult<Vec<u8>> {
        Ok(bits(logic::settle(&self.inner, to_vector(vector)?).map_err(err)?.outputs))
    }

    /// Output levels from direct Boolean evaluation.
    fn oracle(&self, vector: &Bound<'_, PyAny>) -> PyResult<Vec<u8>> {
        Ok(bits(logic::oracle_eval(&self.inner, to_vector(vector)?).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!("Netlist({:?}, blocks={})", self.inner.name, self.inner.blocks.len())
    }
}

#[pyclass(name = "TruthTable", module = "shia", frozen)]
pub struct PyTruthTable {
    inner: verify::TruthTable,
}

#[pymethods]
impl PyTruthTable {
    #[getter]
    fn provenance(&self) -> String {
        self.inner.provenance.to_string()
    }

    #[getter]
    fn is_complete(&self) -> bool {
        self.inner.is_complete()
    }

    /// `(inputs, outputs, failed)` for each of the 32 rows.
    fn rows(&self) -> Vec<(Vec<u8>, Vec<u8>, bool)> {
        self.inner.rows().iter().map(|r| (bits(r.inputs), bits(r.outputs), r.failed)).collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    /// Karnaugh map of one output pin as `[grid][row][col]`.
    fn kmap(&self, pin: u8) -> PyResult<Vec<Vec<Vec<u8>>>> {
        let pin = Pin::new(pin).ok_or_else(|| err(format!("pin {pin} outside 1..5")))?;
        let m = build_kmap(&self.inner, pin).map_err(err)?;
        Ok(m.cells.iter().map(|g| g.iter().map(|r| r.to_vec()).collect()).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.rows().len()
    }
}

#[pyfunction]
fn eval_gate(kind: &str, inputs: Vec<u8>) -> PyResult<u8> {
    let kind: GateKind = kind.parse().map_err(err)?;
    let levels = inputs.into_iter().map(level).collect::<PyResult<Vec<_>>>()?;
    Ok(logic::eval_gate(kind, &levels).map_err(err)?.bit())
}

#[pyfunction]
fn encode_pin_message<'py>(py: Python<'py>, pin: u8, lvl: u8) -> PyResult<Bound<'py, PyBytes>> {
    let frame = protocol::encode_pin_message(pin, level(lvl)?).map_err(err)?;
    Ok(PyBytes::new(py, &frame))
}

#[pyfunction]
fn decode_pin_message(frame: &[u8]) -> PyResult<(u8, u8)> {
    let (pin, lvl) = protocol::decode_pin_message(frame).map_err(err)?;
    Ok((pin.get(), lvl.bit()))
}

#[pyfunction]
fn mom_sweep(net: &PyNetlist) -> PyResult<PyTruthTable> {
    verify::mom_sweep(&net.inner).map(|inner| PyTruthTable { inner }).map_err(err)
}

/// Board-in-the-loop sweep against an in-process emulated board.
#[pyfunction]
#[pyo3(signature = (net, faults=Vec::new(), delay_ms=500, poll_hz=10.0, latency_ms=0, virtual_time=true))]
fn mrm_sweep(net: &PyNetlist, faults: Vec<String>, delay_ms: u64, poll_hz: f64, latency_ms: u64, virtual_time: bool) -> PyResult<PyTruthTable> {
    let faults = faults.iter().map(|f| f.parse::<FaultSpec>()).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let clock = if virtual_time { Clock::new_virtual() } else { Clock::real() };
    let opts = BoardOptions { faults, poll_hz, latency_ms, ..Default::default() };
    let mut session = Session::loopback(&net.inner, HarnessConfig::with_delay(delay_ms), opts, clock).map_err(err)?;
    verify::mrm_sweep(&mut session).map(|inner| PyTruthTable { inner }).map_err(err)
}

/// Compares two tables; returns `(verdict, {pin: [differing vector indices]})`.
#[pyfunction]
fn compare(a: &PyTruthTable, b: &PyTruthTable) -> PyResult<(String, Vec<(u8, Vec<usize>)>)> {
    let c = verify::compare(&a.inner, &b.inner).map_err(err)?;
    let verdict = match c.verdict {
        Verdict::Match => "match",
        Verdict::Mismatch { .. } => "mismatch",
        Verdict::Incomplete { .. } => "incomplete",
    };
    let cells = c.nonzero_cells().into_iter().map(|(p, vs)| (p.get(), vs.iter().map(PinVector::index).collect())).collect();
    Ok((verdict.to_string(), cells))
}

#[pymodule]
pub fn shia(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetlist>()?;
    m.add_class::<PyTruthTable>()?;
    m.add_function(wrap_pyfunction!(eval_gate, m)?)?;
    m.add_function(wrap_pyfunction!(encode_pin_message, m)?)?;
    m.add_function(wrap_pyfunction!(decode_pin_message, m)?)?;
    m.add_function(wrap_pyfunction!(mom_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(mrm_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
