// SPDX-License-Identifier: Apache-2.0

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(shia::shia)(py);
        let globals = PyDict::new(py);
        globals.set_item("shia", module).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn gates_and_frames() {
    run(r#"
assert [shia.eval_gate("NAND", [a, b]) for a in (0, 1) for b in (0, 1)] == [1, 1, 1, 0]
assert shia.encode_pin_message(1, 1) == b"11"
assert shia.encode_pin_message(2, 1) == b"21"
assert shia.decode_pin_message(b"10") == (1, 0)
try:
    shia.decode_pin_message(b"61")
    raise AssertionError("accepted bad frame")
except ValueError:
    pass
"#);
}

#[test]
fn netlist_and_sweeps() {
    run(r#"
net = shia.Netlist.reference()
assert net.validate() == []
assert all(net.settle(i) == net.oracle(i) for i in range(32))
assert net.settle([1, 0, 0, 0, 0]) == net.oracle(16)
again = shia.Netlist.from_toml(net.to_toml())
assert again.name == net.name
mom = shia.mom_sweep(net)
mrm = shia.mrm_sweep(net)
assert len(mrm) == 32 and mrm.is_complete
assert shia.compare(mom, mrm) == ("match", [])
verdict, cells = shia.compare(mom, shia.mrm_sweep(net, faults=["inverted:2"]))
assert verdict == "mismatch" and cells == [(2, list(range(32)))]
assert len(mom.kmap(1)) == 2 and len(mom.kmap(1)[0]) == 4
"#);
}
