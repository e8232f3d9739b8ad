use std::ffi::CString;

use pyo3::prelude::*;
use pydehum::pydehum;

// Runs the Python smoke script against the module linked into this binary.
#[test]
fn smoke_script_passes_in_embedded_interpreter() {
    pyo3::append_to_inittab!(pydehum);
    pyo3::prepare_freethreaded_python();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/python/smoke_test.py");
    let code = CString::new(std::fs::read_to_string(path).unwrap()).unwrap();
    Python::with_gil(|py| {
        let globals = pyo3::types::PyDict::new(py);
        globals.set_item("__file__", path).unwrap();
        py.run(&code, Some(&globals), None).unwrap_or_else(|e| {
            e.print(py);
            panic!("smoke script failed");
        });
    });
}
