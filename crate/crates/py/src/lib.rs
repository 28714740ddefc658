use pyo3::prelude::*;
#[pymodule]
fn edgevec_py(_m: &Bound<PyModule>) -> PyResult<()> { Ok(()) }
