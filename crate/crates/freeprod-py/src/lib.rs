use pyo3::prelude::*;

#[pymodule]
fn freeprod_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
