//! Deterministic value formatting and file emission.
//!
//! Floating-point cells carry 17 significant digits so golden files
//! round-trip doubles exactly; unrepresentable cells print as `nan`.

use std::io::Write;
use std::path::Path;

pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(contents.as_bytes())?;
    Ok(())
}
