//! CSV helpers shared by the experiment drivers.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::Result;

pub fn fmt_sci(x: f64) -> String {
    format!("{x:.6e}")
}

/// Empty cell for a missing value.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

/// Writes a header row followed by `rows`.
pub fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Opens `path` for one of the library's own CSV writers.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}
