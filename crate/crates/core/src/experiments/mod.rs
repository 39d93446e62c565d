//! Scenario presets, sweep drivers and radio maps.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub mod presets;
mod radiomap;
mod sweep;

pub use presets::{preset, PRESET_NAMES};
pub use radiomap::{policy_radio_maps, radio_map, write_radio_maps, RadioMap, RadioMapKind};
pub use sweep::{evaluate_method, run_sweep, write_sweep_csv, ExperimentSpec, Method, SweepAxis, SweepRow};

/// Plain-text matrix: one `#` header line, then `rows` lines of `cols`
/// space-separated values (row-major).
pub fn write_matrix(path: &Path, header: &str, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!("{} values for a {rows}x{cols} matrix", data.len())));
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# {header}")?;
    for r in 0..rows {
        let line: Vec<String> = data[r * cols..(r + 1) * cols].iter().map(|v| format!("{v:e}")).collect();
        writeln!(f, "{}", line.join(" "))?;
    }
    f.flush()?;
    Ok(())
}

/// Reads a file written by [`write_matrix`]: `(header, rows, cols, data)`.
pub fn read_matrix(path: &Path) -> Result<(String, usize, usize, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| Error::Format("missing matrix header".into()))?
        .to_string();
    let mut data = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for l in lines.filter(|l| !l.trim().is_empty()) {
        let vals = l
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| Error::Format(format!("bad value `{v}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if *cols.get_or_insert(vals.len()) != vals.len() {
            return Err(Error::Format("ragged matrix".into()));
        }
        data.extend(vals);
        rows += 1;
    }
    Ok((header, rows, cols.unwrap_or(0), data))
}
