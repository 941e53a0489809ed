//! CSV and summary-text writers.
//!
//! Numeric CSV cells are printed with 17 significant digits so a written
//! f64 parses back to the identical bits; outputs are pure functions of the
//! inputs, so reruns are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ousis_core::analysis::EnsembleSummary;
use ousis_core::SamplePath;

use crate::CliError;

/// Round-trip-safe decimal rendering of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let file = File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(format!("write failed: {e}"))
}

/// Trajectory CSV: `t,infected[,noise][,x_star]`, one row per grid node.
pub fn write_trajectory(
    path: &Path,
    infected: &SamplePath,
    noise: Option<&SamplePath>,
    x_star: Option<f64>,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    let mut header = String::from("t,infected");
    if noise.is_some() {
        header.push_str(",noise");
    }
    if x_star.is_some() {
        header.push_str(",x_star");
    }
    writeln!(w, "{header}").map_err(io_err)?;
    let grid = infected.grid();
    for k in 0..grid.n_nodes() {
        write!(w, "{},{}", fmt_f64(grid.time(k)), fmt_f64(infected.value(k))).map_err(io_err)?;
        if let Some(n) = noise {
            write!(w, ",{}", fmt_f64(n.value(k))).map_err(io_err)?;
        }
        if let Some(x) = x_star {
            write!(w, ",{}", fmt_f64(x)).map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Per-path verdict CSV: `seed,label,terminal,crossings,slope`, where `seed`
/// is the path's stream index under the base seed.
pub fn write_verdicts(path: &Path, summary: &EnsembleSummary) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "seed,label,terminal,crossings,slope").map_err(io_err)?;
    for (i, v) in summary.verdicts.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{}",
            v.label,
            fmt_f64(v.terminal_value),
            v.crossings_of_xstar,
            fmt_f64(v.slope_estimate)
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Summary text: one `key: value` per line.
pub fn write_summary(path: &Path, lines: &[(String, String)]) -> Result<(), CliError> {
    let mut w = create(path)?;
    for (k, v) in lines {
        writeln!(w, "{k}: {v}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Convergence table CSV: `dt,median_error,slope` (slope repeated per row).
pub fn write_convergence(
    path: &Path,
    points: &[(f64, f64)],
    slope: f64,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "dt,median_error,slope").map_err(io_err)?;
    for &(dt, err) in points {
        writeln!(w, "{},{},{}", fmt_f64(dt), fmt_f64(err), fmt_f64(slope)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
