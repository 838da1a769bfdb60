//! CSV and JSON writers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! inputs always give byte-identical files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use delaystab_core::solver::{Trajectory, Warning};
use serde::Serialize;

use crate::error::CliError;

/// `t,x` rows sampled every `step`.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory, step: f64) -> Result<(), CliError> {
    writeln!(w, "t,x")?;
    for (t, x) in traj.sample(step)? {
        writeln!(w, "{t},{x}")?;
    }
    Ok(())
}

/// `t,kind` rows, one per breakpoint inside the horizon.
pub fn write_breakpoints_csv<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "t,kind")?;
    for bp in traj.breakpoints() {
        writeln!(w, "{},{}", bp.t, bp.kind.label())?;
    }
    Ok(())
}

/// Pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

/// Writes `<stem>.csv` and `<stem>_breakpoints.csv` into `dir` and returns
/// the trajectory path.
pub fn save_trajectory(dir: &Path, stem: &str, traj: &Trajectory, step: f64) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(format!("{stem}.csv"));
    let bps = dir.join(format!("{stem}_breakpoints.csv"));
    write_trajectory_csv(io::BufWriter::new(create(&path)?), traj, step)?;
    write_breakpoints_csv(io::BufWriter::new(create(&bps)?), traj)?;
    Ok(path)
}

pub fn create(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn describe_warning(w: &Warning) -> String {
    match w {
        Warning::LeftStateBox { t, x } => {
            format!("state {x} at t = {t} left the box on which the sector bounds hold")
        }
        Warning::OutOfRegime { b } => {
            format!("b = {b} is outside (1.6, 1.9), where the example is calibrated")
        }
    }
}
