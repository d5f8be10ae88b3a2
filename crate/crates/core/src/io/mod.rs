//! Configuration files and output writers.

pub mod config;
pub mod manifest;
pub mod vtk;

pub use config::{format_config, load_config, parse_config};
pub use manifest::{write_atomic, ExitStatus, RunManifest};

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::analysis::ErrorReport;
use crate::error::{Error, Result};
use crate::timeloop::Trajectory;

/// Environment variable that overrides the output directory.
pub const OUTPUT_DIR_ENV: &str = "CHNS_OUTPUT_DIR";

/// The directory from the environment if set, else `fallback`.
pub fn output_dir(fallback: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => fallback.to_path_buf(),
    }
}

pub const TIMESERIES_VERSION: u32 = 1;

pub const TIMESERIES_COLUMNS: [&str; 10] = [
    "step",
    "t",
    "mass",
    "energy",
    "mean_div",
    "proj_div",
    "pressure_mean",
    "r",
    "newton_iters",
    "newton_final_increment",
];

/// One header comment with the schema version, one with the initial mass and
/// energy, then the column row and one row per step.
pub fn write_timeseries<W: Write>(mut w: W, traj: &Trajectory) -> std::io::Result<()> {
    writeln!(w, "# chns timeseries v{TIMESERIES_VERSION}")?;
    writeln!(
        w,
        "# initial mass = {:?}, initial energy = {:?}",
        traj.initial_mass, traj.initial_energy
    )?;
    writeln!(w, "{}", TIMESERIES_COLUMNS.join(","))?;
    for r in &traj.records {
        let d = &r.diagnostics;
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{:?}",
            r.step,
            r.t,
            d.mass,
            r.energy,
            d.mean_div,
            d.proj_div,
            d.pressure_mean,
            d.r,
            r.newton_iters,
            r.newton_final_increment
        )?;
    }
    Ok(())
}

/// A row of `timeseries.csv` read back.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeseriesRow {
    pub step: usize,
    pub values: [f64; 9],
}

pub fn read_timeseries(text: &str) -> Result<Vec<TimeseriesRow>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Contract("timeseries is empty".into()))?;
    if header != TIMESERIES_COLUMNS.join(",") {
        return Err(Error::Contract(format!("unexpected timeseries header `{header}`")));
    }
    lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != TIMESERIES_COLUMNS.len() {
                return Err(Error::Contract(format!("malformed timeseries row `{l}`")));
            }
            let step = cols[0]
                .parse()
                .map_err(|e| Error::Contract(format!("bad step `{}`: {e}", cols[0])))?;
            let mut values = [0.0; 9];
            for (v, c) in values.iter_mut().zip(&cols[1..]) {
                *v = c
                    .parse()
                    .map_err(|e| Error::Contract(format!("bad value `{c}`: {e}")))?;
            }
            Ok(TimeseriesRow { step, values })
        })
        .collect()
}

/// Writes `contents` to `dir/name` and returns the path.
pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn save_timeseries(dir: &Path, traj: &Trajectory) -> Result<PathBuf> {
    let mut buf = Vec::new();
    write_timeseries(&mut buf, traj).expect("writing to memory");
    write_file(dir, "timeseries.csv", &buf)
}

/// Writes `eoc.csv` and `eoc.txt`.
pub fn save_eoc(dir: &Path, report: &ErrorReport) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write_file(dir, "eoc.csv", report.to_csv()?.as_bytes())?,
        write_file(dir, "eoc.txt", report.to_text()?.as_bytes())?,
    ])
}
