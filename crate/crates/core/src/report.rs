//! CSV rendering of experiment reports.
//!
//! Real numbers are written with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64` exactly. Integer columns are written as integers.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lab::{ConvergenceReport, ErdosRenyiReport};
use crate::sums::CoordinateTrack;

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub trait CsvReport {
    fn to_csv(&self) -> String;
}

impl CsvReport for ConvergenceReport {
    fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.stderr {
            Some(_) => out.push_str("n,value,limit,abs_error,stderr\n"),
            None => out.push_str("n,value,limit,abs_error\n"),
        }
        for k in 0..self.checkpoints.len() {
            write!(
                out,
                "{},{},{},{}",
                self.checkpoints[k],
                format_real(self.values[k]),
                format_real(self.limit),
                format_real(self.errors[k])
            )
            .unwrap();
            if let Some(se) = &self.stderr {
                write!(out, ",{}", format_real(se[k])).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

impl CsvReport for ErdosRenyiReport {
    fn to_csv(&self) -> String {
        let mut out = String::from("n,ell_n,statistic,predicted_limit,I_alpha\n");
        for k in 0..self.checkpoints.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                self.checkpoints[k],
                self.window_lengths[k],
                format_real(self.statistics[k]),
                format_real(self.predicted_limit),
                format_real(self.rate)
            )
            .unwrap();
        }
        out
    }
}

/// Decimated prefix trajectory: `m,value`.
pub fn track_csv(track: &CoordinateTrack, every: usize) -> String {
    let mut out = String::from("m,value\n");
    for (m, v) in track.decimated(every) {
        writeln!(out, "{m},{}", format_real(v)).unwrap();
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_csv<R: CsvReport>(report: &R, path: &Path) -> Result<()> {
    write_text(path, &report.to_csv())
}
