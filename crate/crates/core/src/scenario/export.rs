//! CSV, plot-data and JSON output. Floats use Rust's shortest round-trip
//! formatting, so every written value parses back to the same bits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::RunReport;
use crate::error::{Error, Result};
use crate::optimizer::TraceRecord;

pub const CSV_HEADER: [&str; 7] = [
    "method",
    "P0_W",
    "capacity_bps_hz",
    "ase_bps_hz_m2",
    "rotations_rad",
    "seed",
    "runtime_s",
];

/// Whether the wall-clock column is filled. Leaving it empty makes repeated
/// runs byte-identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Record,
    Omit,
}

fn join_rotations(rotations: &[f64]) -> String {
    rotations.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

pub fn write_csv<W: Write>(reports: &[RunReport], out: W, timing: Timing) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        let runtime = match timing {
            Timing::Record => r.runtime_s.to_string(),
            Timing::Omit => String::new(),
        };
        w.write_record([
            r.method.clone(),
            r.p0_w.to_string(),
            r.estimate.mean_bps_hz.to_string(),
            r.estimate.ase.to_string(),
            join_rotations(&r.rotations),
            r.seed.to_string(),
            runtime,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One block per method in first-appearance order, rows by ascending power.
pub fn write_plot_data<W: Write>(reports: &[RunReport], out: W) -> Result<()> {
    let mut methods: Vec<&str> = Vec::new();
    for r in reports {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "P0_W", "P0_dBm", "ase_bps_hz_m2", "capacity_bps_hz"])?;
    for m in methods {
        let mut rows: Vec<&RunReport> = reports.iter().filter(|r| r.method == m).collect();
        rows.sort_by(|a, b| a.p0_w.total_cmp(&b.p0_w));
        for r in rows {
            w.write_record([
                m.to_string(),
                r.p0_w.to_string(),
                (10.0 * r.p0_w.log10() + 30.0).to_string(),
                r.estimate.ase.to_string(),
                r.estimate.mean_bps_hz.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per outer iteration: step size, best capacity, acceptance rate, and the
/// semicolon-joined proposal probabilities.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "alpha", "best_capacity_bps_hz", "acceptance_rate", "fallback_draws", "p"])?;
    for t in trace {
        w.write_record([
            t.outer.to_string(),
            t.alpha.to_string(),
            t.best_capacity_bps_hz.to_string(),
            t.acceptance_rate.to_string(),
            t.fallback_draws.to_string(),
            join_rotations(&t.p),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON of the full reports, per-realization values included.
pub fn write_summary<W: Write>(reports: &[RunReport], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, reports)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(out)?;
    Ok(())
}

/// Writes the results CSV to `path`.
pub fn export_results(reports: &[RunReport], path: &Path, timing: Timing) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_csv(reports, file, timing)
}
