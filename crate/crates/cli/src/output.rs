//! Deterministic CSV and JSON artifacts.

use crate::error::CliError;
use rvm_core::simulation::{DiagnosticRow, IterateSummary};
use serde::Serialize;
use std::path::Path;

pub const DIAGNOSTIC_COLUMNS: [&str; 13] = [
    "t",
    "sup_rho",
    "l1_rho",
    "sup_h",
    "j_l2_sq",
    "field_energy",
    "poynting_residual",
    "pbar",
    "wbar",
    "envelope_w",
    "margin_gronwall",
    "margin_working",
    "status",
];

pub const ITERATE_COLUMNS: [&str; 6] = ["n", "distance", "ratio", "pbar_max", "wbar_max", "sup_rho_max"];

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), real)
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_diagnostics(path: &Path, rows: &[DiagnosticRow]) -> Result<(), CliError> {
    write_csv(
        path,
        &DIAGNOSTIC_COLUMNS,
        rows.iter().map(|r| {
            vec![
                real(r.t),
                real(r.sup_rho),
                real(r.l1_rho),
                real(r.sup_h),
                real(r.j_l2_sq),
                real(r.field_energy),
                opt_real(r.poynting_residual),
                real(r.pbar),
                real(r.wbar),
                opt_real(r.envelope_w),
                opt_real(r.margin_gronwall),
                real(r.margin_working),
                r.status.to_string(),
            ]
        }),
    )
}

pub fn write_iterates(path: &Path, rows: &[IterateSummary]) -> Result<(), CliError> {
    write_csv(
        path,
        &ITERATE_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                opt_real(r.distance),
                opt_real(r.ratio),
                real(r.pbar_max),
                real(r.wbar_max),
                real(r.sup_rho_max),
            ]
        }),
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e.into()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
