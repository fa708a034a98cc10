//! CSV rows and plain-text reports.

use std::fs;
use std::path::Path;

use gauge_dirac::ExtractionResult;

use crate::CliError;

pub const SCAN_HEADER: [&str; 11] = [
    "f",
    "delta_measured",
    "delta_eq26",
    "delta_eq27",
    "delta_eq30",
    "rel_err_27",
    "energy_before",
    "energy_after",
    "neg_branch_after",
    "tail_fraction_after",
    "warnings",
];

pub const CONVERGENCE_HEADER: [&str; 4] = ["n_steps", "dt", "l2_error", "order"];

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub f: f64,
    pub delta_measured: f64,
    pub delta_gradient: f64,
    pub delta_divergence: f64,
    pub delta_quadratic: f64,
    pub rel_err: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub neg_branch_after: f64,
    pub tail_fraction_after: f64,
    pub warnings: Vec<String>,
}

impl ScanRow {
    pub fn from_result(f: f64, r: &ExtractionResult) -> Self {
        Self {
            f,
            delta_measured: r.delta_measured,
            delta_gradient: r.delta_gradient,
            delta_divergence: r.delta_divergence,
            delta_quadratic: r.delta_quadratic.unwrap_or(f64::NAN),
            rel_err: r.relative_error_divergence(),
            energy_before: r.energy_before,
            energy_after: r.energy_after,
            neg_branch_after: r.report_after.negative_branch,
            tail_fraction_after: r.tail_fraction_after,
            warnings: r.warnings.iter().map(ToString::to_string).collect(),
        }
    }

    fn record(&self) -> Vec<String> {
        let mut rec: Vec<String> = [
            self.f,
            self.delta_measured,
            self.delta_gradient,
            self.delta_divergence,
            self.delta_quadratic,
            self.rel_err,
            self.energy_before,
            self.energy_after,
            self.neg_branch_after,
            self.tail_fraction_after,
        ]
        .iter()
        .map(|&v| num(v))
        .collect();
        rec.push(self.warnings.join("; "));
        rec
    }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub fn write_scan_csv(path: &Path, rows: &[ScanRow]) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SCAN_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence_csv(path: &Path, rows: &[(usize, f64, f64, Option<f64>)]) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CONVERGENCE_HEADER)?;
    for &(n, dt, err, order) in rows {
        let order = order.map(num).unwrap_or_default();
        w.write_record([n.to_string(), num(dt), num(err), order])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    fs::write(path, text)?;
    Ok(())
}
