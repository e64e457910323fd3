//! CSV and JSON persistence for harness reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::moments::MomentReport;
use super::runtime::RuntimeReport;
use super::SweepReport;
use crate::error::{Error, Result};

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.display().to_string(),
            message: format!("{other:?}"),
        },
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per (sweep point, estimator).
pub fn write_sweep_csv(path: impl AsRef<Path>, report: &SweepReport) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let axis = report.spec.sweep.name();
    let rows = std::iter::once(
        [
            axis,
            "estimator",
            "trials",
            "successes",
            "p_hat",
            "ci_lo",
            "ci_hi",
            "mean_ns",
        ]
        .map(String::from),
    )
    .chain(report.points.iter().map(|p| {
        [
            p.axis.to_string(),
            p.estimator.to_string(),
            p.trials.to_string(),
            p.successes.to_string(),
            p.lock_in.to_string(),
            p.ci_lo.to_string(),
            p.ci_hi.to_string(),
            fmt_opt(p.mean_ns),
        ]
    }));
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_moments_csv(path: impl AsRef<Path>, report: &MomentReport) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record([
        "k",
        "mean",
        "variance",
        "skewness",
        "kurtosis",
        "analytic_mean",
        "analytic_variance",
    ])
    .map_err(|e| csv_error(path, e))?;
    for r in &report.rows {
        w.write_record([
            r.k.to_string(),
            r.mean.to_string(),
            r.variance.to_string(),
            r.skewness.to_string(),
            r.kurtosis.to_string(),
            r.analytic_mean.to_string(),
            r.analytic_variance.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `hist_k{k}.csv` per index into `dir` and returns the paths.
pub fn write_histogram_csvs(dir: impl AsRef<Path>, report: &MomentReport) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for h in &report.histograms {
        let path = dir.as_ref().join(format!("hist_k{}.csv", h.k));
        let mut w = csv_writer(&path)?;
        w.write_record(["bin_lo", "bin_hi", "count", "density", "analytic_density"])
            .map_err(|e| csv_error(&path, e))?;
        let density = h.histogram.density();
        for (i, edge) in h.histogram.edges.windows(2).enumerate() {
            w.write_record([
                edge[0].to_string(),
                edge[1].to_string(),
                h.histogram.counts[i].to_string(),
                density[i].to_string(),
                h.analytic_density[i].to_string(),
            ])
            .map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn write_runtime_csv(path: impl AsRef<Path>, report: &RuntimeReport) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record([
        "multiplier",
        "n_x",
        "n_z",
        "window_len",
        "aml_mean_ns",
        "ed_mean_ns",
    ])
    .map_err(|e| csv_error(path, e))?;
    for r in &report.rows {
        w.write_record([
            r.multiplier.to_string(),
            r.n_x.to_string(),
            r.n_z.to_string(),
            r.window_len.to_string(),
            r.aml_mean_ns.to_string(),
            r.ed_mean_ns.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
