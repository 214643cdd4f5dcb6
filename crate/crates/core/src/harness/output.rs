//! CSV artifacts: comma separated, header row, floats as `{:.16e}`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bounds::GelBoundReport;
use crate::cascade::CascadeRun;
use crate::error::{Error, Result};
use crate::grid::GridRun;
use crate::mlsim::{GelTimeSummary, SimRun};
use crate::spectrum::MassSpectrum;

use super::scan::ScanRow;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), fmt_f64)
}

/// CSV bytes for `header` and `rows`.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let csv_err = |source| Error::Csv {
        path: PathBuf::from("<memory>"),
        source,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io {
        path: PathBuf::from("<memory>"),
        source: e.into_error(),
    })
}

/// Writes the CSV to `path` through a temporary file and a rename.
pub fn write_csv_atomic(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let bytes = csv_bytes(header, rows)?;
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| Error::Io { path: p, source }
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub const CASCADE_HEADER: [&str; 6] = ["t", "n", "c_n", "M1", "xlogx_moment", "overflow_cum"];

/// One row per snapshot and level.
pub fn cascade_rows(run: &CascadeRun) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (t, s) in &run.trajectory.snapshots {
        let (m1, xl, lost) = (s.moment(1.0), s.xlogx_moment(), s.lost_mass());
        for n in 0..=run.n_max {
            let c = s.get((n as f64).exp2());
            rows.push(vec![fmt_f64(*t), n.to_string(), fmt_f64(c), fmt_f64(m1), fmt_f64(xl), fmt_f64(lost)]);
        }
    }
    rows
}

pub const GRID_HEADER: [&str; 6] = ["t", "M0", "M1", "M2", "xlogx_moment", "lost_mass"];

pub fn grid_rows(run: &GridRun) -> Vec<Vec<String>> {
    run.trajectory
        .moments
        .iter()
        .map(|r| [r.t, r.m0, r.m1, r.m2, r.xlogx, r.lost_mass].iter().map(|v| fmt_f64(*v)).collect())
        .collect()
}

pub const SPECTRUM_HEADER: [&str; 2] = ["mass", "concentration"];

pub fn spectrum_rows(s: &MassSpectrum) -> Vec<Vec<String>> {
    s.iter().map(|(x, c)| vec![fmt_f64(x), fmt_f64(c)]).collect()
}

pub const MLSIM_HEADER: [&str; 5] = ["run_index", "seed", "gel_time", "largest_cluster_final", "n_events"];

pub fn mlsim_rows(runs: &[SimRun], summary: &GelTimeSummary) -> Vec<Vec<String>> {
    runs.iter()
        .zip(&summary.per_run)
        .enumerate()
        .map(|(i, (r, g))| {
            vec![
                i.to_string(),
                r.seed.to_string(),
                g.map_or_else(|| "censored".to_string(), fmt_f64),
                fmt_f64(r.largest_final()),
                r.n_events.to_string(),
            ]
        })
        .collect()
}

pub const BOUND_HEADER: [&str; 6] = ["kernel", "x0", "r", "kappa", "tgel_bound", "route"];

pub fn bound_row(kernel: &str, report: &GelBoundReport) -> Vec<String> {
    vec![
        kernel.to_string(),
        fmt_opt(report.x0),
        fmt_opt(report.r),
        fmt_f64(report.kappa),
        fmt_f64(report.tgel_upper),
        report.route.as_str().to_string(),
    ]
}

pub const SCAN_HEADER: [&str; 10] = [
    "family", "alpha", "level", "loss_time", "verdict", "predicted", "exponent", "gel_time", "bound", "bound_route",
];

/// One row per `(family, α, refinement level)`, in that order.
pub fn scan_rows(rows: &[ScanRow]) -> Vec<Vec<String>> {
    let mut sorted: Vec<&ScanRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.family.cmp(&b.family).then(a.alpha.total_cmp(&b.alpha)));
    let mut out = Vec::new();
    for r in sorted {
        for (level, t) in &r.loss_times {
            out.push(vec![
                r.family.to_string(),
                fmt_f64(r.alpha),
                level.to_string(),
                fmt_opt(*t),
                r.verdict.as_str().to_string(),
                r.predicted.as_str().to_string(),
                fmt_opt(r.exponent),
                fmt_opt(r.gel_time),
                fmt_opt(r.bound),
                r.bound_route.unwrap_or("none").to_string(),
            ]);
        }
    }
    out
}
