//! File formats: CSV tables, newline-delimited photon streams and JSON.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use qtraj_core::darkperiods::{HeatmapGrid, PeriodClassification, Statistic};
use qtraj_core::master::{MasterSeries, SteadyScan};
use qtraj_core::photonstats::{G2Curve, PhotonStream};
use qtraj_core::trajectory::{EnsembleResult, TrajectoryRecord};
use serde::Serialize;

use crate::error::{CliError, CliResult};

fn writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

/// `time, pop_<label>…` for one trajectory.
pub fn write_trajectory_csv(path: &Path, rec: &TrajectoryRecord, labels: &[String]) -> CliResult<()> {
    let mut header = vec!["time".to_string()];
    header.extend(labels.iter().map(|l| format!("pop_{l}")));
    let rows = rec.times.iter().zip(&rec.states).map(|(t, s)| {
        let mut r = vec![fmt(*t)];
        r.extend(s.populations().into_iter().map(fmt));
        r
    });
    write_rows(path, &header, rows)
}

/// `time, channel`
pub fn write_jumps_csv(path: &Path, rec: &TrajectoryRecord) -> CliResult<()> {
    let header = ["time".to_string(), "channel".to_string()];
    write_rows(path, &header, rec.jumps.iter().map(|j| vec![fmt(j.time), j.label.clone()]))
}

/// Ensemble means with standard errors, and the master-equation populations if given.
pub fn write_ensemble_csv(path: &Path, ens: &EnsembleResult, labels: &[String], master: Option<&MasterSeries>) -> CliResult<()> {
    let mut header = vec!["time".to_string()];
    header.extend(labels.iter().map(|l| format!("pop_{l}")));
    header.extend(labels.iter().map(|l| format!("sem_{l}")));
    if master.is_some() {
        header.extend(labels.iter().map(|l| format!("master_{l}")));
    }
    let rows = (0..ens.times.len()).map(|i| {
        let mut r = vec![fmt(ens.times[i])];
        r.extend(ens.mean_populations[i].iter().map(|x| fmt(*x)));
        r.extend(ens.sem_populations[i].iter().map(|x| fmt(*x)));
        if let Some(m) = master {
            r.extend(m.states[i].populations().into_iter().map(fmt));
        }
        r
    });
    write_rows(path, &header, rows)
}

/// `delta, pop_<label>…, degenerate`; failed points have empty population cells.
pub fn write_scan_csv(path: &Path, scan: &SteadyScan) -> CliResult<()> {
    let mut header = vec!["delta".to_string()];
    header.extend(scan.labels.iter().map(|l| format!("pop_{l}")));
    header.push("degenerate".into());
    let rows = scan.detunings.iter().enumerate().map(|(i, d)| {
        let mut r = vec![fmt(*d)];
        match &scan.populations[i] {
            Some(p) => r.extend(p.iter().map(|x| fmt(*x))),
            None => r.extend(scan.labels.iter().map(|_| String::new())),
        }
        r.push(scan.degenerate[i].to_string());
        r
    });
    write_rows(path, &header, rows)
}

/// `tau, g2`
pub fn write_g2_csv(path: &Path, curve: &G2Curve) -> CliResult<()> {
    let header = ["tau".to_string(), "g2".to_string()];
    write_rows(path, &header, curve.taus.iter().zip(&curve.values).map(|(t, g)| vec![fmt(*t), fmt(*g)]))
}

/// One statistic as a matrix: rows are `V`, columns are `δ`, `NaN` marks failed cells.
pub fn write_heatmap_csv(path: &Path, grid: &HeatmapGrid, stat: Statistic, log10: bool) -> CliResult<()> {
    let values = if log10 { grid.log10(stat) } else { grid.values(stat) };
    let mut header = vec!["v\\delta".to_string()];
    header.extend(grid.delta_axis.iter().map(|d| fmt(*d)));
    let rows = grid.v_axis.iter().zip(values).map(|(v, row)| {
        let mut r = vec![fmt(*v)];
        r.extend(row.into_iter().map(|x| x.map_or("NaN".to_string(), fmt)));
        r
    });
    write_rows(path, &header, rows)
}

/// Orthogonality defect per heatmap cell.
pub fn write_defect_csv(path: &Path, grid: &HeatmapGrid) -> CliResult<()> {
    let mut header = vec!["v\\delta".to_string()];
    header.extend(grid.delta_axis.iter().map(|d| fmt(*d)));
    let rows = grid.v_axis.iter().zip(&grid.cells).map(|(v, row)| {
        let mut r = vec![fmt(*v)];
        r.extend(row.iter().map(|c| c.defect().map_or("NaN".to_string(), fmt)));
        r
    });
    write_rows(path, &header, rows)
}

/// `kind, start, length, photons` for every dark gap and light period.
pub fn write_periods_csv(path: &Path, c: &PeriodClassification) -> CliResult<()> {
    let header: Vec<String> = ["kind", "start", "length", "photons"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (k, p) in c.light_periods.iter().enumerate() {
        rows.push(vec!["light".into(), fmt(p.start), fmt(p.duration), p.photons.to_string()]);
        if let Some(d) = c.dark_intervals.get(k) {
            rows.push(vec!["dark".into(), fmt(p.start + p.duration), fmt(*d), "0".into()]);
        }
    }
    write_rows(path, &header, rows.into_iter())
}

/// `bin_start, photons_per_unit_time`
pub fn write_intensity_csv(path: &Path, trace: &[(f64, f64)]) -> CliResult<()> {
    let header = ["bin_start".to_string(), "photons_per_unit_time".to_string()];
    write_rows(path, &header, trace.iter().map(|(a, b)| vec![fmt(*a), fmt(*b)]))
}

/// One timestamp per line.
pub fn write_stream(path: &Path, s: &PhotonStream) -> CliResult<()> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    for t in s.timestamps() {
        writeln!(w, "{}", fmt(*t)).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads newline-delimited timestamps; blank lines and `#` comments are skipped.
pub fn read_stream(path: &Path) -> CliResult<PhotonStream> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut times = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let t: f64 = s
            .parse()
            .map_err(|_| CliError::config(format!("{}:{}: not a timestamp: '{s}'", path.display(), n + 1)))?;
        if t < 0.0 {
            return Err(CliError::config(format!("{}:{}: negative timestamp", path.display(), n + 1)));
        }
        times.push(t);
    }
    Ok(PhotonStream::new(times)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    writeln!(w).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}
