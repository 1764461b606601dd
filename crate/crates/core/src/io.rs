//! CSV ingestion and the record/report writers.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};

use crate::engine::{ForecastRecord, MetricsReport, Mode};
use crate::error::{Error, Result};
use crate::timeseries::{GridSpec, LoadSeries};

pub const LOAD_COLUMN: &str = "load_kw";
pub const SOLAR_COLUMN: &str = "solar_wm2";
/// Longest run of missing intervals that is filled by interpolation.
pub const MAX_INTERPOLATED_GAP: usize = 4;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub interpolated: usize,
    /// Days dropped for containing a gap longer than [`MAX_INTERPOLATED_GAP`].
    pub excluded_days: Vec<NaiveDate>,
    /// Incomplete days at either end of the file.
    pub trimmed_days: Vec<NaiveDate>,
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ]
    .iter()
    .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Reads a `timestamp,<column>` CSV into whole days on `grid`.
pub fn read_series<R: Read>(
    reader: R,
    grid: GridSpec,
    column: &str,
) -> Result<(LoadSeries, IngestReport)> {
    grid.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "timestamp" || &headers[1] != column {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `timestamp,{column}`"),
        });
    }

    let step = grid.interval_minutes as i64;
    let k = grid.intervals_per_day();
    let mut samples: Vec<(i64, f64)> = Vec::new();
    let mut origin: Option<NaiveDateTime> = None;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let bad = |msg: String| Error::Parse { line, msg };
        if rec.len() != 2 {
            return Err(bad(format!("expected 2 fields, found {}", rec.len())));
        }
        let ts =
            parse_timestamp(&rec[0]).ok_or_else(|| bad(format!("bad timestamp `{}`", &rec[0])))?;
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| bad(format!("bad value `{}`", &rec[1])))?;
        if !v.is_finite() || v < 0.0 {
            return Err(bad(format!(
                "value {v} is not a finite non-negative number"
            )));
        }
        if ts.second() != 0 || ts.minute() as i64 % step != 0 {
            return Err(bad(format!("{ts} is not on the {step}-minute grid")));
        }
        let start = *origin.get_or_insert_with(|| ts.date().and_hms_opt(0, 0, 0).unwrap());
        let idx = (ts - start).num_minutes() / step;
        if let Some(&(prev, _)) = samples.last() {
            if idx <= prev {
                return Err(bad(format!("timestamp {ts} is not after the previous row")));
            }
        }
        samples.push((idx, v));
    }
    let Some(origin) = origin else {
        return Err(Error::Empty("no data rows".into()));
    };

    let last = samples.last().unwrap().0 as usize;
    let n_days = last / k + 1;
    let mut values: Vec<Option<f64>> = vec![None; n_days * k];
    for &(i, v) in &samples {
        values[i as usize] = Some(v);
    }
    let mut report = IngestReport::default();
    let mut long_gap_days = BTreeSet::new();
    for pair in samples.windows(2) {
        let ((a, va), (b, vb)) = (pair[0], pair[1]);
        let missing = (b - a - 1) as usize;
        if missing == 0 {
            continue;
        }
        if missing <= MAX_INTERPOLATED_GAP {
            for j in 1..=missing {
                let w = j as f64 / (missing + 1) as f64;
                values[a as usize + j] = Some(va + w * (vb - va));
            }
            report.interpolated += missing;
        } else {
            for g in (a as usize + 1)..(b as usize) {
                long_gap_days.insert(g / k);
            }
        }
    }

    let first_day = samples[0].0 as usize / k;
    let mut dates = Vec::new();
    let mut out = Vec::new();
    for d in first_day..n_days {
        let date = origin.date() + Duration::days(d as i64);
        let day = &values[d * k..(d + 1) * k];
        if long_gap_days.contains(&d) {
            log::warn!("excluding {date}: gap longer than {MAX_INTERPOLATED_GAP} intervals");
            report.excluded_days.push(date);
        } else if day.iter().any(Option::is_none) {
            log::info!("trimming partial day {date}");
            report.trimmed_days.push(date);
        } else {
            dates.push(date);
            out.extend(day.iter().map(|v| v.unwrap()));
        }
    }
    if dates.is_empty() {
        return Err(Error::Empty("no complete days".into()));
    }
    Ok((LoadSeries::new(grid, dates, out)?, report))
}

pub fn ingest_load(path: &Path, grid: GridSpec) -> Result<LoadSeries> {
    Ok(read_series(BufReader::new(File::open(path)?), grid, LOAD_COLUMN)?.0)
}

pub fn ingest_solar(path: &Path, grid: GridSpec) -> Result<LoadSeries> {
    Ok(read_series(BufReader::new(File::open(path)?), grid, SOLAR_COLUMN)?.0)
}

/// Writes a series in the ingestion format; values round-trip exactly.
pub fn write_series<W: Write>(out: W, series: &LoadSeries, column: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", column])?;
    for (g, v) in series.values().iter().enumerate() {
        w.write_record([
            series.timestamp(g).format(TIMESTAMP_FORMAT).to_string(),
            v.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_file(path: &Path, series: &LoadSeries, column: &str) -> Result<()> {
    write_series(BufWriter::new(File::create(path)?), series, column)
}

pub fn write_records<W: Write>(out: W, records: &[ForecastRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "origin", "target_ts", "forecast_kw", "actual_kw"])?;
    for r in records {
        w.write_record([
            r.model.clone(),
            r.origin.format(TIMESTAMP_FORMAT).to_string(),
            r.target.format(TIMESTAMP_FORMAT).to_string(),
            r.forecast.to_string(),
            r.actual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_json<W: Write>(out: W, report: &MetricsReport) -> Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

pub fn read_report_json(path: &Path) -> Result<MetricsReport> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Relative-RMSE table: one row per model, one column per month, then the
/// whole span. Several reports (e.g. a day-ahead and an hourly run) stack
/// into one table with a leading `group` column.
pub fn write_report_table<W: Write>(out: W, reports: &[MetricsReport]) -> Result<()> {
    let months: BTreeSet<&str> = reports
        .iter()
        .flat_map(|r| &r.models)
        .flat_map(|m| m.months.iter().map(|p| p.period.as_str()))
        .collect();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["group", "model"];
    header.extend(months.iter().copied());
    header.push("full");
    w.write_record(&header)?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for report in reports {
        let group = match report.mode {
            Mode::DayAhead => "day_ahead",
            Mode::Hourly => "hourly",
        };
        for m in &report.models {
            let mut row = vec![group.to_string(), m.model.clone()];
            for month in &months {
                row.push(cell(
                    m.months
                        .iter()
                        .find(|p| p.period == *month)
                        .and_then(|p| p.relative_rmse),
                ));
            }
            row.push(cell(m.full.relative_rmse));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
