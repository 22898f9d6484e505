//! CSV emission and parse-back of trajectories, summaries, indicator
//! series and histograms.
//!
//! Numbers are printed with six significant digits, except that the
//! integer part is never rounded away: a population count keeps all of
//! its digits.

use std::fs::File;
use std::path::Path;

use crate::ensemble::{EnsembleSummary, Histogram};
use crate::error::{Error, Result};
use crate::indicators::IndicatorSeries;
use crate::integrator::Trajectory;
use crate::model::Compartment;

pub const TRAJECTORY_HEADER: [&str; 11] = ["t", "S", "E", "I", "Iu", "HR", "HD", "Rd", "Ru", "D", "beta"];
pub const INDICATOR_HEADER: [&str; 9] = ["t", "cm", "dm", "Re", "Hos", "MHos", "GammaE", "GammaIu", "GammaH"];
pub const DAILY_HEADER: [&str; 4] = ["day", "daily_reported", "daily_deaths", "daily_recovered"];
pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_lower", "bin_upper", "count"];

/// Formats `x` with six significant digits, keeping every integer digit.
pub fn format_value(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    if x.fract() == 0.0 && x.abs() < 1e15 {
        return format!("{}", x as i64);
    }
    let magnitude = x.abs().log10().floor() as i32;
    if magnitude < -4 {
        let s = format!("{x:.5e}");
        let (mantissa, exponent) = s.split_once('e').expect("exponent present");
        return format!("{}e{exponent}", trim_zeros(mantissa));
    }
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    trim_zeros(&s).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn open_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

/// Writes a header and rows of formatted numbers.
pub fn write_numeric<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = open_writer(path)?;
    w.write_record(header).map_err(csv_error(path))?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_value(*v))).map_err(csv_error(path))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// `t,S,E,I,Iu,HR,HD,Rd,Ru,D,beta`, one row per node; round-off below zero
/// is clipped.
pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let grid = traj.grid();
    let rows = traj.states().iter().zip(traj.rate_path().values()).enumerate().map(|(i, (s, beta))| {
        let mut row = vec![grid.time(i)];
        row.extend(s.clipped().to_array());
        row.push(*beta);
        row
    });
    write_numeric(path, &TRAJECTORY_HEADER, rows)
}

pub fn write_indicators(traj: &Trajectory, ind: &IndicatorSeries, path: &Path) -> Result<()> {
    let grid = traj.grid();
    let rows = (0..grid.nodes()).map(|i| {
        vec![
            grid.time(i),
            ind.c_m[i],
            ind.d_m[i],
            ind.r_e[i],
            ind.hos[i],
            ind.mhos[i],
            ind.gamma_e[i],
            ind.gamma_iu[i],
            ind.gamma_h[i],
        ]
    });
    write_numeric(path, &INDICATOR_HEADER, rows)
}

pub fn write_daily(ind: &IndicatorSeries, path: &Path) -> Result<()> {
    let d = &ind.daily;
    let rows = (0..d.reported.len()).map(|k| vec![k as f64, d.reported[k], d.deaths[k], d.recovered[k]]);
    write_numeric(path, &DAILY_HEADER, rows)
}

/// Column name of the worst-case percentile, `p95` for 0.95.
pub fn percentile_column(p: f64) -> String {
    format!("p{}", format_value(p * 100.0))
}

/// `variable,t,mean,q1,q3,p95`.
pub fn write_summary(summary: &EnsembleSummary, path: &Path) -> Result<()> {
    let mut w = open_writer(path)?;
    let ws = percentile_column(summary.percentile_ws);
    w.write_record(["variable", "t", "mean", "q1", "q3", ws.as_str()]).map_err(csv_error(path))?;
    for r in &summary.rows {
        w.write_record([
            r.variable.name().to_string(),
            r.day.to_string(),
            format_value(r.mean),
            format_value(r.q1),
            format_value(r.q3),
            format_value(r.p_ws),
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn write_histogram(hist: &Histogram, path: &Path) -> Result<()> {
    write_numeric(path, &HISTOGRAM_HEADER, hist.bins().map(|(lo, hi, c)| vec![lo, hi, c as f64]))
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::Reader::from_path(path).map_err(csv_error(path))
}

/// Header and numeric rows of a file written by [`write_numeric`].
pub fn read_numeric(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = open_reader(path)?;
    let header = r.headers().map_err(csv_error(path))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_error(path))?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("{}: bad number `{field}`: {e}", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// A parsed summary row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub variable: String,
    pub t: f64,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
    pub p_ws: f64,
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRecord>> {
    let mut r = open_reader(path)?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_error(path))?;
        let num = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::Config(format!("{}: malformed summary row", path.display())))
        };
        out.push(SummaryRecord {
            variable: record.get(0).unwrap_or_default().to_string(),
            t: num(1)?,
            mean: num(2)?,
            q1: num(3)?,
            q3: num(4)?,
            p_ws: num(5)?,
        });
    }
    Ok(out)
}

/// Column index of a compartment in a trajectory file.
pub fn trajectory_column(c: Compartment) -> usize {
    c.index() + 1
}
