//! Series and table ingestion, quarterly dates, and report writers.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use tvarma_core::path::{Regime, Time};
use tvarma_core::process::SimulationRun;

use crate::error::{CliError, Result};

/// A calendar quarter such as `1986Q2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter {
    pub year: i32,
    /// 1 to 4.
    pub quarter: u8,
}

impl Quarter {
    pub fn new(year: i32, quarter: u8) -> Option<Self> {
        (1..=4).contains(&quarter).then_some(Quarter { year, quarter })
    }

    /// Quarters elapsed since `origin` (negative before it).
    pub fn index_from(self, origin: Quarter) -> Time {
        (self.year as Time - origin.year as Time) * 4 + (self.quarter as Time - origin.quarter as Time)
    }

    pub fn from_index(origin: Quarter, index: Time) -> Quarter {
        let n = origin.year as Time * 4 + (origin.quarter as Time - 1) + index;
        Quarter { year: n.div_euclid(4) as i32, quarter: (n.rem_euclid(4) + 1) as u8 }
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected a quarter like 1986Q2, got {0:?}")]
pub struct QuarterParseError(String);

impl FromStr for Quarter {
    type Err = QuarterParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let err = || QuarterParseError(s.to_string());
        let t = s.trim();
        let (y, q) = t.split_once(['Q', 'q']).ok_or_else(err)?;
        let y = y.trim_end_matches(['-', ' ']);
        let year = y.parse().map_err(|_| err())?;
        let quarter = q.parse().map_err(|_| err())?;
        Quarter::new(year, quarter).ok_or_else(err)
    }
}

/// How the first column of a series file is interpreted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Calendar {
    /// Integer time indices.
    Index,
    /// Quarterly dates, indexed from `origin`.
    Quarterly { origin: Quarter },
}

impl Calendar {
    pub fn label(&self, t: Time) -> String {
        match self {
            Calendar::Index => t.to_string(),
            Calendar::Quarterly { origin } => Quarter::from_index(*origin, t).to_string(),
        }
    }
}

/// An observed series on consecutive time indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub start: Time,
    pub values: Vec<f64>,
    pub calendar: Calendar,
}

impl Series {
    pub fn end(&self) -> Time {
        self.start + self.values.len() as Time - 1
    }

    pub fn get(&self, t: Time) -> Option<f64> {
        usize::try_from(t - self.start).ok().and_then(|i| self.values.get(i).copied())
    }

    pub fn label(&self, t: Time) -> String {
        self.calendar.label(t)
    }
}

fn csv_err(context: &str) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv { context: context.to_string(), source }
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

/// Reads a `(date, value)` CSV with a header row. Dates are either integer
/// indices or quarters; quarters are indexed from `origin`, or from the
/// first row when `origin` is `None`. Rows must be consecutive.
pub fn read_series<R: Read>(reader: R, origin: Option<Quarter>) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut calendar = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err("series"))?;
        let line = i + 2;
        if rec.len() < 2 {
            return Err(CliError::Data(format!("line {line}: expected columns date,value")));
        }
        let date = &rec[0];
        let value: f64 = rec[1]
            .parse()
            .map_err(|_| CliError::Data(format!("line {line}: value {:?} is not a number", &rec[1])))?;
        let cal = *calendar.get_or_insert_with(|| match (date.parse::<Time>(), date.parse::<Quarter>()) {
            (Ok(_), _) => Calendar::Index,
            (_, Ok(q)) => Calendar::Quarterly { origin: origin.unwrap_or(q) },
            _ => Calendar::Index,
        });
        let t = match cal {
            Calendar::Index => date
                .parse::<Time>()
                .map_err(|_| CliError::Data(format!("line {line}: date {date:?} is not an integer index")))?,
            Calendar::Quarterly { origin } => date
                .parse::<Quarter>()
                .map_err(|e| CliError::Data(format!("line {line}: {e}")))?
                .index_from(origin),
        };
        if let Some(&prev) = times.last() {
            if t != prev + 1 {
                return Err(CliError::Data(format!("line {line}: dates are not consecutive")));
            }
        }
        times.push(t);
        values.push(value);
    }
    if values.is_empty() {
        return Err(CliError::Data("series is empty".into()));
    }
    Ok(Series { start: times[0], values, calendar: calendar.unwrap_or(Calendar::Index) })
}

pub fn read_series_file(path: &Path, origin: Option<Quarter>) -> Result<Series> {
    read_series(open(path)?, origin)
}

/// Reads the custom table layout: header `t,drift,phi1..phiP,theta1..thetaQ,sigma2`
/// (any subset of the coefficient columns, in any order), one row per
/// consecutive time. Returns the first time and the rows.
pub fn read_table<R: Read>(reader: R) -> Result<(Time, Vec<Regime>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err("table"))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let lagged = |prefix: &str| {
        let mut cols = Vec::new();
        while let Some(c) = col(&format!("{prefix}{}", cols.len() + 1)) {
            cols.push(c);
        }
        cols
    };
    let t_col = col("t").ok_or_else(|| CliError::Data("table needs a `t` column".into()))?;
    let (drift_col, sigma_col) = (col("drift"), col("sigma2"));
    let (phi_cols, theta_cols) = (lagged("phi"), lagged("theta"));
    let mut start = None;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err("table"))?;
        let line = i + 2;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Data(format!("line {line}: column {} is not a number", &headers[c])))
        };
        let t: Time = rec[t_col].parse().map_err(|_| CliError::Data(format!("line {line}: bad time index")))?;
        let expected = *start.get_or_insert(t) + rows.len() as Time;
        if t != expected {
            return Err(CliError::Data(format!("line {line}: expected t = {expected}")));
        }
        rows.push(Regime {
            drift: drift_col.map(num).transpose()?.unwrap_or(0.0),
            phi: phi_cols.iter().map(|&c| num(c)).collect::<Result<_>>()?,
            theta: theta_cols.iter().map(|&c| num(c)).collect::<Result<_>>()?,
            sigma2: sigma_col.map(num).transpose()?.unwrap_or(1.0),
        });
    }
    let start = start.ok_or_else(|| CliError::Data("table is empty".into()))?;
    Ok((start, rows))
}

pub fn read_table_file(path: &Path) -> Result<(Time, Vec<Regime>)> {
    read_table(open(path)?)
}

/// Rows of a CSV document: a header and records of display-formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grid {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Grid {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Grid { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.header).map_err(csv_err("output"))?;
        for r in &self.rows {
            wtr.write_record(r).map_err(csv_err("output"))?;
        }
        wtr.flush().map_err(|e| CliError::io("<output>", e))
    }
}

/// Shortest round-trip representation, so outputs diff cleanly.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn simulation_grid(run: &SimulationRun, calendar: Calendar) -> Grid {
    let mut g = Grid::new(["t", "date", "y", "eps"]);
    for t in run.start..=run.end {
        g.push(vec![
            t.to_string(),
            calendar.label(t),
            num(run.y_at(t).unwrap_or(f64::NAN)),
            num(run.eps_at(t).unwrap_or(f64::NAN)),
        ]);
    }
    g
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|source| CliError::Json { context: "output".into(), source })
}

pub fn from_json<T: serde::de::DeserializeOwned>(text: &str, context: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|source| CliError::Json { context: context.into(), source })
}
