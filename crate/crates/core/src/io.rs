//! Tick ingestion, previous-tick regularization and number formatting.
//!
//! All CSV written by this crate uses a header row, `,` as delimiter, `.` as
//! decimal point, `\n` line endings and 17 significant digits.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{domain, Error, Result};
use crate::simulate::Observations;

/// Formats with 17 significant digits (scientific notation), enough to
/// round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Irregularly spaced trades or quotes.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    pub timestamps: Vec<f64>,
    pub prices: Vec<f64>,
}

impl TickSeries {
    pub fn new(timestamps: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(domain("timestamps and prices differ in length"));
        }
        if timestamps.len() < 2 {
            return Err(domain("a tick series needs at least two ticks"));
        }
        if let Some(i) = timestamps.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(domain(format!("timestamps not strictly increasing at tick {}", i + 1)));
        }
        Ok(Self { timestamps, prices })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// A column chosen by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Name(String),
    Index(usize),
}

impl From<&str> for Column {
    /// Digits select by position, anything else by name.
    fn from(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub time: Column,
    pub price: Column,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self { time: Column::Name("time".into()), price: Column::Name("price".into()) }
    }
}

pub fn load_ticks(path: impl AsRef<Path>, columns: &ColumnSpec) -> Result<TickSeries> {
    let mut text = String::new();
    File::open(path.as_ref())?.read_to_string(&mut text)?;
    parse_ticks(&text, columns)
}

/// Parses delimited tick text with a header row. Line numbers in errors are
/// 1-based and count the header.
pub fn parse_ticks(text: &str, columns: &ColumnSpec) -> Result<TickSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Load { line: 1, message: e.to_string() })?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Load { line: 1, message: "empty file or missing header".into() });
    }
    let locate = |col: &Column| -> Result<usize> {
        match col {
            Column::Index(i) if *i < headers.len() => Ok(*i),
            Column::Index(i) => Err(Error::Load {
                line: 1,
                message: format!("column index {i} out of range ({} columns)", headers.len()),
            }),
            Column::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Load { line: 1, message: format!("missing column `{name}`") }),
        }
    };
    let (tcol, pcol) = (locate(&columns.time)?, locate(&columns.price)?);

    let mut timestamps = Vec::new();
    let mut prices = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| Error::Load { line: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, what: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Load { line, message: format!("unparseable {what} `{raw}`") })
        };
        let t = field(tcol, "timestamp")?;
        let p = field(pcol, "price")?;
        if let Some(&prev) = timestamps.last() {
            if !(t > prev) {
                return Err(Error::Load { line, message: format!("timestamp {t} does not increase past {prev}") });
            }
        }
        timestamps.push(t);
        prices.push(p);
    }
    if timestamps.len() < 2 {
        return Err(Error::Load {
            line: timestamps.len() + 1,
            message: format!("need at least two ticks, found {}", timestamps.len()),
        });
    }
    TickSeries::new(timestamps, prices)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transform {
    #[default]
    Log,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizeOptions {
    pub transform: Transform,
    /// Minimum ratio of ticks to grid intervals before a sparsity warning.
    pub min_density: f64,
}

impl Default for RegularizeOptions {
    fn default() -> Self {
        Self { transform: Transform::Log, min_density: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regularized {
    pub obs: Observations,
    /// Set when the ticks are sparse relative to the grid.
    pub warning: Option<String>,
}

/// Maps the tick span onto `[0, 1]` and samples the last tick at or before
/// each grid time `i/n`.
pub fn regularize(ticks: &TickSeries, n: usize, options: RegularizeOptions) -> Result<Regularized> {
    if n < 16 {
        return Err(domain(format!("regularization needs n >= 16, got {n}")));
    }
    if options.transform == Transform::Log {
        if let Some(p) = ticks.prices.iter().find(|p| !(**p > 0.0)) {
            return Err(domain(format!("log transform needs positive prices, got {p}")));
        }
    }
    let t0 = ticks.timestamps[0];
    let span = ticks.timestamps[ticks.len() - 1] - t0;
    let tol = 1e-9 * span;
    let mut y = Vec::with_capacity(n + 1);
    let mut j = 0usize;
    for i in 0..=n {
        let t = t0 + span * (i as f64 / n as f64);
        while j + 1 < ticks.len() && ticks.timestamps[j + 1] <= t + tol {
            j += 1;
        }
        let p = ticks.prices[j];
        y.push(match options.transform {
            Transform::Log => p.ln(),
            Transform::Raw => p,
        });
    }
    let density = (ticks.len() - 1) as f64 / n as f64;
    let warning = (density < options.min_density).then(|| {
        format!(
            "{} ticks for {n} grid intervals (density {density:.3} < {}); previous-tick values repeat",
            ticks.len(),
            options.min_density
        )
    });
    Ok(Regularized { obs: Observations::from_values(y)?, warning })
}
