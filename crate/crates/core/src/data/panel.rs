//! Quarterly panels and their CSV representation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Conventional column names.
pub const COL_X: &str = "x";
pub const COL_PI: &str = "pi";
pub const COL_I: &str = "i";
pub const COL_RN: &str = "r_n";

/// A period label: a calendar quarter, or a plain step index for synthetic
/// samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Period {
    Quarter { year: i32, quarter: u8 },
    Step(i64),
}

impl Period {
    pub fn quarter(year: i32, quarter: u8) -> Self {
        debug_assert!((1..=4).contains(&quarter));
        Period::Quarter { year, quarter }
    }

    /// Position on a common integer line: quarters since year 0.
    pub fn ordinal(self) -> i64 {
        match self {
            Period::Quarter { year, quarter } => year as i64 * 4 + (quarter as i64 - 1),
            Period::Step(t) => t,
        }
    }

    pub fn offset(self, k: i64) -> Self {
        match self {
            Period::Quarter { .. } => {
                let ord = self.ordinal() + k;
                Period::Quarter {
                    year: ord.div_euclid(4) as i32,
                    quarter: (ord.rem_euclid(4) + 1) as u8,
                }
            }
            Period::Step(t) => Period::Step(t + k),
        }
    }

    pub fn next(self) -> Self {
        self.offset(1)
    }

    fn same_kind(self, other: Period) -> bool {
        matches!(
            (self, other),
            (Period::Quarter { .. }, Period::Quarter { .. }) | (Period::Step(_), Period::Step(_))
        )
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Quarter { year, quarter } => write!(f, "{year}Q{quarter}"),
            Period::Step(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for Period {
    type Err = Error;

    /// Accepts `YYYYQn`, `YYYY:Qn`, `YYYY-MM-DD` (month mapped to its quarter)
    /// and bare integers.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Data(format!("unparseable date `{s}`"));
        if let Some((y, q)) = s.split_once('Q').or_else(|| s.split_once('q')) {
            let year: i32 = y.trim_end_matches(':').parse().map_err(|_| bad())?;
            let quarter: u8 = q.parse().map_err(|_| bad())?;
            if !(1..=4).contains(&quarter) {
                return Err(bad());
            }
            return Ok(Period::quarter(year, quarter));
        }
        let parts: Vec<&str> = s.split('-').collect();
        if parts.len() == 3 && parts[0].len() == 4 {
            let year: i32 = parts[0].parse().map_err(|_| bad())?;
            let month: u8 = parts[1].parse().map_err(|_| bad())?;
            let day: u8 = parts[2].parse().map_err(|_| bad())?;
            if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
                return Err(bad());
            }
            return Ok(Period::quarter(year, (month - 1) / 3 + 1));
        }
        s.parse::<i64>().map(Period::Step).map_err(|_| bad())
    }
}

/// Aligned quarterly observations keyed by column name.
///
/// Missing values are stored as NaN. The conventional columns are `x`
/// (output gap), `pi` (inflation), `i` (policy rate) and `r_n` (real-rate
/// proxy); anything else, such as a labor share, is kept under its own name.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    dates: Vec<Period>,
    columns: BTreeMap<String, Vec<f64>>,
    /// Column order as loaded, for stable CSV output.
    order: Vec<String>,
    /// Whether `pi` is annualized (true) or a quarterly rate.
    pub inflation_annualized: bool,
}

impl TimeSeriesPanel {
    pub fn new(dates: Vec<Period>) -> Result<Self> {
        check_dates(&dates)?;
        Ok(Self {
            dates,
            columns: BTreeMap::new(),
            order: Vec::new(),
            inflation_annualized: true,
        })
    }

    /// Panel indexed by steps `1..=len`.
    pub fn with_steps(len: usize) -> Self {
        Self {
            dates: (1..=len as i64).map(Period::Step).collect(),
            columns: BTreeMap::new(),
            order: Vec::new(),
            inflation_annualized: true,
        }
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.dates.len() {
            return Err(Error::Data(format!(
                "column `{name}` has {} values for {} dates",
                values.len(),
                self.dates.len()
            )));
        }
        if name == "date" || name.is_empty() {
            return Err(Error::Data(format!("invalid column name `{name}`")));
        }
        if self.columns.insert(name.clone(), values).is_none() {
            self.order.push(name);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[Period] {
        &self.dates
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.column(name)
            .ok_or_else(|| Error::Data(format!("panel has no column `{name}`")))
    }

    pub fn column_names(&self) -> &[String] {
        &self.order
    }

    pub fn x(&self) -> Result<&[f64]> {
        self.require(COL_X)
    }

    pub fn pi(&self) -> Result<&[f64]> {
        self.require(COL_PI)
    }

    pub fn i(&self) -> Result<&[f64]> {
        self.require(COL_I)
    }

    /// Rows `range` of every column.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            dates: self.dates[start..end].to_vec(),
            columns: self
                .columns
                .iter()
                .map(|(k, v)| (k.clone(), v[start..end].to_vec()))
                .collect(),
            order: self.order.clone(),
            inflation_annualized: self.inflation_annualized,
        }
    }

    /// Keeps rows whose date lies in `[first, last]`.
    pub fn window(&self, first: Period, last: Period) -> Self {
        let start = self.dates.partition_point(|d| *d < first);
        let end = self.dates.partition_point(|d| *d <= last);
        self.slice(start, end.max(start))
    }

    /// Keeps only the listed columns, in the listed order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let mut out = Self {
            dates: self.dates.clone(),
            columns: BTreeMap::new(),
            order: Vec::new(),
            inflation_annualized: self.inflation_annualized,
        };
        for name in names {
            out.push_column(*name, self.require(name)?.to_vec())?;
        }
        Ok(out)
    }

    /// Observation rows as vectors over `names`.
    pub fn rows(&self, names: &[&str]) -> Result<Vec<Vec<f64>>> {
        let cols: Vec<&[f64]> = names.iter().map(|n| self.require(n)).collect::<Result<_>>()?;
        Ok((0..self.len()).map(|t| cols.iter().map(|c| c[t]).collect()).collect())
    }

    /// Writes `date,<columns...>` with full-precision floats.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(self.order.iter().cloned());
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut rec = vec![self.dates[t].to_string()];
            for name in &self.order {
                let v = self.columns[name][t];
                rec.push(if v.is_nan() { String::new() } else { format!("{v:?}") });
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

pub(crate) fn check_dates(dates: &[Period]) -> Result<()> {
    for w in dates.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateDate(w[1].to_string()));
        }
        if !w[0].same_kind(w[1]) {
            return Err(Error::Data("mixed date formats".into()));
        }
        if w[1] < w[0] {
            return Err(Error::Data(format!("dates not increasing at {}", w[1])));
        }
        if w[1].ordinal() != w[0].ordinal() + 1 {
            return Err(Error::Data(format!("gap in dates between {} and {}", w[0], w[1])));
        }
    }
    Ok(())
}
