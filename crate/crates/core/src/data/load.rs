use std::collections::HashSet;
use std::path::Path;

use crate::data::panel::{check_dates, Period, TimeSeriesPanel};
use crate::error::{Error, Result};

/// Which columns to read and which dates to keep.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PanelSchema {
    /// Header of the date column; `date` when `None`.
    pub date_column: Option<String>,
    /// Columns to keep. Empty means all non-date columns.
    pub columns: Vec<String>,
    /// Inclusive sample window.
    pub window: Option<(Period, Period)>,
    pub inflation_annualized: bool,
}

impl PanelSchema {
    pub fn with_window(first: Period, last: Period) -> Self {
        Self {
            window: Some((first, last)),
            inflation_annualized: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPanel {
    pub panel: TimeSeriesPanel,
    /// Rows inside the window dropped for missing values.
    pub dropped_rows: usize,
}

pub fn load_panel(path: impl AsRef<Path>, schema: &PanelSchema) -> Result<LoadedPanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_panel(file, schema)
}

/// Parses a CSV panel. Empty cells, `NA`, `NaN` and `.` are missing values.
/// Incomplete rows are dropped; the surviving dates must still be gap-free.
pub fn read_panel<R: std::io::Read>(reader: R, schema: &PanelSchema) -> Result<LoadedPanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let date_name = schema.date_column.as_deref().unwrap_or("date");
    let date_idx = headers
        .iter()
        .position(|h| h == date_name)
        .ok_or_else(|| Error::Data(format!("no `{date_name}` column")))?;
    let wanted: Vec<String> = if schema.columns.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != date_idx)
            .map(|(_, h)| h.to_string())
            .collect()
    } else {
        schema.columns.clone()
    };
    if wanted.is_empty() {
        return Err(Error::Data("no data columns requested".into()));
    }
    let idx: Vec<usize> = wanted
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::Data(format!("requested column `{c}` not in file")))
        })
        .collect::<Result<_>>()?;

    let mut seen = HashSet::new();
    let mut rows: Vec<(Period, Vec<f64>)> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let date: Period = rec
            .get(date_idx)
            .unwrap_or("")
            .parse()
            .map_err(|e| Error::Data(format!("row {}: {e}", line + 2)))?;
        if !seen.insert(date) {
            return Err(Error::DuplicateDate(date.to_string()));
        }
        let values = idx
            .iter()
            .map(|&k| parse_value(rec.get(k).unwrap_or("")))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::Data(format!("row {}: non-numeric value", line + 2)))?;
        rows.push((date, values));
    }
    rows.sort_by_key(|r| r.0);
    if let Some((first, last)) = schema.window {
        rows.retain(|(d, _)| *d >= first && *d <= last);
    }
    let before = rows.len();
    rows.retain(|(_, v)| v.iter().all(|x| x.is_finite()));
    let dropped_rows = before - rows.len();
    if rows.is_empty() {
        return Err(Error::Data("no complete rows for the requested columns".into()));
    }
    let dates: Vec<Period> = rows.iter().map(|r| r.0).collect();
    check_dates(&dates)?;
    let mut panel = TimeSeriesPanel::new(dates)?;
    panel.inflation_annualized = schema.inflation_annualized;
    for (k, name) in wanted.iter().enumerate() {
        panel.push_column(name.clone(), rows.iter().map(|r| r.1[k]).collect())?;
    }
    Ok(LoadedPanel { panel, dropped_rows })
}

fn parse_value(s: &str) -> Option<f64> {
    match s {
        "" | "NA" | "NaN" | "nan" | "." => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, schema: &PanelSchema) -> Result<LoadedPanel> {
        read_panel(text.as_bytes(), schema)
    }

    #[test]
    fn four_rows() {
        let text = "date,x,pi,i\n2000Q1,1,2,3\n2000Q2,1,2,3\n2000Q3,1,2,3\n2000Q4,1,2,3\n";
        let l = read(text, &PanelSchema::default()).unwrap();
        assert_eq!(l.panel.len(), 4);
        assert_eq!(l.dropped_rows, 0);
        assert_eq!(l.panel.column_names(), &["x", "pi", "i"]);
    }

    #[test]
    fn duplicate_quarter_is_named() {
        let text = "date,x\n2000-01-01,1\n2000-02-01,2\n";
        let err = read(text, &PanelSchema::default()).unwrap_err();
        assert!(err.to_string().contains("2000Q1"), "{err}");
    }

    #[test]
    fn missing_edges_are_dropped_and_counted() {
        let text = "date,x,pi\n2000Q1,,2\n2000Q2,1,2\n2000Q3,1,2\n2000Q4,1,NA\n";
        let l = read(text, &PanelSchema::default()).unwrap();
        assert_eq!((l.panel.len(), l.dropped_rows), (2, 2));
        // Missing values outside the requested columns do not matter.
        let schema = PanelSchema {
            columns: vec!["pi".into()],
            ..PanelSchema::default()
        };
        assert_eq!(read(text, &schema).unwrap().panel.len(), 3);
    }

    #[test]
    fn interior_gap_is_an_error() {
        let text = "date,x\n2000Q1,1\n2000Q2,\n2000Q3,1\n";
        assert!(read(text, &PanelSchema::default()).is_err());
    }

    #[test]
    fn bad_inputs() {
        assert!(read("date,x\nsoon,1\n", &PanelSchema::default()).is_err());
        assert!(read("when,x\n2000Q1,1\n", &PanelSchema::default()).is_err());
        let schema = PanelSchema {
            columns: vec!["y".into()],
            ..PanelSchema::default()
        };
        assert!(read("date,x\n2000Q1,1\n", &schema).is_err());
    }

    #[test]
    fn window_is_applied() {
        let mut text = String::from("date,x\n");
        let mut q = Period::quarter(1961, 1);
        while q <= Period::quarter(2017, 4) {
            text.push_str(&format!("{q},0.5\n"));
            q = q.next();
        }
        let schema = PanelSchema::with_window(Period::quarter(1962, 2), Period::quarter(2016, 4));
        assert_eq!(read(&text, &schema).unwrap().panel.len(), 219);
    }

    #[test]
    fn export_then_load_is_exact() {
        let mut p = TimeSeriesPanel::with_steps(3);
        p.push_column("x", vec![0.1, -1e-300, 1.0 / 3.0]).unwrap();
        p.push_column("pi", vec![f64::MAX, 2.5, -0.0]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let back = read_panel(buf.as_slice(), &PanelSchema {
            inflation_annualized: true,
            ..PanelSchema::default()
        })
        .unwrap();
        assert_eq!(back.panel, p);
    }
}
