use std::path::Path;
use std::str::FromStr;

use chrono::Days;

use super::DailyRecord;
use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!(
                "unknown data format {other:?}, expected json or csv"
            ))),
        }
    }
}

/// Guess the format from the file extension.
pub fn infer_format(path: &Path) -> Result<Format> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => Ok(Format::Json),
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Ok(Format::Csv),
        _ => Err(Error::Config(format!(
            "cannot infer data format from {}; pass one explicitly",
            path.display()
        ))),
    }
}

/// Read an ordered, gap-free daily series.
///
/// JSON: a top-level array of objects
/// `{"date":"YYYY-MM-DD","positive":int,"deaths":int,"recovered":int}`.
/// CSV: header `date,positive,deaths,recovered`, one row per day.
pub fn ingest(path: &Path, format: Format) -> Result<Vec<DailyRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records = match format {
        Format::Json => serde_json::from_str::<Vec<DailyRecord>>(&text).map_err(|e| {
            Error::Data(format!(
                "{}: line {} column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })?,
        Format::Csv => {
            let mut rdr = csv::Reader::from_reader(text.as_bytes());
            let mut out = Vec::new();
            for row in rdr.deserialize::<DailyRecord>() {
                out.push(row.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?);
            }
            out
        }
    };
    validate_series(&records)?;
    Ok(records)
}

/// Enforce the series invariants: non-empty, strictly increasing dates with
/// no missing days.
pub fn validate_series(records: &[DailyRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Data("series contains no records".into()));
    }
    for (i, pair) in records.windows(2).enumerate() {
        let (a, b) = (pair[0].date, pair[1].date);
        if b == a {
            return Err(Error::Data(format!(
                "duplicated date {a} at records {i} and {}",
                i + 1
            )));
        }
        if b < a {
            return Err(Error::Data(format!(
                "dates out of order at record {}: {b} follows {a}",
                i + 1
            )));
        }
        if a.checked_add_days(Days::new(1)) != Some(b) {
            return Err(Error::Data(format!(
                "gap in series between {a} and {b} (records {i} and {})",
                i + 1
            )));
        }
    }
    Ok(())
}
