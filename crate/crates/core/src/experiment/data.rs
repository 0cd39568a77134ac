use std::path::Path;

use crate::error::{Error, Result};

/// Daily log-returns with optional ISO dates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsSeries {
    pub dates: Option<Vec<String>>,
    pub log_returns: Vec<f64>,
}

impl ReturnsSeries {
    pub fn len(&self) -> usize {
        self.log_returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_returns.is_empty()
    }
}

/// Reads a CSV with a `log_return` column and an optional `date` column.
/// Line numbers in errors count the header as line 1.
pub fn load_returns(path: &Path) -> Result<ReturnsSeries> {
    let fail = |message: String| Error::Data {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let headers = reader.headers().map_err(|e| fail(e.to_string()))?.clone();
    let value_col = headers
        .iter()
        .position(|h| h == "log_return")
        .ok_or_else(|| fail("missing `log_return` column".into()))?;
    let date_col = headers.iter().position(|h| h == "date");

    let mut values = Vec::new();
    let mut dates = date_col.map(|_| Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = record.get(value_col).unwrap_or("");
        let v: f64 = field
            .parse()
            .map_err(|_| fail(format!("line {line}: cannot parse `{field}` as a number")))?;
        if !v.is_finite() {
            return Err(fail(format!("line {line}: non-finite value `{field}`")));
        }
        values.push(v);
        if let (Some(ds), Some(c)) = (dates.as_mut(), date_col) {
            ds.push(record.get(c).unwrap_or("").to_string());
        }
    }
    if values.is_empty() {
        return Err(fail("no data rows".into()));
    }
    Ok(ReturnsSeries {
        dates,
        log_returns: values,
    })
}
