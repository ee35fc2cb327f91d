//! Two-column CSV input and 12-significant-digit CSV/JSON output.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// One data row with the 1-based line it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub line: usize,
    pub x: f64,
    pub y: f64,
}

/// Reads `x,y` rows. A first line that does not parse as numbers is taken
/// as a header; blank lines and `#` comments are skipped.
pub fn read_two_columns(path: &Path) -> Result<Vec<Row>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_two_columns(&text, &path.display().to_string())
}

pub fn parse_two_columns(text: &str, source_name: &str) -> Result<Vec<Row>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let parse_err = |line: usize, reason: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        reason,
    };
    let mut rows = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let numbers: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();
        let header = first && numbers.iter().all(Option::is_none);
        first = false;
        if header {
            continue;
        }
        if record.len() != 2 {
            return Err(parse_err(
                line,
                format!("expected 2 columns, found {}", record.len()),
            ));
        }
        match (numbers[0], numbers[1]) {
            (Some(x), Some(y)) if x.is_finite() && y.is_finite() => rows.push(Row { line, x, y }),
            (Some(_), Some(_)) => return Err(parse_err(line, "non-finite value".into())),
            _ => {
                return Err(parse_err(
                    line,
                    format!(
                        "cannot parse `{}` as two numbers",
                        record.iter().collect::<Vec<_>>().join(",")
                    ),
                ))
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{source_name}: no data rows")));
    }
    Ok(rows)
}

/// Rounds to 12 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

pub fn format_number(v: f64) -> String {
    format!("{}", round_sig(v))
}

/// Writes a CSV with a header line and numeric rows.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Precondition(format!(
                "row has {} values for {} columns",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(|v| format_number(*v)))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Data(format!("{other:?}")),
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = to_json_string(value)?;
    File::create(path)?.write_all(s.as_bytes())?;
    Ok(())
}

fn round_json(v: &mut serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}
