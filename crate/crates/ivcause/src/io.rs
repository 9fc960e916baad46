//! CSV tables and the standardization sidecar.
//!
//! Canonical CSV: comma separated, mandatory header, `.` decimal point, and
//! numbers written with 17 significant digits in C `%.17g` style, so that
//! loading and re-writing a canonical file reproduces it byte for byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ivcause_core::{Dataset, StandardizationRecord};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row} (line {line}) has {found} fields, header has {expected}")]
    Ragged {
        row: usize,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("row {row} (line {line}), column `{column}`: cannot parse `{value}` as a number")]
    Parse {
        row: usize,
        line: u64,
        column: String,
        value: String,
    },

    #[error("missing header row")]
    MissingHeader,

    #[error(transparent)]
    Invalid(#[from] ivcause_core::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Parses a CSV table. Data rows are numbered from 0 in errors.
pub fn load_table<R: Read>(source: R) -> Result<Dataset, TableError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = rdr.headers()?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(TableError::MissingHeader);
    }
    let names: Vec<String> = header.iter().map(str::to_owned).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(TableError::Ragged {
                row,
                line,
                expected: names.len(),
                found: record.len(),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| TableError::Parse {
                row,
                line,
                column: names[j].clone(),
                value: field.to_owned(),
            })?;
            columns[j].push(v);
        }
    }
    Ok(Dataset::new(names, columns)?)
}

pub fn load_table_path(path: &Path) -> Result<Dataset, TableError> {
    load_table(BufReader::new(File::open(path)?))
}

/// Writes a table in canonical form.
pub fn write_table<W: Write>(sink: W, d: &Dataset) -> Result<(), TableError> {
    let mut w = csv::WriterBuilder::new().from_writer(sink);
    w.write_record(d.names())?;
    let mut row = Vec::with_capacity(d.names().len());
    for i in 0..d.n() {
        row.clear();
        row.extend(d.columns().iter().map(|c| format_number(c[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table_path(path: &Path, d: &Dataset) -> Result<(), TableError> {
    write_table(BufWriter::new(File::create(path)?), d)
}

/// `{"name": {"mean": m, "sd": s}, ...}`
pub fn write_standardization<W: Write>(sink: W, rec: &StandardizationRecord) -> Result<(), TableError> {
    serde_json::to_writer_pretty(sink, rec)?;
    Ok(())
}

pub fn read_standardization<R: Read>(source: R) -> Result<StandardizationRecord, TableError> {
    Ok(serde_json::from_reader(source)?)
}

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed,
/// exponent form outside `1e-4 <= |x| < 1e17`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();

    let mut out = String::with_capacity(26);
    if negative {
        out.push('-');
    }
    if !(-4..17).contains(&exp) {
        let mut m = String::new();
        m.push_str(&digits[..1]);
        let frac = digits[1..].trim_end_matches('0');
        if !frac.is_empty() {
            m.push('.');
            m.push_str(frac);
        }
        out.push_str(&m);
        out.push('e');
        out.push(if exp < 0 { '-' } else { '+' });
        out.push_str(&format!("{:02}", exp.abs()));
    } else if exp >= 0 {
        let int_len = exp as usize + 1;
        out.push_str(&digits[..int_len]);
        let frac = digits[int_len..].trim_end_matches('0');
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
    } else {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(digits.trim_end_matches('0'));
    }
    out
}
