//! CSV column ingestion.

use std::fmt;
use std::path::Path;

const MAX_DIAGNOSTICS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct DataColumn {
    pub values: Vec<f64>,
    pub source: String,
    pub column: String,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestError {
    pub message: String,
    pub diagnostics: Vec<String>,
}

impl fmt::Display for IngestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)?;
        for d in &self.diagnostics {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

fn fail(message: impl Into<String>) -> IngestError {
    IngestError {
        message: message.into(),
        diagnostics: Vec::new(),
    }
}

fn parse_finite(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads one numeric column. The first row is a header when any of its cells
/// is not a number; `column` is a header name or a 0-based index.
pub fn read_column(path: &Path, column: Option<&str>) -> Result<DataColumn, IngestError> {
    let source = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(format!("cannot read {source}: {e}")))?;
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        records.push(rec.map_err(|e| fail(format!("{source}, row {}: {e}", i + 1)))?);
    }
    let Some(first) = records.first() else {
        return Err(fail(format!("{source} is empty")));
    };
    let header = first.iter().any(|c| parse_finite(c).is_none());
    let names: Vec<String> = if header { first.iter().map(str::to_string).collect() } else { Vec::new() };

    let index = match column {
        None => 0,
        Some(c) => match c.trim().parse::<usize>() {
            Ok(i) => i,
            Err(_) => names
                .iter()
                .position(|h| h.eq_ignore_ascii_case(c.trim()))
                .ok_or_else(|| {
                    if header {
                        fail(format!("column '{c}' not found in {source}; header is [{}]", names.join(", ")))
                    } else {
                        fail(format!("column '{c}' requested by name but {source} has no header row"))
                    }
                })?,
        },
    };
    let label = names.get(index).cloned().unwrap_or_else(|| index.to_string());

    let skip = usize::from(header);
    let mut values = Vec::with_capacity(records.len());
    let mut bad = Vec::new();
    for (i, rec) in records.iter().enumerate().skip(skip) {
        let row = i + 1;
        match rec.get(index) {
            None => bad.push(format!("row {row}: no column {index} ({} fields)", rec.len())),
            Some(cell) => match parse_finite(cell) {
                Some(v) => values.push(v),
                None => bad.push(format!("row {row}: '{cell}' is not a finite number")),
            },
        }
    }
    if !bad.is_empty() {
        let count = bad.len();
        bad.truncate(MAX_DIAGNOSTICS);
        return Err(IngestError {
            message: format!("{count} row(s) of {source} rejected in column '{label}'"),
            diagnostics: bad,
        });
    }
    if values.is_empty() {
        return Err(fail(format!("{source} has no data rows")));
    }
    Ok(DataColumn {
        n: values.len(),
        values,
        source,
        column: label,
    })
}
