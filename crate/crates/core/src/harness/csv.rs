use std::fmt::Write as _;
use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

pub fn format_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = DiagnosticsRecord::COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let row: Vec<String> = r.values().iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn write_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    std::fs::write(path, format_csv(records)).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str, path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    if header != DiagnosticsRecord::COLUMNS.join(",") {
        return Err(err(1, "unexpected header".into()));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let ln = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| err(ln, format!("bad number `{s}`")))
            })
            .collect::<Result<_>>()?;
        let arr: [f64; 16] = vals
            .try_into()
            .map_err(|v: Vec<f64>| err(ln, format!("expected 16 columns, found {}", v.len())))?;
        out.push(DiagnosticsRecord::from_values(arr));
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}
