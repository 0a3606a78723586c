//! Result rows and their CSV / JSON serialization.
//!
//! The CSV starts with `#` lines: the schema tag, then one `# key=value` line per
//! resolved setting. The next line is the column row [`COLUMNS`], then one row per
//! result. Absent values are empty cells. Floats use Rust's shortest round-trip
//! exponent form (`1.5e-3`). The JSON summary carries the same header entries and
//! rows plus command-specific summary values.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "dequant-results/1";

pub const COLUMNS: [&str; 12] = [
    "command",
    "case",
    "alpha",
    "exact_value",
    "predicted_value",
    "residual",
    "mc_estimate",
    "mc_stderr",
    "slope",
    "bound",
    "seed",
    "wall_time_ms",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub command: String,
    pub case: String,
    pub alpha: Option<f64>,
    pub exact_value: Option<f64>,
    pub predicted_value: Option<f64>,
    pub residual: Option<f64>,
    pub mc_estimate: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub slope: Option<f64>,
    pub bound: Option<f64>,
    pub seed: u64,
    pub wall_time_ms: u64,
}

impl ResultRow {
    pub fn new(command: &str, case: impl Into<String>, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            case: case.into(),
            alpha: None,
            exact_value: None,
            predicted_value: None,
            residual: None,
            mc_estimate: None,
            mc_stderr: None,
            slope: None,
            bound: None,
            seed,
            wall_time_ms: 0,
        }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    /// Sets both values and `residual = exact − predicted`.
    pub fn compare(mut self, exact: f64, predicted: f64) -> Self {
        self.exact_value = Some(exact);
        self.predicted_value = Some(predicted);
        self.residual = Some(exact - predicted);
        self
    }

    pub fn exact(mut self, exact: f64) -> Self {
        self.exact_value = Some(exact);
        self
    }

    pub fn predicted(mut self, predicted: f64) -> Self {
        self.predicted_value = Some(predicted);
        self
    }

    pub fn mc(mut self, est: dequant::Estimate) -> Self {
        self.mc_estimate = Some(est.mean);
        self.mc_stderr = Some(est.stderr);
        self
    }

    pub fn slope(mut self, slope: Option<f64>) -> Self {
        self.slope = slope;
        self
    }

    pub fn bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    fn numbers(&self) -> [Option<f64>; 8] {
        [
            self.alpha,
            self.exact_value,
            self.predicted_value,
            self.residual,
            self.mc_estimate,
            self.mc_stderr,
            self.slope,
            self.bound,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.numbers().iter().flatten().all(|x| x.is_finite())
    }

    fn csv_line(&self) -> String {
        let mut cells = vec![csv_text(&self.command), csv_text(&self.case)];
        cells.extend(
            self.numbers()
                .iter()
                .map(|x| x.map(fmt_f64).unwrap_or_default()),
        );
        cells.push(self.seed.to_string());
        cells.push(self.wall_time_ms.to_string());
        cells.join(",")
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Everything one run emits.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub header: Vec<(String, String)>,
    pub rows: Vec<ResultRow>,
    pub summary: Map<String, Value>,
}

impl Report {
    pub fn check_finite(&self) -> CliResult<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if !row.is_finite() {
                return Err(CliError::new(
                    "NON_FINITE",
                    format!(
                        "row {} ({} {}) has a non-finite value",
                        i + 1,
                        row.command,
                        row.case
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# {SCHEMA}\n");
        for (k, v) in &self.header {
            out.push_str(&format!("# {k}={}\n", v.replace('\n', " ")));
        }
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let header: Map<String, Value> = self
            .header
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let doc = serde_json::json!({
            "schema": SCHEMA,
            "header": header,
            "columns": COLUMNS,
            "rows": self.rows,
            "summary": self.summary,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("finite rows serialize");
        s.push('\n');
        s
    }
}

/// Path of the JSON summary written next to `csv`.
pub fn json_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::new("OUTPUT_IO", format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// A parsed result file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub schema: String,
    pub header: Vec<(String, String)>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedCsv {
    pub fn column(&self, name: &str) -> Option<usize> {
        COLUMNS.iter().position(|c| *c == name)
    }

    /// Numeric cell, `None` when empty.
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        let cell = &self.rows[row][self.column(name)?];
        if cell.is_empty() {
            None
        } else {
            cell.parse().ok()
        }
    }

    pub fn text(&self, row: usize, name: &str) -> &str {
        &self.rows[row][self.column(name).expect("known column")]
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Parses a file produced by [`Report::to_csv`], checking the schema and
/// column row.
pub fn parse_csv(text: &str) -> CliResult<ParsedCsv> {
    let bad = |m: String| CliError::new("RESULT_PARSE", m);
    let mut lines = text.lines();
    let schema = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| bad("missing schema line".into()))?
        .to_string();
    if schema != SCHEMA {
        return Err(bad(format!("unknown schema `{schema}`")));
    }
    let mut header = Vec::new();
    let mut columns = None;
    for line in lines.by_ref() {
        if let Some(entry) = line.strip_prefix("# ") {
            let (k, v) = entry
                .split_once('=')
                .ok_or_else(|| bad(format!("bad header line `{line}`")))?;
            header.push((k.to_string(), v.to_string()));
        } else {
            columns = Some(line);
            break;
        }
    }
    if columns != Some(COLUMNS.join(",").as_str()) {
        return Err(bad(format!("unexpected column row {columns:?}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let cells = split_csv(line);
        if cells.len() != COLUMNS.len() {
            return Err(bad(format!("row has {} cells: `{line}`", cells.len())));
        }
        rows.push(cells);
    }
    Ok(ParsedCsv {
        schema,
        header,
        rows,
    })
}

fn split_csv(line: &str) -> Vec<String> {
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => cells.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    cells.push(cur);
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            ResultRow::new("wick-check", "e0,e0", 7)
                .alpha(0.1)
                .compare(3.0, 2.5),
            ResultRow::new("wick-check", "x", 7).exact(1e-300),
        ];
        let report = Report {
            header: vec![("seed".into(), "7".into())],
            rows,
            summary: Map::new(),
        };
        let parsed = parse_csv(&report.to_csv()).unwrap();
        assert_eq!(parsed.header_value("seed"), Some("7"));
        assert_eq!(parsed.text(0, "case"), "e0,e0");
        assert_eq!(parsed.value(0, "residual"), Some(0.5));
        assert_eq!(parsed.value(1, "exact_value"), Some(1e-300));
        assert_eq!(parsed.value(1, "mc_estimate"), None);
        let json: Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["rows"][0]["residual"], 0.5);
        assert_eq!(json["rows"][1]["slope"], Value::Null);
    }

    #[test]
    fn non_finite_rows_are_rejected() {
        let report = Report {
            header: vec![],
            rows: vec![ResultRow::new("c", "x", 0).exact(f64::NAN)],
            summary: Map::new(),
        };
        assert_eq!(report.check_finite().unwrap_err().code, "NON_FINITE");
    }
}
