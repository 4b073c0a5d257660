//! CSV output with metadata comment lines.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // 17 significant digits
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvReport {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Comment lines written before the header, without the leading `# `.
    pub metadata: Vec<String>,
}

pub const TIMESTAMP_PREFIX: &str = "timestamp: ";

pub fn version_string() -> String {
    format!("rrlab-v{}", env!("CARGO_PKG_VERSION"))
}

impl CsvReport {
    pub fn new(header: &[&str]) -> Self {
        CsvReport { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), metadata: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Shape(format!("row of {} cells under {} columns", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn meta(&mut self, line: impl Into<String>) {
        self.metadata.push(line.into());
    }

    /// Config echo, version, seed and a timestamp.
    pub fn stamp(&mut self, echo: &[String], seed: u64) {
        for line in echo {
            self.meta(format!("config: {line}"));
        }
        self.meta(format!("version: {}", version_string()));
        self.meta(format!("seed: {seed}"));
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        self.meta(format!("{TIMESTAMP_PREFIX}{secs}"));
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[j]).collect())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.metadata {
            let _ = writeln!(out, "# {m}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_significant_digits() {
        let mut r = CsvReport::new(&["n", "x"]);
        r.push(vec![3usize.into(), 0.1.into()]).unwrap();
        let text = r.render();
        assert_eq!(text, "n,x\n3,1.0000000000000001e-1\n");
        let parsed: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, 0.1);
    }

    #[test]
    fn rows_must_be_rectangular() {
        let mut r = CsvReport::new(&["a", "b"]);
        assert!(r.push(vec![1.0.into()]).is_err());
    }

    #[test]
    fn metadata_precedes_header() {
        let mut r = CsvReport::new(&["a"]);
        r.stamp(&["nx=4".to_string()], 7);
        let text = r.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config: nx=4");
        assert!(lines.contains(&"# seed: 7"));
        assert!(lines.iter().any(|l| l.starts_with("# timestamp: ")));
        assert_eq!(*lines.last().unwrap(), "a");
    }
}
