//! The per-row diagnostics CSV. Columns are fixed; a diagnostic that is off or
//! undefined at a row leaves its cell empty.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{LabError, Result};

pub const COLUMNS: [&str; 20] = [
    "t",
    "dt",
    "vol",
    "R_min",
    "R_max",
    "R_avg",
    "diam",
    "f_min",
    "f_max",
    "grad_f_sup",
    "mu",
    "W",
    "a_t",
    "futaki_re",
    "futaki_im",
    "kappa_min",
    "harnack_slack_min",
    "bisec_min",
    "res_eq2_10",
    "res_eq2_9",
];

/// Written as the last line of a run that stopped early.
pub const TRUNCATION_MARKER: &str = "# truncated";

/// Cells in [`COLUMNS`] order.
pub type Row = [Option<f64>; 20];

pub fn column(name: &str) -> usize {
    COLUMNS.iter().position(|c| *c == name).expect("known column")
}

/// Shortest round-trip exponent form, so equal values always print equal bytes.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn format_row(row: &Row) -> String {
    row.iter().map(|v| cell(*v)).collect::<Vec<_>>().join(",")
}

pub struct CsvWriter {
    out: BufWriter<File>,
    path: String,
    pub rows: usize,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let file = File::create(path).map_err(|e| LabError::io(format!("creating {name}"), e))?;
        let mut w = CsvWriter { out: BufWriter::new(file), path: name, rows: 0 };
        w.line(&COLUMNS.join(","))?;
        w.flush()?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| LabError::io(format!("writing {}", self.path), e))
    }

    pub fn push(&mut self, row: &Row) -> Result<()> {
        self.rows += 1;
        self.line(&format_row(row))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| LabError::io(format!("flushing {}", self.path), e))
    }

    pub fn truncate(&mut self, reason: &str) -> Result<()> {
        let reason = reason.replace('\n', " ");
        self.line(&format!("{TRUNCATION_MARKER}: {reason}"))?;
        self.flush()
    }
}

/// Parsed CSV: rows of cells plus the truncation reason if present.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub rows: Vec<Row>,
    pub truncated: Option<String>,
}

impl Table {
    pub fn column(&self, name: &str) -> Vec<Option<f64>> {
        let k = column(name);
        self.rows.iter().map(|r| r[k]).collect()
    }
}

pub fn read_table(text: &str) -> Result<Table> {
    let bad = |m: String| LabError::Stage { stage: "csv", message: m };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    if header != COLUMNS.join(",") {
        return Err(bad(format!("unexpected header '{header}'")));
    }
    let mut rows = Vec::new();
    let mut truncated = None;
    for (k, line) in lines.enumerate() {
        if let Some(rest) = line.strip_prefix(TRUNCATION_MARKER) {
            truncated = Some(rest.trim_start_matches(':').trim().to_string());
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != COLUMNS.len() {
            return Err(bad(format!("row {} has {} cells", k + 1, cells.len())));
        }
        let mut row: Row = [None; 20];
        for (slot, c) in row.iter_mut().zip(cells) {
            if !c.is_empty() {
                *slot = Some(c.parse().map_err(|_| bad(format!("row {}: bad cell '{c}'", k + 1)))?);
            }
        }
        rows.push(row);
    }
    Ok(Table { rows, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_round_trip_and_blanks_keep_their_place() {
        let mut row: Row = [None; 20];
        row[0] = Some(0.1);
        row[3] = Some(-1e-300);
        row[19] = Some(1.0 / 3.0);
        let line = format_row(&row);
        assert_eq!(line.matches(',').count(), 19);
        assert!(line.starts_with("1e-1,,,-1e-300,"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut w = CsvWriter::create(&path).unwrap();
        w.push(&row).unwrap();
        w.truncate("stopped\nhere").unwrap();
        drop(w);
        let t = read_table(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(t.rows, vec![row]);
        assert_eq!(t.truncated.as_deref(), Some("stopped here"));
        assert_eq!(t.column("res_eq2_9"), vec![Some(1.0 / 3.0)]);
    }
}
