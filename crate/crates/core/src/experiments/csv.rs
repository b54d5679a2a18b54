use std::path::Path;

use crate::{Error, Result};

pub const CSV_HEADER: &str = "# polyvem-mhd csv v1";

/// A named CSV file held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut buf = format!("{CSV_HEADER}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut buf);
            w.write_record(&self.columns).expect("writing to memory");
            for row in &self.rows {
                w.write_record(row).expect("writing to memory");
            }
            w.flush().expect("writing to memory");
        }
        String::from_utf8(buf).expect("fields are UTF-8")
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let path = dir.join(&self.name);
        std::fs::write(&path, self.render()).map_err(|e| Error::io(path, e))
    }
}

/// Full precision, fixed layout: identical values give identical bytes.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Empty cell for a missing value.
pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
