use std::path::Path;

use crate::error::{CdnError, Result};

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn from_rows<I: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: I) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: rows.into_iter().collect() }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CdnError::Io { path: "<memory>".into(), msg: e.to_string() };
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CdnError::Io { path: "<memory>".into(), msg: e.to_string() })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| CdnError::Io { path: path.display().to_string(), msg: e.to_string() })
    }

    /// Values of the named column.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c].as_str()).collect())
    }
}
