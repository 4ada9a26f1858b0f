//! Writes a table as CSV and, when asked, as JSON records.

use std::path::{Path, PathBuf};

use fqe_core::export::{write_csv, write_json, Metadata};
use fqe_core::scenario::OutputFormat;
use fqe_core::Result;
use serde_json::{Map, Number, Value};

pub struct Sink {
    pub dir: PathBuf,
    pub stem: String,
    pub formats: Vec<OutputFormat>,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, stem: &str, formats: &[OutputFormat]) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            stem: stem.to_string(),
            formats: formats.to_vec(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{}_{suffix}.{ext}", self.stem))
    }

    /// Records a file written by one of the typed CSV writers.
    pub fn note(&mut self, p: PathBuf) {
        self.written.push(p);
    }

    pub fn table(
        &mut self,
        suffix: &str,
        meta: &Metadata,
        header: &[String],
        rows: &[Vec<String>],
    ) -> Result<()> {
        for f in self.formats.clone() {
            let p = match f {
                OutputFormat::Csv => {
                    let p = self.path(suffix, "csv");
                    write_csv(&p, meta, header, rows)?;
                    p
                }
                OutputFormat::Json => {
                    let p = self.path(suffix, "json");
                    write_json(&p, meta, &records(header, rows))?;
                    p
                }
            };
            self.written.push(p);
        }
        Ok(())
    }
}

/// Rows as objects keyed by column; numeric cells become JSON numbers and
/// empty cells null.
pub fn records(header: &[String], rows: &[Vec<String>]) -> Vec<Value> {
    rows.iter()
        .map(|r| {
            let obj: Map<String, Value> = header
                .iter()
                .zip(r)
                .map(|(h, cell)| {
                    let v = if cell.is_empty() {
                        Value::Null
                    } else if let Ok(i) = cell.parse::<i64>() {
                        Value::from(i)
                    } else {
                        match cell.parse::<f64>().ok().and_then(Number::from_f64) {
                            Some(n) => Value::Number(n),
                            None => Value::String(cell.clone()),
                        }
                    };
                    (h.clone(), v)
                })
                .collect();
            Value::Object(obj)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_type_cells() {
        let h = vec!["a".to_string(), "b".into(), "c".into()];
        let r = vec![vec!["1".to_string(), "".into(), "2.5".into()]];
        let v = records(&h, &r);
        assert_eq!(v[0]["a"], 1);
        assert!(v[0]["b"].is_null());
        assert_eq!(v[0]["c"], 2.5);
    }
}
