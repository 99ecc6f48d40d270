//! Deterministic CSV tables: a `# config:` comment line, a header row, then
//! records with fixed 17-significant-digit float formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path, config: &Value) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", path.display()));
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut file = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(file, "# config: {config}").map_err(io)?;
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut file);
            let csv_err = |e: csv::Error| CliError::Config(format!("cannot write {}: {e}", path.display()));
            w.write_record(&self.header).map_err(csv_err)?;
            for row in &self.rows {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
        file.flush().map_err(io)
    }
}

/// `dir/stem.ext` -> `dir/stem_<suffix>.csv`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_roundtrips() {
        for x in [0.5, 1.0 / 3.0, 6.78e-5, -1.2345678901234567e200, 0.0] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(
            sibling(Path::new("runs/a.csv"), "summary"),
            PathBuf::from("runs/a_summary.csv")
        );
        assert_eq!(sibling(Path::new("b"), "matrices"), PathBuf::from("b_matrices.csv"));
    }

    #[test]
    fn writes_comment_then_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("t.csv");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), float(2.0)]);
        t.write(&path, &serde_json::json!({"k": 1})).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# config: {\"k\":1}\na,b\n1,2.0000000000000000e0\n");
    }
}
