//! CSV and JSON writers. Floats are printed with 17 significant digits in
//! scientific notation so every value round-trips exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table held in memory; rows are written with LF endings only.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.columns, "row width must match the header");
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{}", format_f64(*v)).expect("writing to a String");
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    write_file(path, &text)
}

/// Written next to every command's outputs as `<command>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub command: String,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub version: String,
    pub duration_s: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_dot_separator() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, f64::MIN_POSITIVE] {
            let s = format_f64(x);
            assert!(!s.contains(','));
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_layout() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&[1.0, 2.0]);
        assert_eq!(csv.as_str(), "a,b\n1.0000000000000000e0,2.0000000000000000e0\n");
        assert!(!csv.as_str().contains('\r'));
    }
}
