//! CSV and JSON writers. Every file carries the library version and the
//! configuration hash; nothing run-dependent (time, thread count) is written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Writer {
    dir: PathBuf,
    config_hash: String,
}

/// Shortest round-trip decimal; `nan`/`inf` spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

/// JSON number, or `null` for non-finite values.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub enum Cell {
    F(f64),
    U(usize),
    B(bool),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }
}

impl Writer {
    pub fn new(dir: &Path, config_hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            config_hash,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn header_line(&self) -> String {
        format!("# kerrnoise {VERSION} config-sha256 {}", self.config_hash)
    }

    pub fn csv_string(&self, columns: &[&str], rows: &[Vec<Cell>]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header_line());
        let _ = writeln!(out, "{}", columns.join(","));
        for row in rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn csv(&self, name: &str, columns: &[&str], rows: &[Vec<Cell>]) -> Result<PathBuf, CliError> {
        self.write(name, &self.csv_string(columns, rows))
    }

    /// Writes `body` (an object) with `version` and `config_sha256` prepended.
    pub fn json(&self, name: &str, body: Value) -> Result<PathBuf, CliError> {
        let mut obj = Map::new();
        obj.insert("version".into(), json!(VERSION));
        obj.insert("config_sha256".into(), json!(self.config_hash));
        if let Value::Object(m) = body {
            obj.extend(m);
        } else {
            obj.insert("data".into(), body);
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON values serialize");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn svg(&self, name: &str, svg: String) -> Result<PathBuf, CliError> {
        let tagged = svg.replacen(
            "<svg ",
            &format!("<!-- kerrnoise {VERSION} config-sha256 {} -->\n<svg ", self.config_hash),
            1,
        );
        self.write(name, &tagged)
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_print_shortest_round_trip() {
        for v in [0.1, 1e-300, 2.0 / 3.0, 1.0, 12345.678] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(1.0), "1.0");
    }

    #[test]
    fn csv_has_header_and_quotes() {
        let w = Writer {
            dir: PathBuf::new(),
            config_hash: "abc".into(),
        };
        let s = w.csv_string(&["a", "b"], &[vec![Cell::F(0.5), Cell::S("x, y".into())]]);
        assert_eq!(s, format!("# kerrnoise {VERSION} config-sha256 abc\na,b\n0.5,\"x, y\"\n"));
    }
}
