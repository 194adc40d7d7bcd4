//! Writers for the files a run leaves behind. Every CSV starts with one
//! comment line naming its schema and version.

use std::fmt::Display;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Collects the paths written during a run so the caller can report them.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, name: &str, contents: &str) -> io::Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> io::Result<()> {
        self.put(name, &table.render())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.put(name, &text)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> io::Result<()> {
        self.put(name, contents)
    }
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone)]
pub struct Table {
    schema: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(schema: &str, columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            schema: schema.to_string(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width for {}",
            self.schema
        );
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = format!("# schema={} version={}\n", self.schema, SCHEMA_VERSION);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-tripping decimal form, with −0 written as 0.
pub fn num(x: f64) -> String {
    (x + 0.0).to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

pub fn cell(x: impl Display) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_schema_line_then_header() {
        let mut t = Table::new("demo", ["a", "b"]);
        t.push(vec![num(0.1), opt(None)]);
        assert_eq!(t.render(), "# schema=demo version=1\na,b\n0.1,\n");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1e-300, 6.02e23, 1.0 / 3.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(-0.0), "0");
    }
}
