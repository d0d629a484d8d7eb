//! Report assembly and atomic artifact output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Failure;

pub const VERSION: &str = concat!("bhl ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Debug, Default)]
pub struct Checks(pub Vec<Check>);

impl Checks {
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.push(name.into(), value, "<=", limit, value <= limit);
    }

    pub fn at_least(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.push(name.into(), value, ">=", limit, value >= limit);
    }

    pub fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name.into(), f64::from(u8::from(ok)), "==", 1.0, ok);
    }

    fn push(&mut self, name: String, value: f64, relation: &'static str, limit: f64, passed: bool) {
        self.0.push(Check { name, value, relation, limit, passed });
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.0.iter().filter(|c| !c.passed)
    }
}

/// What a subcommand hands back before the report is assembled.
#[derive(Debug, Default)]
pub struct Outcome {
    pub observed_orders: BTreeMap<String, f64>,
    pub checks: Checks,
    pub results: Value,
}

#[derive(Serialize)]
pub struct Report<'a, C: Serialize> {
    pub subcommand: &'a str,
    pub version: &'a str,
    pub threads: usize,
    pub config: &'a C,
    pub observed_orders: &'a BTreeMap<String, f64>,
    pub checks: &'a [Check],
    pub passed: bool,
    pub results: &'a Value,
}

/// `log2(coarse / fine)` for an error that halves its step.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let fail = |source| Failure::Unwritable { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| {
        fail(std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))
    })?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(contents.as_bytes())?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(fail(e));
    }
    Ok(())
}

/// CSV text with a header row, `\n` line endings and round-trip floats.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        write_atomic(path, &self.text)
    }
}

pub enum Cell {
    Int(i64),
    Float(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:?}"),
        }
    }
}
