//! Column tables written as delimited text plus a JSON sidecar, or as one JSON document.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use returnlaw::numeric::format_f64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Int(Vec<i64>),
    Count(Vec<u64>),
    Real(Vec<f64>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Int(v) => v.len(),
            Column::Count(v) => v.len(),
            Column::Real(v) => v.len(),
        }
    }

    fn write_cell<W: Write>(&self, out: &mut W, row: usize) -> std::io::Result<()> {
        match self {
            Column::Int(v) => write!(out, "{}", v[row]),
            Column::Count(v) => write!(out, "{}", v[row]),
            Column::Real(v) => out.write_all(format_f64(v[row]).as_bytes()),
        }
    }

    fn json_cell(&self, row: usize) -> Value {
        match self {
            Column::Int(v) => v[row].into(),
            Column::Count(v) => v[row].into(),
            Column::Real(v) if v[row].is_finite() => v[row].into(),
            Column::Real(v) => format_f64(v[row]).into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub names: Vec<&'static str>,
    pub columns: Vec<Column>,
    pub meta: Map<String, Value>,
}

impl Table {
    pub fn new(names: Vec<&'static str>, columns: Vec<Column>) -> Self {
        assert_eq!(names.len(), columns.len());
        debug_assert!(columns.windows(2).all(|w| w[0].len() == w[1].len()));
        Self {
            names,
            columns,
            meta: Map::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.meta
            .insert(key.to_owned(), serde_json::to_value(value).expect("metadata serializes"));
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn write_delimited<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", self.names.join(","))?;
        for row in 0..self.rows() {
            for (i, c) in self.columns.iter().enumerate() {
                if i > 0 {
                    out.write_all(b",")?;
                }
                c.write_cell(out, row)?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = (0..self.rows())
            .map(|r| Value::Array(self.columns.iter().map(|c| c.json_cell(r)).collect()))
            .collect();
        let mut doc = self.meta.clone();
        doc.insert("columns".into(), self.names.clone().into());
        doc.insert("rows".into(), Value::Array(rows));
        Value::Object(doc)
    }
}

/// Path of the metadata sidecar written next to a delimited table.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn create(path: &Path, stage: &'static str) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(stage, dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(stage, path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize, stage: &'static str) -> CliResult<()> {
    let mut out = create(path, stage)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::compute(stage, e))?;
    text.push('\n');
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(stage, path, e))
}

/// Writes `table` to `path` (or stdout without the sidecar) in the chosen format.
/// Returns the files written.
pub fn emit(table: &Table, path: Option<&Path>, format: OutputFormat, stage: &'static str) -> CliResult<Vec<PathBuf>> {
    match (path, format) {
        (None, OutputFormat::Csv) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table
                .write_delimited(&mut lock)
                .map_err(|e| CliError::compute(stage, format!("stdout: {e}")))?;
            Ok(Vec::new())
        }
        (None, OutputFormat::Json) => {
            println!("{}", serde_json::to_string_pretty(&table.to_json()).expect("table serializes"));
            Ok(Vec::new())
        }
        (Some(p), OutputFormat::Csv) => {
            let mut out = create(p, stage)?;
            table
                .write_delimited(&mut out)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(stage, p, e))?;
            let side = sidecar_path(p);
            write_json(&side, &table.meta, stage)?;
            Ok(vec![p.to_owned(), side])
        }
        (Some(p), OutputFormat::Json) => {
            write_json(p, &table.to_json(), stage)?;
            Ok(vec![p.to_owned()])
        }
    }
}

/// Numeric columns of a delimited table with a header row, keyed by name.
#[derive(Debug, Clone)]
pub struct ReadTable {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl ReadTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name))
            .map(|i| self.columns[i].as_slice())
    }

    /// The named column, or the column at `fallback` when no name is given.
    pub fn pick(&self, name: Option<&str>, fallback: usize, path: &Path, stage: &'static str) -> CliResult<&[f64]> {
        match name {
            Some(n) => self
                .column(n)
                .ok_or_else(|| CliError::input(stage, format!("{}: no column `{n}`", path.display()))),
            None => self.columns.get(fallback).map(Vec::as_slice).ok_or_else(|| {
                CliError::input(stage, format!("{}: expected at least {} columns", path.display(), fallback + 1))
            }),
        }
    }
}

/// Reads a numeric table (comma or tab delimited, header row required).
/// A `.json` file in the format written by [`emit`] is read as well.
pub fn read_numeric(path: &Path, stage: &'static str) -> CliResult<ReadTable> {
    let file = File::open(path).map_err(|e| CliError::io(stage, path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        return read_json_table(file, path, stage);
    }
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| CliError::io(stage, path, e))?,
        None => return Err(CliError::input(stage, format!("{}: empty file", path.display()))),
    };
    let delim = if header.contains('\t') { '\t' } else { ',' };
    let names: Vec<String> = header.split(delim).map(|s| s.trim().to_owned()).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| CliError::io(stage, path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delim).collect();
        if fields.len() != names.len() {
            return Err(CliError::input(
                stage,
                format!("{} line {}: expected {} fields, got {}", path.display(), i + 2, names.len(), fields.len()),
            ));
        }
        for (c, f) in columns.iter_mut().zip(fields) {
            let v = f.trim().parse::<f64>().map_err(|_| {
                CliError::input(stage, format!("{} line {}: invalid number `{}`", path.display(), i + 2, f.trim()))
            })?;
            c.push(v);
        }
    }
    Ok(ReadTable { names, columns })
}

fn read_json_table(file: File, path: &Path, stage: &'static str) -> CliResult<ReadTable> {
    let bad = |m: String| CliError::input(stage, format!("{}: {m}", path.display()));
    let doc: Value = serde_json::from_reader(BufReader::new(file)).map_err(|e| bad(e.to_string()))?;
    let names: Vec<String> = doc
        .get("columns")
        .and_then(|c| serde_json::from_value(c.clone()).ok())
        .ok_or_else(|| bad("missing `columns`".into()))?;
    let rows = doc
        .get("rows")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing `rows`".into()))?;
    let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
    for row in rows {
        let cells = row.as_array().filter(|r| r.len() == names.len()).ok_or_else(|| bad("ragged row".into()))?;
        for (c, v) in columns.iter_mut().zip(cells) {
            let x = match v {
                Value::Number(n) => n.as_f64(),
                Value::String(s) => s.parse().ok(),
                _ => None,
            }
            .ok_or_else(|| bad(format!("invalid cell {v}")))?;
            c.push(x);
        }
    }
    Ok(ReadTable { names, columns })
}

/// Reads the sidecar of a delimited table, if there is one.
pub fn read_sidecar(path: &Path) -> Option<Map<String, Value>> {
    let text = std::fs::read_to_string(sidecar_path(path)).ok()?;
    match serde_json::from_str(&text).ok()? {
        Value::Object(m) => Some(m),
        _ => None,
    }
}
