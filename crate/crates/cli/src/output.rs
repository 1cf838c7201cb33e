use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

/// Decimal string of `x` rounded to 15 significant digits.
pub fn fmt15(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
    rounded.to_string()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt15(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<u128> for Cell {
    fn from(v: u128) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub observed: Value,
    pub bound: Value,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failing: Vec<String>,
}

impl Assertion {
    pub fn new(observed: impl Into<Value>, bound: impl Into<Value>, pass: bool) -> Self {
        Self {
            observed: observed.into(),
            bound: bound.into(),
            pass,
            failing: Vec::new(),
        }
    }

    pub fn at_most(observed: f64, bound: f64) -> Self {
        Self::new(num(observed), num(bound), observed <= bound)
    }

    pub fn with_failing(mut self, failing: Vec<String>) -> Self {
        self.failing = failing;
        self
    }
}

/// JSON number, or the decimal string for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub assertions: BTreeMap<String, Assertion>,
    pub summary: BTreeMap<String, Value>,
}

impl Outcome {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            ..Default::default()
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn assert(&mut self, name: &str, a: Assertion) {
        self.assertions.insert(name.to_string(), a);
    }

    pub fn note(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_string(), v.into());
    }

    pub fn passed(&self) -> bool {
        self.assertions.values().all(|a| a.pass)
    }

    pub fn csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }

    pub fn json(&self, experiment: &str, config: &Value) -> Value {
        json!({
            "experiment": experiment,
            "config": config,
            "assertions": self.assertions,
            "summary": self.summary,
            "pass": self.passed(),
        })
    }

    /// Writes `<experiment>.csv` and `<experiment>.json`, returning their paths.
    pub fn write(&self, dir: &Path, experiment: &str, config: &Value) -> io::Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{experiment}.csv"));
        let json_path = dir.join(format!("{experiment}.json"));
        fs::write(&csv_path, self.csv()?)?;
        let mut text = serde_json::to_string_pretty(&self.json(experiment, config))?;
        text.push('\n');
        fs::write(&json_path, text)?;
        Ok((csv_path, json_path))
    }
}
