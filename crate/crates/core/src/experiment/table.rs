//! Tidy tables written as CSV or JSON.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::TraceRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

/// One value of one metric for a sweep cell. Absent coordinates are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub beta: Option<f64>,
    pub p: Option<f64>,
    pub realization: Option<usize>,
    pub metric_name: String,
    pub value: f64,
}

impl SweepRecord {
    pub fn new(beta: Option<f64>, p: Option<f64>, realization: Option<usize>, metric: &str, value: f64) -> Self {
        Self {
            beta,
            p,
            realization,
            metric_name: metric.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Int(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Empty => serde_json::Value::Null,
            Cell::Int(v) => (*v).into(),
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Text(s) => s.clone().into(),
        }
    }
}

fn opt_float(v: Option<f64>) -> Cell {
    v.map_or(Cell::Empty, Cell::Float)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut out: W, format: Format) -> Result<()> {
        let io = |e| Error::io(Path::new("<output>"), e);
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush().map_err(io)?;
            }
            Format::Json => {
                // objects keep the column order
                writeln!(out, "[").map_err(io)?;
                for (k, row) in self.rows.iter().enumerate() {
                    let fields: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| format!("{}:{}", serde_json::Value::from(c.as_str()), v.json()))
                        .collect();
                    let sep = if k + 1 == self.rows.len() { "" } else { "," };
                    writeln!(out, "  {{{}}}{sep}", fields.join(",")).map_err(io)?;
                }
                writeln!(out, "]").map_err(io)?;
            }
        }
        Ok(())
    }

    pub fn to_string(&self, format: Format) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf, format)?;
        String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))
    }
}

impl From<&[SweepRecord]> for Table {
    fn from(records: &[SweepRecord]) -> Self {
        let mut t = Table::new(&["beta", "p", "realization", "metric_name", "value"]);
        for r in records {
            t.push(vec![
                opt_float(r.beta),
                opt_float(r.p),
                r.realization.map_or(Cell::Empty, |v| Cell::Int(v as u64)),
                Cell::Text(r.metric_name.clone()),
                Cell::Float(r.value),
            ]);
        }
        t
    }
}

impl From<&[TraceRow]> for Table {
    fn from(rows: &[TraceRow]) -> Self {
        let mut t = Table::new(&["iteration", "width", "g_mid", "g_upper"]);
        for r in rows {
            t.push(vec![
                Cell::Int(r.iteration as u64),
                Cell::Float(r.width),
                Cell::Float(r.g_mid),
                Cell::Float(r.g_upper),
            ]);
        }
        t
    }
}

/// Writes `table` to `path`, or to stdout when `path` is `None`.
pub fn emit(table: &Table, path: Option<&Path>, format: Format) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
            let mut w = std::io::BufWriter::new(file);
            table.write(&mut w, format)?;
            w.flush().map_err(|e| Error::io(p, e))
        }
        None => table.write(std::io::stdout().lock(), format),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<SweepRecord> {
        vec![
            SweepRecord::new(None, None, None, "baseline_accuracy", 0.97),
            SweepRecord::new(Some(0.01), None, Some(3), "accuracy", 0.5),
        ]
    }

    #[test]
    fn csv_leaves_absent_coordinates_empty() {
        let s = Table::from(records().as_slice()).to_string(Format::Csv).unwrap();
        assert_eq!(
            s,
            "beta,p,realization,metric_name,value\n,,,baseline_accuracy,0.97\n0.01,,3,accuracy,0.5\n"
        );
    }

    #[test]
    fn json_round_trips_into_records() {
        let recs = records();
        let s = Table::from(recs.as_slice()).to_string(Format::Json).unwrap();
        let back: Vec<SweepRecord> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, recs);
        let raw: Vec<serde_json::Map<String, serde_json::Value>> = serde_json::from_str(&s).unwrap();
        let keys: Vec<&String> = raw[0].keys().collect();
        assert_eq!(keys.len(), 5);
        assert!(s.find("\"beta\"").unwrap() < s.find("\"value\"").unwrap());
    }

    #[test]
    fn empty_table_is_valid_json() {
        let t = Table::new(&["a"]);
        let s = t.to_string(Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v, serde_json::json!([]));
    }
}
