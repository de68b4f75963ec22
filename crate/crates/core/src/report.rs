//! CSV and JSON rendering of numeric tables.
//!
//! Numbers carry 12 significant digits. Every file embeds its metadata: as
//! `# key = value` comment lines ahead of the CSV header, or as a
//! `metadata` object in JSON. Map keys are emitted in sorted order so a
//! rerun reproduces the file byte for byte.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::montecarlo::SweepResult;

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A rectangular table of numbers with metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Value,
}

impl Table {
    pub fn new(columns: &[&str], metadata: Value) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut lines = Vec::new();
        flatten("", &self.metadata, &mut lines);
        for (key, value) in lines {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_significant(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let record: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, &x)| (c.clone(), rounded_number(x)))
                    .collect();
                Value::Object(record)
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("columns".into(), Value::from(self.columns.clone()));
        doc.insert("metadata".into(), self.metadata.clone());
        doc.insert("rows".into(), Value::Array(rows));
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("tables always serialise");
        text.push('\n');
        text
    }
}

impl From<&SweepResult> for Table {
    fn from(result: &SweepResult) -> Self {
        let mut metadata = serde_json::to_value(&result.metadata).expect("sweep specs always serialise");
        if let Value::Object(map) = &mut metadata {
            map.insert("abscissa".into(), Value::from(result.abscissa_name.clone()));
            map.insert("clt_warning".into(), Value::from(result.clt_warning));
        }
        let mut table = Table::new(&["x", "analytic", "empirical", "std_error"], metadata);
        for row in &result.rows {
            table.push(vec![row.x, row.analytic, row.empirical, row.std_error]);
        }
        table
    }
}

/// `x` with 12 significant digits, in plain decimal unless the exponent is
/// outside `[-5, 12)`.
pub fn format_significant(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let scientific = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let exponent: i32 = scientific[scientific.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exponent) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exponent) as usize;
        format!("{x:.decimals$}")
    } else {
        scientific
    }
}

fn rounded_number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::from(format_significant(x));
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap();
    Value::from(rounded)
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) if items.iter().all(|v| !v.is_object()) => {
            let parts: Vec<String> = items.iter().map(scalar_text).collect();
            out.push((prefix.to_string(), format!("[{}]", parts.join(", "))));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        other => out.push((prefix.to_string(), scalar_text(other))),
    }
}

fn scalar_text(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format_significant(x),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(0.0), "0");
        assert_eq!(format_significant(1.0), "1.00000000000");
        assert_eq!(format_significant(0.123456789012345), "0.123456789012");
        assert_eq!(format_significant(-12.5), "-12.5000000000");
        assert_eq!(format_significant(9.99999999999951), "10.0000000000");
        assert_eq!(format_significant(1.5e-7), "1.50000000000e-7");
        assert_eq!(format_significant(2.0e13), "2.00000000000e13");
        assert_eq!(format_significant(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let mut table = Table::new(&["x", "y"], json!({"seed": 42, "noise": {"v": 0.5, "gaussian": false}}));
        table.push(vec![1.0, 0.25]);
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# noise.gaussian = false");
        assert_eq!(lines[1], "# noise.v = 0.500000000000");
        assert_eq!(lines[2], "# seed = 42");
        assert_eq!(lines[3], "x,y");
        assert_eq!(lines[4], "1.00000000000,0.250000000000");
    }

    #[test]
    fn json_layout() {
        let mut table = Table::new(&["x", "y"], json!({"seed": 1}));
        table.push(vec![0.1234567890123456, 2.0]);
        let doc: Value = serde_json::from_str(&table.to_json()).unwrap();
        assert_eq!(doc["rows"][0]["x"], json!(0.123456789012));
        assert_eq!(doc["metadata"]["seed"], json!(1));
        assert_eq!(doc["columns"], json!(["x", "y"]));
    }
}
