//! Row tables and their CSV / JSON renderings.

use serde_json::{Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    /// Natural-log probability; `--linear` maps it through `exp`.
    LogProb(f64),
    Bool(bool),
    Text(&'static str),
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &'static [&'static str]) -> Self {
        Self {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.headers.len(), "row width must match header");
        self.rows.push(row);
    }

    /// Converts every log-probability cell to a plain probability.
    pub fn linearize(&mut self) {
        for cell in self.rows.iter_mut().flatten() {
            if let Cell::LogProb(v) = *cell {
                *cell = Cell::Num(v.exp());
            }
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.headers.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(csv_field).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .headers
                    .iter()
                    .zip(row)
                    .map(|(h, c)| (h.to_string(), json_value(c)))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut text =
            serde_json::to_string_pretty(&Value::Array(rows)).expect("table values serialize");
        text.push('\n');
        text
    }
}

/// Shortest round-trip decimal, in scientific form outside `[1e-4, 1e16)`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn csv_field(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Num(v) | Cell::LogProb(v) => format_float(*v),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => s.to_string(),
        Cell::Empty => String::new(),
    }
}

fn json_value(cell: &Cell) -> Value {
    match cell {
        Cell::Int(v) => Value::from(*v),
        Cell::Num(v) | Cell::LogProb(v) => match serde_json::Number::from_f64(*v) {
            Some(num) => Value::Number(num),
            None => Value::String(format_float(*v)),
        },
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Text(s) => Value::String(s.to_string()),
        Cell::Empty => Value::Null,
    }
}
