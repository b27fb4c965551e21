//! Command reports and their text and JSON renderings.

use std::fmt::Write as _;

use qcr_core::{HermitianOperator, RMatrix, RVector};
use serde_json::{Map, Value};

use crate::json;

/// Finite floats become numbers; NaN and infinities become `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn vector(v: &RVector) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn matrix(m: &RMatrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|&x| num(x)).collect()))
            .collect(),
    )
}

pub fn operator(h: &HermitianOperator) -> Value {
    let m = h.matrix();
    let mut out = Map::new();
    out.insert("re".into(), matrix(&m.map(|z| z.re)));
    out.insert("im".into(), matrix(&m.map(|z| z.im)));
    Value::Object(out)
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub args: Vec<String>,
    pub model: Map<String, Value>,
    pub results: Map<String, Value>,
    pub status: String,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Self {
            command: command.into(),
            args,
            model: Map::new(),
            results: Map::new(),
            status: "ok".into(),
            wall_time_s: 0.0,
        }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.results.insert(key.into(), value);
    }

    pub fn to_value(&self) -> Value {
        let mut command = Map::new();
        command.insert("name".into(), Value::String(self.command.clone()));
        command.insert(
            "args".into(),
            Value::Array(self.args.iter().cloned().map(Value::String).collect()),
        );
        let mut out = Map::new();
        out.insert("command".into(), Value::Object(command));
        out.insert("model".into(), Value::Object(self.model.clone()));
        out.insert("results".into(), Value::Object(self.results.clone()));
        out.insert("status".into(), Value::String(self.status.clone()));
        out.insert("wall_time_s".into(), num(self.wall_time_s));
        Value::Object(out)
    }

    pub fn to_json(&self) -> String {
        json::to_string(&self.to_value()).expect("report values are serializable")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        for (key, value) in &self.model {
            render(&mut out, &format!("model.{key}"), value);
        }
        for (key, value) in &self.results {
            render(&mut out, key, value);
        }
        let _ = writeln!(out, "status: {}", self.status);
        let _ = writeln!(out, "wall time: {:.3} s", self.wall_time_s);
        out
    }
}

fn scalar(value: &Value) -> String {
    match value {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            format!("[{}]", parts.join(", "))
        }
        other => other.to_string(),
    }
}

fn is_matrix(value: &Value) -> bool {
    matches!(value, Value::Array(rows) if !rows.is_empty() && rows.iter().all(Value::is_array))
}

fn render(out: &mut String, key: &str, value: &Value) {
    match value {
        Value::Object(map) => {
            for (sub, v) in map {
                render(out, &format!("{key}.{sub}"), v);
            }
        }
        v if is_matrix(v) => {
            let _ = writeln!(out, "{key}:");
            for row in v.as_array().into_iter().flatten() {
                let _ = writeln!(out, "  {}", scalar(row));
            }
        }
        v => {
            let _ = writeln!(out, "{key}: {}", scalar(v));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_values_are_null() {
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(num(f64::INFINITY), Value::Null);
        assert!(num(1.5).is_number());
    }

    #[test]
    fn text_lists_results() {
        let mut r = Report::new("bound", vec![]);
        r.set("random_bound", num(7.84));
        r.set("j", matrix(&RMatrix::identity(2, 2)));
        let text = r.to_text();
        assert!(text.contains("random_bound: 7.84"));
        assert!(text.contains("j:\n  [1.0, 0.0]\n  [0.0, 1.0]"));
    }

    #[test]
    fn json_has_sorted_top_level_keys() {
        let text = Report::new("info", vec!["qcr".into()]).to_json();
        let keys = [
            "\"command\"",
            "\"model\"",
            "\"results\"",
            "\"status\"",
            "\"wall_time_s\"",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }
}
